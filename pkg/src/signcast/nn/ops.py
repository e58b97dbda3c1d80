"""Core tensor operations: activations, convolutions, loss, SGD step.

Everything here is a pure function over NumPy arrays (float32 in the
production path, float64 when checking gradients). Spatial tensors are
HWC, or NHWC when batched; dense inputs are vectors or (batch, n) rows.
"""

import numpy as np

from . import kernels

PADDING_MODES = ("valid", "same")


def relu(x):
    """Elementwise max(0, x); shape and dtype preserved."""
    return np.maximum(x, 0)


def softmax(z):
    """Row-wise softmax over the last axis, computed shift-invariantly.

    Accepts a single logits vector or a batch of rows; requires at least
    two classes.
    """
    z = np.asarray(z)
    if z.shape[-1] < 2:
        raise ValueError(f"softmax needs at least 2 logits, got {z.shape[-1]}")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def same_padding(size, kernel, stride):
    """(before, after) padding so that output size = ceil(size / stride)."""
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    before = total // 2
    return before, total - before


def _pad_input(x, kh, kw, stride, padding):
    if padding not in PADDING_MODES:
        raise ValueError(f"padding must be one of {PADDING_MODES}, got {padding!r}")
    h, w = x.shape[1], x.shape[2]
    if padding == "same":
        pt, pb = same_padding(h, kh, stride)
        pl, pr = same_padding(w, kw, stride)
        if pt or pb or pl or pr:
            x = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
        return x, (pt, pl)
    if kh > h or kw > w:
        raise ValueError(
            f"kernel {kh}x{kw} does not fit {h}x{w} input with valid padding"
        )
    return x, (0, 0)


def _batched(x):
    x = np.asarray(x)
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected HWC or NHWC input, got ndim={x.ndim}")


def conv2d(x, w, b=None, stride=1, padding="valid"):
    """Cross-correlation of HWC (or NHWC) input with kernels (kh,kw,C,F)."""
    xb, squeeze = _batched(x)
    if xb.shape[3] != w.shape[2]:
        raise ValueError(
            f"input has {xb.shape[3]} channels but kernels expect {w.shape[2]}"
        )
    padded, _ = _pad_input(xb, w.shape[0], w.shape[1], stride, padding)
    y = kernels.conv2d_forward(padded, w, b, stride)
    return y[0] if squeeze else y


def depthwise_conv2d(x, w, b=None, stride=1, padding="valid"):
    """Per-channel cross-correlation: kernels (kh,kw,C), no channel mixing."""
    xb, squeeze = _batched(x)
    if xb.shape[3] != w.shape[2]:
        raise ValueError(
            f"input has {xb.shape[3]} channels but kernels expect {w.shape[2]}"
        )
    padded, _ = _pad_input(xb, w.shape[0], w.shape[1], stride, padding)
    y = kernels.depthwise_forward(padded, w, b, stride)
    return y[0] if squeeze else y


def global_average_pool(x):
    """Per-channel mean of an HWC (or NHWC) map; keeps a 1x1 spatial shape."""
    xb, squeeze = _batched(x)
    y = xb.mean(axis=(1, 2), keepdims=True)
    return y[0] if squeeze else y


def dense(x, w, b):
    """y_j = sum_i x_i * w[i, j] + b_j, for vectors or (batch, n) rows."""
    x = np.asarray(x)
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"dense input width {x.shape[-1]} != weight rows {w.shape[0]}")
    if b.shape[0] != w.shape[1]:
        raise ValueError(f"bias width {b.shape[0]} != weight cols {w.shape[1]}")
    return x @ w + b


def dropout(x, rate, mode="train", seed=None):
    """Inverted dropout: drops with probability `rate`, rescales survivors.

    Inference mode is the identity, so trained weights need no rescaling.
    Deterministic for a given seed.
    """
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = np.asarray(x)
    if mode == "infer" or rate == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    mask = rng.random(x.shape) >= rate
    return x * mask.astype(x.dtype) / x.dtype.type(1 - rate)


def cross_entropy(probs, true_class):
    """Negative log-likelihood of `true_class` under softmax probabilities.

    Returns (loss, gradient w.r.t. the logits that produced `probs`), the
    usual combined softmax/cross-entropy form: probs - one_hot(true).
    """
    probs = np.asarray(probs)
    k = probs.shape[-1]
    if not 0 <= true_class < k:
        raise IndexError(f"true_class {true_class} out of range for {k} classes")
    loss = -np.log(probs[true_class])
    dlogits = probs.copy()
    dlogits[true_class] -= 1
    return loss, dlogits


def cross_entropy_batch(probs, labels):
    """Mean cross-entropy over rows; gradient already divided by batch size."""
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    n, k = probs.shape
    if labels.min() < 0 or labels.max() >= k:
        raise IndexError("label out of range")
    picked = probs[np.arange(n), labels]
    loss = float(-np.log(picked).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1
    dlogits /= probs.dtype.type(n)
    return loss, dlogits


def sgd_step(params, grads, learning_rate):
    """p <- p - lr * g for a single array or a sequence of arrays."""
    single = isinstance(params, np.ndarray)
    plist = [params] if single else list(params)
    glist = [grads] if single else list(grads)
    if len(plist) != len(glist):
        raise ValueError("params and grads differ in length")
    out = []
    for p, g in zip(plist, glist):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
        out.append(p - p.dtype.type(learning_rate) * g)
    return out[0] if single else out
