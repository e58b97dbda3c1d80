"""Layers with forward and backward passes.

Each layer caches what its backward pass needs when forward() runs with
training=True; backward() consumes the cache, stores parameter gradients
on the layer and returns the gradient w.r.t. its input. Activations flow
as NHWC batches until GlobalAvgPool flattens them to (batch, channels).
"""

import numpy as np

from . import kernels
from .ops import _pad_input, dropout as dropout_op, relu as relu_op, softmax as softmax_op

LAYER_KINDS = (
    "conv2d",
    "depthwise_conv2d",
    "pointwise_conv2d",
    "relu",
    "global_avg_pool",
    "dense",
    "dropout",
    "softmax",
)

_HYPERPARAM_KEYS = {
    "conv2d": {"kernel_size", "stride", "padding", "units"},
    "depthwise_conv2d": {"kernel_size", "stride", "padding"},
    "pointwise_conv2d": {"units"},
    "dense": {"units"},
    "dropout": {"rate"},
    "relu": set(),
    "global_avg_pool": set(),
    "softmax": set(),
}


class LayerSpec:
    """Layer kind plus the hyperparameters meaningful for that kind."""

    def __init__(self, kind, **hyperparams):
        self.kind = kind
        self.hyperparams = hyperparams
        self.validate()

    def validate(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        allowed = _HYPERPARAM_KEYS[self.kind]
        extra = set(self.hyperparams) - allowed
        if extra:
            raise ValueError(f"{self.kind} does not take hyperparameters {sorted(extra)}")
        rate = self.hyperparams.get("rate")
        if self.kind == "dropout" and not 0 <= rate < 1:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        padding = self.hyperparams.get("padding")
        if padding is not None and padding not in ("valid", "same"):
            raise ValueError(f"padding must be valid|same, got {padding!r}")

    def __repr__(self):
        hp = ", ".join(f"{k}={v!r}" for k, v in sorted(self.hyperparams.items()))
        return f"LayerSpec({self.kind}{', ' + hp if hp else ''})"


class NoRecordedForwardError(RuntimeError):
    """backward() was called without a prior training-mode forward()."""


def he_normal(rng, shape, fan_in, dtype):
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class Layer:
    def __init__(self, name):
        self.name = name
        self.frozen = False  # frozen layers keep gradients but skip updates
        self._cache = None

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def params(self):
        return []

    def grads(self):
        return []

    def spec(self):
        raise NotImplementedError

    def clear_cache(self):
        self._cache = None

    def _take_cache(self):
        if self._cache is None:
            raise NoRecordedForwardError(
                f"{self.name}: backward() without a recorded forward pass"
            )
        cache = self._cache
        self._cache = None
        return cache


class Conv2D(Layer):
    def __init__(self, name, in_channels, out_channels, kernel_size=3,
                 stride=1, padding="same", rng=None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng()
        kh = kw = int(kernel_size)
        self.stride = int(stride)
        self.padding = padding
        self.weight = he_normal(rng, (kh, kw, in_channels, out_channels),
                                kh * kw * in_channels, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def forward(self, x, training=False):
        padded, _ = _pad_input(x, self.weight.shape[0], self.weight.shape[1],
                               self.stride, self.padding)
        if training:
            self._cache = (padded, x.shape)
        return kernels.conv2d_forward(padded, self.weight, self.bias, self.stride)

    def backward(self, dy):
        padded, orig_shape = self._take_cache()
        dxp, dw, db = kernels.conv2d_backward(padded, self.weight, dy, self.stride)
        self.dweight, self.dbias = dw, db
        return _unpad(dxp, orig_shape)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grads(self):
        return [("weight", self.dweight), ("bias", self.dbias)]

    def spec(self):
        return LayerSpec("conv2d", kernel_size=self.weight.shape[0],
                         stride=self.stride, padding=self.padding,
                         units=self.weight.shape[3])


class DepthwiseConv2D(Layer):
    def __init__(self, name, channels, kernel_size=3, stride=1,
                 padding="same", rng=None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng()
        kh = kw = int(kernel_size)
        self.stride = int(stride)
        self.padding = padding
        self.weight = he_normal(rng, (kh, kw, channels), kh * kw, dtype)
        self.bias = np.zeros(channels, dtype=dtype)

    def forward(self, x, training=False):
        padded, _ = _pad_input(x, self.weight.shape[0], self.weight.shape[1],
                               self.stride, self.padding)
        if training:
            self._cache = (padded, x.shape)
        return kernels.depthwise_forward(padded, self.weight, self.bias, self.stride)

    def backward(self, dy):
        padded, orig_shape = self._take_cache()
        dxp, dw, db = kernels.depthwise_backward(padded, self.weight, dy, self.stride)
        self.dweight, self.dbias = dw, db
        return _unpad(dxp, orig_shape)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grads(self):
        return [("weight", self.dweight), ("bias", self.dbias)]

    def spec(self):
        return LayerSpec("depthwise_conv2d", kernel_size=self.weight.shape[0],
                         stride=self.stride, padding=self.padding)


class PointwiseConv2D(Layer):
    """1x1 convolution: pure channel mixing, a matmul over the last axis."""

    def __init__(self, name, in_channels, out_channels, rng=None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng()
        self.weight = he_normal(rng, (in_channels, out_channels), in_channels, dtype)
        self.bias = np.zeros(out_channels, dtype=dtype)

    def forward(self, x, training=False):
        if training:
            self._cache = x
        return x @ self.weight + self.bias

    def backward(self, dy):
        x = self._take_cache()
        x2 = x.reshape(-1, x.shape[-1])
        dy2 = dy.reshape(-1, dy.shape[-1])
        self.dweight = x2.T @ dy2
        self.dbias = dy2.sum(axis=0)
        return (dy2 @ self.weight.T).reshape(x.shape)

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grads(self):
        return [("weight", self.dweight), ("bias", self.dbias)]

    def spec(self):
        return LayerSpec("pointwise_conv2d", units=self.weight.shape[1])


class ReLU(Layer):
    def forward(self, x, training=False):
        y = relu_op(x)
        if training:
            self._cache = x > 0
        return y

    def backward(self, dy):
        mask = self._take_cache()
        return dy * mask

    def spec(self):
        return LayerSpec("relu")


class GlobalAvgPool(Layer):
    """Per-channel spatial mean; output flattened to (batch, channels)."""

    def forward(self, x, training=False):
        if training:
            self._cache = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy):
        b, h, w, c = self._take_cache()
        scale = dy.dtype.type(1.0 / (h * w))
        return np.broadcast_to(dy[:, None, None, :] * scale, (b, h, w, c)).copy()

    def spec(self):
        return LayerSpec("global_avg_pool")


class Dense(Layer):
    def __init__(self, name, in_features, out_features, rng=None, dtype=np.float32):
        super().__init__(name)
        rng = rng or np.random.default_rng()
        self.weight = he_normal(rng, (in_features, out_features), in_features, dtype)
        self.bias = np.zeros(out_features, dtype=dtype)

    def forward(self, x, training=False):
        if training:
            self._cache = x
        return x @ self.weight + self.bias

    def backward(self, dy):
        x = self._take_cache()
        self.dweight = x.T @ dy
        self.dbias = dy.sum(axis=0)
        return dy @ self.weight.T

    def params(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def grads(self):
        return [("weight", self.dweight), ("bias", self.dbias)]

    def spec(self):
        return LayerSpec("dense", units=self.weight.shape[1])


class Dropout(Layer):
    """Inverted dropout; identity at inference. Owns a seeded generator so
    a rebuilt model replays the exact same masks."""

    def __init__(self, name, rate, seed=None):
        super().__init__(name)
        if not 0 <= rate < 1:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)
        self._rng = np.random.default_rng(seed)
        self.frozen_mask = None  # set by gradient checks to pin the mask

    def forward(self, x, training=False):
        if not training or self.rate == 0:
            if training:
                self._cache = None  # identity path
            return x
        if self.frozen_mask is not None:
            mask = self.frozen_mask
        else:
            mask = self._rng.random(x.shape) >= self.rate
        scale = x.dtype.type(1.0 / (1.0 - self.rate))
        scaled = mask.astype(x.dtype) * scale
        self._cache = scaled
        return x * scaled

    def backward(self, dy):
        scaled = self._cache
        self._cache = None
        if scaled is None:
            return dy
        return dy * scaled

    def spec(self):
        return LayerSpec("dropout", rate=self.rate)


class Softmax(Layer):
    def forward(self, x, training=False):
        y = softmax_op(x)
        if training:
            self._cache = y
        return y

    def backward(self, dy):
        y = self._take_cache()
        inner = (dy * y).sum(axis=-1, keepdims=True)
        return y * (dy - inner)

    def spec(self):
        return LayerSpec("softmax")


def _unpad(dxp, orig_shape):
    _, h, w, _ = orig_shape
    if dxp.shape[1] == h and dxp.shape[2] == w:
        return dxp
    ph = dxp.shape[1] - h
    pw = dxp.shape[2] - w
    pt, pl = ph // 2, pw // 2
    return dxp[:, pt : pt + h, pl : pl + w, :]
