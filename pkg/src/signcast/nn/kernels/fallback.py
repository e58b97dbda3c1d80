"""Vectorized NumPy convolution kernels (no compiled extension needed).

All functions take NHWC batches that are already padded: convolutions here
are valid-mode cross-correlations with a positive integer stride. Gradients
mirror the forward definitions exactly.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(x, kh, kw, stride):
    # view with shape (B, OH, OW, C, kh, kw); no copy
    v = sliding_window_view(x, (kh, kw), axis=(1, 2))
    return v[:, ::stride, ::stride]


def conv2d_forward(x, w, b, stride):
    kh, kw, _, _ = w.shape
    win = _windows(x, kh, kw, stride)
    # (B,OH,OW,C,kh,kw) x (kh,kw,C,F) -> (B,OH,OW,F)
    y = np.tensordot(win, w, axes=([3, 4, 5], [2, 0, 1]))
    y += b
    return np.ascontiguousarray(y)


def conv2d_backward(x, w, dy, stride):
    kh, kw, _, _ = w.shape
    oh, ow = dy.shape[1], dy.shape[2]
    win = _windows(x, kh, kw, stride)
    # (B,OH,OW,C,kh,kw) . (B,OH,OW,F) over batch+space -> (C,kh,kw,F)
    dw = np.tensordot(win, dy, axes=([0, 1, 2], [0, 1, 2]))
    dw = np.ascontiguousarray(dw.transpose(1, 2, 0, 3))
    db = dy.sum(axis=(0, 1, 2))
    dx = np.zeros_like(x)
    for i in range(kh):
        for j in range(kw):
            patch = np.matmul(dy, w[i, j].T)  # (B,OH,OW,C)
            dx[:, i : i + (oh - 1) * stride + 1 : stride,
               j : j + (ow - 1) * stride + 1 : stride, :] += patch
    return dx, dw, db


def depthwise_forward(x, w, b, stride):
    kh, kw, _ = w.shape
    win = _windows(x, kh, kw, stride)
    y = np.einsum("bxyckl,klc->bxyc", win, w, optimize=True)
    y += b
    return np.ascontiguousarray(y)


def depthwise_backward(x, w, dy, stride):
    kh, kw, _ = w.shape
    oh, ow = dy.shape[1], dy.shape[2]
    win = _windows(x, kh, kw, stride)
    dw = np.einsum("bxyckl,bxyc->klc", win, dy, optimize=True)
    db = dy.sum(axis=(0, 1, 2))
    dx = np.zeros_like(x)
    for i in range(kh):
        for j in range(kw):
            dx[:, i : i + (oh - 1) * stride + 1 : stride,
               j : j + (ow - 1) * stride + 1 : stride, :] += dy * w[i, j]
    return dx, dw, db
