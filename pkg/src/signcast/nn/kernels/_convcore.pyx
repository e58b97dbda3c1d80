# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled convolution kernels: valid-mode NHWC cross-correlation + gradients.

Inner loops run over the contiguous channel/filter axis so float32 batches
stream through cache. Same contracts as signcast.nn.kernels.fallback.
"""

import numpy as np

from cython cimport floating


def conv2d_forward(floating[:, :, :, ::1] x, floating[:, :, :, ::1] w,
                   floating[::1] b, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], F = w.shape[3]
    cdef Py_ssize_t oh = (H - kh) // stride + 1
    cdef Py_ssize_t ow = (W - kw) // stride + 1
    out = np.empty((B, oh, ow, F), dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, :, :, ::1] y = out
    cdef Py_ssize_t bi, oy, ox, i, j, c, f, iy, ix
    cdef floating xv
    with nogil:
        for bi in range(B):
            for oy in range(oh):
                for ox in range(ow):
                    for f in range(F):
                        y[bi, oy, ox, f] = b[f]
                    for i in range(kh):
                        iy = oy * stride + i
                        for j in range(kw):
                            ix = ox * stride + j
                            for c in range(C):
                                xv = x[bi, iy, ix, c]
                                for f in range(F):
                                    y[bi, oy, ox, f] += xv * w[i, j, c, f]
    return out


def conv2d_backward(floating[:, :, :, ::1] x, floating[:, :, :, ::1] w,
                    floating[:, :, :, ::1] dy, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], F = w.shape[3]
    cdef Py_ssize_t oh = dy.shape[1], ow = dy.shape[2]
    dtype = np.float32 if floating is float else np.float64
    dx_arr = np.zeros((B, H, W, C), dtype=dtype)
    dw_arr = np.zeros((kh, kw, C, F), dtype=dtype)
    db_arr = np.zeros(F, dtype=dtype)
    cdef floating[:, :, :, ::1] dx = dx_arr
    cdef floating[:, :, :, ::1] dw = dw_arr
    cdef floating[::1] db = db_arr
    cdef Py_ssize_t bi, oy, ox, i, j, c, f, iy, ix
    cdef floating xv, acc, g
    with nogil:
        for bi in range(B):
            for oy in range(oh):
                for ox in range(ow):
                    for f in range(F):
                        db[f] += dy[bi, oy, ox, f]
                    for i in range(kh):
                        iy = oy * stride + i
                        for j in range(kw):
                            ix = ox * stride + j
                            for c in range(C):
                                xv = x[bi, iy, ix, c]
                                acc = 0
                                for f in range(F):
                                    g = dy[bi, oy, ox, f]
                                    dw[i, j, c, f] += xv * g
                                    acc += w[i, j, c, f] * g
                                dx[bi, iy, ix, c] += acc
    return dx_arr, dw_arr, db_arr


def depthwise_forward(floating[:, :, :, ::1] x, floating[:, :, ::1] w,
                      floating[::1] b, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1]
    cdef Py_ssize_t oh = (H - kh) // stride + 1
    cdef Py_ssize_t ow = (W - kw) // stride + 1
    out = np.empty((B, oh, ow, C), dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, :, :, ::1] y = out
    cdef Py_ssize_t bi, oy, ox, i, j, c, iy, ix
    with nogil:
        for bi in range(B):
            for oy in range(oh):
                for ox in range(ow):
                    for c in range(C):
                        y[bi, oy, ox, c] = b[c]
                    for i in range(kh):
                        iy = oy * stride + i
                        for j in range(kw):
                            ix = ox * stride + j
                            for c in range(C):
                                y[bi, oy, ox, c] += x[bi, iy, ix, c] * w[i, j, c]
    return out


def depthwise_backward(floating[:, :, :, ::1] x, floating[:, :, ::1] w,
                       floating[:, :, :, ::1] dy, Py_ssize_t stride):
    cdef Py_ssize_t B = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1]
    cdef Py_ssize_t oh = dy.shape[1], ow = dy.shape[2]
    dtype = np.float32 if floating is float else np.float64
    dx_arr = np.zeros((B, H, W, C), dtype=dtype)
    dw_arr = np.zeros((kh, kw, C), dtype=dtype)
    db_arr = np.zeros(C, dtype=dtype)
    cdef floating[:, :, :, ::1] dx = dx_arr
    cdef floating[:, :, ::1] dw = dw_arr
    cdef floating[::1] db = db_arr
    cdef Py_ssize_t bi, oy, ox, i, j, c, iy, ix
    cdef floating g
    with nogil:
        for bi in range(B):
            for oy in range(oh):
                for ox in range(ow):
                    for c in range(C):
                        db[c] += dy[bi, oy, ox, c]
                    for i in range(kh):
                        iy = oy * stride + i
                        for j in range(kw):
                            ix = ox * stride + j
                            for c in range(C):
                                g = dy[bi, oy, ox, c]
                                dw[i, j, c] += x[bi, iy, ix, c] * g
                                dx[bi, iy, ix, c] += w[i, j, c] * g
    return dx_arr, dw_arr, db_arr
