"""Kernel backend selection.

The Cython extension (_convcore) is used when it was built; otherwise the
vectorized NumPy implementation takes over. Selection happens once at
import. Override with SIGNCAST_KERNELS=compiled|fallback (compiled raises
if the extension is missing; handy for benchmarks and CI).
"""

import os

import numpy as np

from . import fallback

_requested = os.environ.get("SIGNCAST_KERNELS", "auto").strip().lower()
if _requested not in ("auto", "compiled", "fallback"):
    raise ValueError(
        f"SIGNCAST_KERNELS must be 'compiled' or 'fallback', got {_requested!r}"
    )

compiled = None
if _requested in ("auto", "compiled"):
    try:
        from . import _convcore as compiled
    except ImportError:
        compiled = None
if _requested == "compiled" and compiled is None:
    raise ImportError(
        "SIGNCAST_KERNELS=compiled but the _convcore extension is not built; "
        "run `pip install -e . --no-build-isolation`"
    )

_impl = compiled if (compiled is not None and _requested != "fallback") else fallback


def backend_name():
    return "fallback" if _impl is fallback else "compiled"


def _prep(x, contiguous_dtype=None):
    dtype = contiguous_dtype or x.dtype
    return np.ascontiguousarray(x, dtype=dtype)


def conv2d_forward(x, w, b=None, stride=1):
    """Valid-mode conv: x (B,H,W,C), w (kh,kw,C,F), b (F,) -> (B,OH,OW,F)."""
    x = _prep(x)
    w = _prep(w, x.dtype)
    if b is None:
        b = np.zeros(w.shape[3], dtype=x.dtype)
    return _impl.conv2d_forward(x, w, _prep(b, x.dtype), int(stride))


def conv2d_backward(x, w, dy, stride=1):
    x = _prep(x)
    return _impl.conv2d_backward(x, _prep(w, x.dtype), _prep(dy, x.dtype), int(stride))


def depthwise_forward(x, w, b=None, stride=1):
    """Per-channel valid conv: x (B,H,W,C), w (kh,kw,C), b (C,) -> (B,OH,OW,C)."""
    x = _prep(x)
    w = _prep(w, x.dtype)
    if b is None:
        b = np.zeros(w.shape[2], dtype=x.dtype)
    return _impl.depthwise_forward(x, w, _prep(b, x.dtype), int(stride))


def depthwise_backward(x, w, dy, stride=1):
    x = _prep(x)
    return _impl.depthwise_backward(x, _prep(w, x.dtype), _prep(dy, x.dtype), int(stride))
