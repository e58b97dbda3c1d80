"""Central finite-difference gradient checking.

Run models in float64 here: the default step of 1e-5 drowns in float32
rounding noise.
"""

import numpy as np


def finite_difference(f, arrays, step=1e-5):
    """Central-difference gradients of the scalar f() w.r.t. each array.

    The arrays are perturbed in place and restored, so f must read them
    live (e.g. closures over model parameters).
    """
    out = []
    for a in arrays:
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = f()
            flat[i] = orig - step
            lo = f()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
        out.append(g)
    return out


def relative_error(analytic, numeric):
    """max|a - n| scaled by the larger of the two gradient magnitudes."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    diff = np.abs(analytic - numeric).max()
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-10)
    return diff / scale
