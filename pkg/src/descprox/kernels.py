"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback
is used. Set ``DESCPROX_PURE=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("DESCPROX_PURE"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

NORMS = {"euclidean": 0, "max": 1, "l1": 2}


def norm_code(norm):
    try:
        return NORMS[norm]
    except KeyError:
        raise ValueError(f"unknown norm {norm!r}; expected one of {sorted(NORMS)}") from None


def backends():
    """Map of available backend name -> kernel module."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out


def _points(X):
    return np.ascontiguousarray(X, dtype=np.float64).reshape(len(X), -1)


def min_pair_distance(X, Y, norm="euclidean"):
    return float(_impl.min_pair_distance(_points(X), _points(Y), norm_code(norm)))


def directed_hausdorff(X, Y, norm="euclidean"):
    return float(_impl.directed_hausdorff(_points(X), _points(Y), norm_code(norm)))


def hausdorff(X, Y, norm="euclidean"):
    return float(_impl.hausdorff(_points(X), _points(Y), norm_code(norm)))


def first_return(nxt, desc, m_max, tol):
    return _impl.first_return(
        np.ascontiguousarray(nxt, dtype=np.int64),
        _points(desc),
        int(m_max),
        float(tol),
    )


def zero_crossings(m):
    return _impl.zero_crossings(np.ascontiguousarray(m, dtype=np.float64))


def segment_trapz(t, y, starts, stops):
    return _impl.segment_trapz(
        np.ascontiguousarray(t, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.int64),
        np.ascontiguousarray(stops, dtype=np.int64),
    )
