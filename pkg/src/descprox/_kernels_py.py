"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Every function here returns the same values as its compiled twin. Euclidean
distances accumulate squared coordinate differences left to right so that
both backends round identically.
"""

import numpy as np

NORM_EUCLIDEAN = 0
NORM_MAX = 1
NORM_L1 = 2


def _pairwise(X, Y, norm):
    diff = X[:, None, :] - Y[None, :, :]
    out = np.zeros(diff.shape[:2])
    if norm == NORM_EUCLIDEAN:
        for k in range(diff.shape[2]):
            out += diff[:, :, k] * diff[:, :, k]
        return np.sqrt(out)
    if norm == NORM_MAX:
        for k in range(diff.shape[2]):
            np.maximum(out, np.abs(diff[:, :, k]), out=out)
        return out
    for k in range(diff.shape[2]):
        out += np.abs(diff[:, :, k])
    return out


def min_pair_distance(X, Y, norm=0):
    if len(X) == 0 or len(Y) == 0:
        return float("inf")
    return float(_pairwise(np.asarray(X), np.asarray(Y), norm).min())


def directed_hausdorff(X, Y, norm=0):
    if len(X) == 0:
        return 0.0
    if len(Y) == 0:
        return float("inf")
    return float(_pairwise(np.asarray(X), np.asarray(Y), norm).min(axis=1).max())


def hausdorff(X, Y, norm=0):
    return max(directed_hausdorff(X, Y, norm), directed_hausdorff(Y, X, norm))


def first_return(nxt, desc, m_max, tol):
    nxt = np.asarray(nxt, dtype=np.int64)
    desc = np.asarray(desc, dtype=np.float64)
    n = len(nxt)
    res = np.zeros(n, dtype=np.int64)
    pending = np.ones(n, dtype=bool)
    cur = np.arange(n)
    for m in range(1, m_max + 1):
        cur = nxt[cur]
        hit = pending & np.all(np.abs(desc[cur] - desc) <= tol, axis=1)
        res[hit] = m
        pending &= ~hit
        if not pending.any():
            break
    return res


def zero_crossings(m):
    m = np.asarray(m, dtype=np.float64)
    nz = np.flatnonzero(m)
    if len(nz) < 2:
        return np.empty(0)
    sign = np.sign(m[nz])
    flips = np.flatnonzero(sign[1:] != sign[:-1])
    p = nz[flips]
    q = nz[flips + 1]
    adjacent = q == p + 1
    pos = np.where(
        adjacent,
        p + m[p] / np.where(adjacent, m[p] - m[q], 1.0),
        0.5 * ((p + 1) + (q - 1)),
    )
    return pos.astype(np.float64)


def segment_trapz(t, y, starts, stops):
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cells = 0.5 * np.diff(t) * (y[:-1] + y[1:])
    return np.array([cells[a:b].sum() for a, b in zip(starts, stops)], dtype=np.float64)
