"""Best-split search kernels for the regression tree.

Two interchangeable implementations of the same contract: a loop-style
kernel compiled with numba (default backend) and a vectorized NumPy one
(fallback).  Both scan feature columns in ascending order and keep the first
strict improvement, so ties resolve to the lowest (feature, lag, threshold).

Candidate thresholds are midpoints between consecutive distinct sorted
values; both children must keep at least ``min_leaf`` rows.
"""

import numpy as np

from ._accel import USE_NUMBA, maybe_jit


def _best_split_loop(x, y, idx, min_leaf):
    """Return (column, threshold, sse) of the best admissible split.

    ``column`` is -1 when no admissible split exists.  ``sse`` is the summed
    squared error of the two children around their means.
    """
    k = idx.size
    n_cols = x.shape[1]
    best_sse = np.inf
    best_col = -1
    best_thr = 0.0

    vals = np.empty(k)
    for col in range(n_cols):
        for a in range(k):
            vals[a] = x[idx[a], col]
        order = np.argsort(vals, kind="mergesort")
        # totals accumulated in sorted order so both backends agree bitwise
        tot = 0.0
        totsq = 0.0
        for a in range(k):
            yv = y[idx[order[a]]]
            tot += yv
            totsq += yv * yv
        csum = 0.0
        csq = 0.0
        for a in range(k - 1):
            yv = y[idx[order[a]]]
            csum += yv
            csq += yv * yv
            nl = a + 1
            nr = k - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            lo = vals[order[a]]
            hi = vals[order[a + 1]]
            if hi == lo:
                continue
            sse = (csq - csum * csum / nl) + \
                ((totsq - csq) - (tot - csum) * (tot - csum) / nr)
            if sse < 0.0:
                sse = 0.0
            if sse < best_sse:
                best_sse = sse
                best_col = col
                best_thr = 0.5 * (lo + hi)
    return best_col, best_thr, best_sse


def _best_split_numpy(x, y, idx, min_leaf):
    """Vectorized implementation of the same contract."""
    k = idx.size
    ysub = y[idx]
    best_sse = np.inf
    best_col = -1
    best_thr = 0.0
    for col in range(x.shape[1]):
        vals = x[idx, col]
        order = np.argsort(vals, kind="mergesort")
        sv = vals[order]
        sy = ysub[order]
        csum = np.cumsum(sy)[:-1]
        csq = np.cumsum(sy * sy)[:-1]
        nl = np.arange(1, k)
        nr = k - nl
        sse = (csq - csum ** 2 / nl) + \
            ((csq[-1] + sy[-1] ** 2 - csq) - (csum[-1] + sy[-1] - csum) ** 2 / nr)
        admissible = (nl >= min_leaf) & (nr >= min_leaf) & (sv[1:] != sv[:-1])
        if not admissible.any():
            continue
        sse = np.where(admissible, np.maximum(sse, 0.0), np.inf)
        pos = int(np.argmin(sse))
        if sse[pos] < best_sse:
            best_sse = float(sse[pos])
            best_col = col
            best_thr = 0.5 * float(sv[pos] + sv[pos + 1])
    return best_col, best_thr, best_sse


best_split_loop = maybe_jit(_best_split_loop)
best_split = best_split_loop if USE_NUMBA else _best_split_numpy
