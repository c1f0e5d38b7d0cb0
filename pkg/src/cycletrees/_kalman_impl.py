"""Filter/smoother recursion kernel.

One loop-style implementation shared by both backends: compiled with numba
when enabled, executed as plain NumPy otherwise.  Factorizations are written
out manually so a failure can be reported with the period that caused it
instead of an opaque linear-algebra exception.
"""

import numpy as np

from ._accel import maybe_jit

LOG2PI = 1.8378770664093453


def _filter_smooth(z, obs, c, b, qmat, eps, mu0, omega0, want_smooth):
    """Missing-data Kalman filter plus fixed-interval smoother.

    Parameters are dense arrays; ``z`` is (T, n) with zeros at missing cells
    and ``obs`` the matching boolean mask.  Time index 0 of every output slot
    holds the initial state; slot t holds period t.

    Returns
    -------
    status : int
        -1 on success, else the 1-based period whose innovation (filter) or
        predicted state covariance (smoother) was not positive definite.
    loglik, x_pred, p_pred, x_filt, p_filt, x_sm, p_sm, p_lag
    """
    T = z.shape[0]
    q = c.shape[0]

    x_pred = np.zeros((T + 1, q))
    p_pred = np.zeros((T + 1, q, q))
    x_filt = np.zeros((T + 1, q))
    p_filt = np.zeros((T + 1, q, q))
    x_sm = np.zeros((T + 1, q))
    p_sm = np.zeros((T + 1, q, q))
    p_lag = np.zeros((T + 1, q, q))

    x_filt[0] = mu0
    p_filt[0] = omega0
    loglik = 0.0

    for t in range(1, T + 1):
        xp = c @ x_filt[t - 1]
        pp = c @ p_filt[t - 1] @ c.T + qmat
        pp = 0.5 * (pp + pp.T)
        x_pred[t] = xp
        p_pred[t] = pp

        k_obs = 0
        for i in range(z.shape[1]):
            if obs[t - 1, i]:
                k_obs += 1
        if k_obs == 0:
            x_filt[t] = xp
            p_filt[t] = pp
            continue

        idx = np.empty(k_obs, dtype=np.int64)
        pos = 0
        for i in range(z.shape[1]):
            if obs[t - 1, i]:
                idx[pos] = i
                pos += 1
        bt = b[idx]
        v = z[t - 1][idx] - bt @ xp

        s = bt @ pp @ bt.T
        for i in range(k_obs):
            s[i, i] += eps
        ls, ok = _chol(s)
        if not ok:
            return (t, loglik, x_pred, p_pred, x_filt, p_filt,
                    x_sm, p_sm, p_lag)

        # K' = S^{-1} B_t P_pred
        kt = _chol_solve(ls, bt @ pp)
        u = _chol_solve(ls, v.reshape(k_obs, 1))
        quad = 0.0
        logdet = 0.0
        for i in range(k_obs):
            quad += v[i] * u[i, 0]
            logdet += 2.0 * np.log(ls[i, i])
        loglik += -0.5 * (k_obs * LOG2PI + logdet + quad)

        gain = kt.T
        x_filt[t] = xp + gain @ v
        ikb = np.eye(q) - gain @ bt
        pf = ikb @ pp @ ikb.T + eps * (gain @ gain.T)
        p_filt[t] = 0.5 * (pf + pf.T)

    if want_smooth:
        x_sm[T] = x_filt[T]
        p_sm[T] = p_filt[T]
        for t in range(T - 1, -1, -1):
            lp, ok = _chol(p_pred[t + 1])
            if not ok:
                return (t + 1, loglik, x_pred, p_pred, x_filt, p_filt,
                        x_sm, p_sm, p_lag)
            # J_t' = P_pred^{-1} C P_filt
            jt_t = _chol_solve(lp, c @ p_filt[t])
            j = jt_t.T
            x_sm[t] = x_filt[t] + j @ (x_sm[t + 1] - x_pred[t + 1])
            ps = p_filt[t] + j @ (p_sm[t + 1] - p_pred[t + 1]) @ j.T
            p_sm[t] = 0.5 * (ps + ps.T)
            p_lag[t + 1] = p_sm[t + 1] @ j.T

    return (-1, loglik, x_pred, p_pred, x_filt, p_filt, x_sm, p_sm, p_lag)


def _chol(a):
    """Lower Cholesky factor with an explicit success flag."""
    k = a.shape[0]
    lo = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1):
            s = a[i, j]
            for m in range(j):
                s -= lo[i, m] * lo[j, m]
            if i == j:
                if not np.isfinite(s) or s <= 0.0:
                    return lo, False
                lo[i, i] = np.sqrt(s)
            else:
                lo[i, j] = s / lo[j, j]
    return lo, True


def _chol_solve(lo, rhs):
    """Solve (L L') X = rhs for a 2-d right-hand side."""
    k = lo.shape[0]
    m = rhs.shape[1]
    y = np.zeros((k, m))
    for col in range(m):
        for i in range(k):
            s = rhs[i, col]
            for j in range(i):
                s -= lo[i, j] * y[j, col]
            y[i, col] = s / lo[i, i]
    x = np.zeros((k, m))
    for col in range(m):
        for i in range(k - 1, -1, -1):
            s = y[i, col]
            for j in range(i + 1, k):
                s -= lo[j, i] * x[j, col]
            x[i, col] = s / lo[i, i]
    return x


_chol = maybe_jit(_chol)
_chol_solve = maybe_jit(_chol_solve)
filter_smooth_core = maybe_jit(_filter_smooth)
