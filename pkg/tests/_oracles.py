"""Brute-force references the fast implementations are checked against.

The joint-Gaussian oracle stacks every state and observed measurement into
one multivariate normal and conditions it directly, so it shares no code
with the recursive filter/smoother.
"""

import numpy as np


def joint_gaussian_reference(params, z, obs):
    """Exact conditional moments for a linear-Gaussian state space.

    Parameters
    ----------
    params : StateSpaceParams
    z : (T, n) array with NaN or anything at unobserved cells
    obs : (T, n) boolean mask

    Returns a dict with smoothed means/covs/lag covs (time 0..T), filtered
    and predicted means/covs (time 1..T), and the observed-data loglik.
    """
    T, n = z.shape
    q = params.q
    c, b, eps = params.transition, params.loadings, params.eps
    qmat = params.innovation_cov()

    mean_states = np.zeros((T + 1, q))
    mean_states[0] = params.mu0
    for t in range(1, T + 1):
        mean_states[t] = c @ mean_states[t - 1]

    var = [params.omega0]
    for t in range(T):
        var.append(c @ var[-1] @ c.T + qmat)

    powers = [np.eye(q)]
    for _ in range(T):
        powers.append(c @ powers[-1])

    dim = (T + 1) * q
    cov = np.zeros((dim, dim))
    for a in range(T + 1):
        for bb in range(a, T + 1):
            block = var[a] @ powers[bb - a].T
            cov[a * q:(a + 1) * q, bb * q:(bb + 1) * q] = block
            cov[bb * q:(bb + 1) * q, a * q:(a + 1) * q] = block.T

    coords = [(t, i) for t in range(1, T + 1) for i in range(n)
              if obs[t - 1, i]]
    k = len(coords)
    h = np.zeros((k, dim))
    y = np.empty(k)
    for row, (t, i) in enumerate(coords):
        h[row, t * q:(t + 1) * q] = b[i]
        y[row] = z[t - 1, i]

    mu_flat = mean_states.ravel()

    def condition(active):
        if not np.any(active):
            return mu_flat.copy(), cov.copy()
        ha, ya = h[active], y[active]
        s = ha @ cov @ ha.T + eps * np.eye(int(active.sum()))
        gain = cov @ ha.T @ np.linalg.inv(s)
        mean = mu_flat + gain @ (ya - ha @ mu_flat)
        post = cov - gain @ ha @ cov
        return mean, post

    all_active = np.ones(k, dtype=bool)
    sm_mean, sm_cov = condition(all_active)

    out = {
        "smooth_mean": sm_mean.reshape(T + 1, q),
        "smooth_cov": np.array([sm_cov[t * q:(t + 1) * q, t * q:(t + 1) * q]
                                for t in range(T + 1)]),
        "smooth_lag": np.array(
            [np.zeros((q, q))] +
            [sm_cov[t * q:(t + 1) * q, (t - 1) * q:t * q]
             for t in range(1, T + 1)]),
        "filt_mean": np.zeros((T, q)),
        "filt_cov": np.zeros((T, q, q)),
        "pred_mean": np.zeros((T, q)),
        "pred_cov": np.zeros((T, q, q)),
    }

    times = np.array([t for t, _ in coords], dtype=int)
    for t in range(1, T + 1):
        mean_t, cov_t = condition(times <= t)
        out["filt_mean"][t - 1] = mean_t[t * q:(t + 1) * q]
        out["filt_cov"][t - 1] = cov_t[t * q:(t + 1) * q, t * q:(t + 1) * q]
        mean_p, cov_p = condition(times <= t - 1)
        out["pred_mean"][t - 1] = mean_p[t * q:(t + 1) * q]
        out["pred_cov"][t - 1] = cov_p[t * q:(t + 1) * q, t * q:(t + 1) * q]

    if k:
        s_all = h @ cov @ h.T + eps * np.eye(k)
        resid = y - h @ mu_flat
        sign, logdet = np.linalg.slogdet(s_all)
        out["loglik"] = float(-0.5 * (k * np.log(2 * np.pi) + logdet +
                                      resid @ np.linalg.solve(s_all, resid)))
    else:
        out["loglik"] = 0.0
    return out


def random_dense_model(rng, q, n, eps=None, radius=0.7):
    """Generic stable model with innovations on every state."""
    from cycletrees.statespace import StateSpaceParams

    c = rng.standard_normal((q, q))
    rho = np.max(np.abs(np.linalg.eigvals(c)))
    if rho > 0:
        c *= radius / rho
    b = rng.standard_normal((n, q))
    a = rng.standard_normal((q, q))
    omega0 = a @ a.T / q + 0.3 * np.eye(q)
    sigma = rng.uniform(0.2, 1.5, size=q)
    mu0 = rng.standard_normal(q)
    eps = float(rng.uniform(0.05, 0.5)) if eps is None else eps
    return StateSpaceParams(mu0, omega0, c, b, sigma, eps)


def random_missing_panel(rng, params, T, missing_frac=0.3):
    """Simulated data with random holes; guarantees nothing in particular."""
    from cycletrees.panel import Panel

    n, q = params.n, params.q
    state = params.mu0 + np.linalg.cholesky(
        params.omega0 + 1e-12 * np.eye(q)) @ rng.standard_normal(q)
    z = np.empty((n, T))
    for t in range(T):
        innov = np.sqrt(params.sigma) * rng.standard_normal(params.r)
        state = params.transition @ state
        state[:params.r] += innov
        z[:, t] = params.loadings @ state + \
            np.sqrt(params.eps) * rng.standard_normal(n)
    holes = rng.random((n, T)) < missing_frac
    # keep every series with at least one observation
    for i in range(n):
        if holes[i].all():
            holes[i, rng.integers(T)] = False
    z = z.copy()
    z[holes] = np.nan
    dates = np.arange(24000, 24000 + T, dtype=np.int64)
    return Panel(dates, z, tuple(f"S{i}" for i in range(n)), 24000 + T - 1)
