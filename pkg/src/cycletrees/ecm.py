"""Penalized expectation-conditional-maximization for the trend-cycle model.

Each iteration smooths with the current parameters, assembles the expected
sufficient statistics, then runs closed-form conditional updates: initial
moments, transition coordinates (soft-thresholded one at a time, newest
estimates first), innovation variances, loading coordinates.  Cycle
coefficient blocks are projected back into the causal region after every
transition sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from . import kalman as _kalman
from .ensemble import artificial_jackknife, default_jackknife_d
from .errors import (
    DegenerateUpdateError,
    InputError,
    NumericError,
    SelectionError,
)
from .panel import ObservationMask, Panel, Standardizer, observation_structure
from .statespace import (
    DEFAULT_CAUSAL_MARGIN,
    IndexSets,
    ModelShape,
    PenaltyConfig,
    StateSpaceParams,
    build_trend_cycle,
    companion_spectral_radius,
    enforce_causality,
)

SIGMA_FLOOR = 1e-12
TREND_VAR_FLOOR = 1e-8
DRIFT_INIT_VAR = 1e-4
INIT_RIDGE = 1.0


@dataclass
class SufficientStats:
    """Expected complete-data moments from one smoother pass.

    ``f``/``g`` cover the innovation-carrying rows; ``o_t`` stacks the
    second-moment matrices per period and ``o_by_series[i]`` sums them over
    the periods where series i is observed (the mask makes the per-period
    selection matrices diagonal, so these sums are all the loading updates
    need).
    """

    e0: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    m: np.ndarray
    o_t: np.ndarray
    obs: np.ndarray
    o_by_series: np.ndarray
    sum_zz: float
    phi0: np.ndarray
    p0: np.ndarray
    s: int


def e_step(params: StateSpaceParams, panel: Panel,
           mask: Optional[ObservationMask] = None) -> SufficientStats:
    """Smoother pass plus moment assembly."""
    mask = mask if mask is not None else observation_structure(panel)
    sm = _kalman.smooth(params, panel, mask)
    q, r, n = params.q, params.r, params.n
    T = panel.n_periods

    x = sm.means
    if T:
        o_t = np.einsum("ti,tj->tij", x[1:], x[1:]) + sm.covs[1:]
        f = o_t[:, :r, :r].sum(axis=0)
        g = (np.einsum("ti,tj->tij", x[1:, :r], x[:-1]) +
             sm.lag_cov[1:, :r, :]).sum(axis=0)
        h = np.einsum("ti,tj->ij", x[:-1], x[:-1]) + sm.covs[:-1].sum(axis=0)
    else:
        o_t = np.empty((0, q, q))
        f, g, h = np.zeros((r, r)), np.zeros((r, q)), np.zeros((q, q))
    z = np.where(mask.observed, panel.values.T, 0.0)
    m = np.einsum("ti,tj->ij", z, x[1:])
    o_by_series = np.einsum("ti,tjk->ijk", mask.observed.astype(np.float64),
                            o_t)
    sum_zz = float(np.sum(z * z))
    return SufficientStats(
        e0=np.outer(x[0], x[0]) + sm.covs[0], f=f, g=g, h=h, m=m, o_t=o_t,
        obs=mask.observed.copy(), o_by_series=o_by_series, sum_zz=sum_zz,
        phi0=x[0].copy(), p0=sm.covs[0].copy(), s=T)


def soft_threshold(x: float, c: float) -> float:
    """sign(x) * max(|x| - c, 0)."""
    if x > c:
        return x - c
    if x < -c:
        return x + c
    return 0.0


def cm_update_initial_conditions(stats: SufficientStats,
                                 omega_pattern: np.ndarray):
    """Smoothed time-0 moments, covariance restricted to its pattern."""
    return stats.phi0.copy(), np.where(omega_pattern, stats.p0, 0.0)


def cm_update_transition(stats: SufficientStats, params: StateSpaceParams,
                         gamma: PenaltyConfig, sets: IndexSets,
                         project: bool = True,
                         margin: float = DEFAULT_CAUSAL_MARGIN) -> np.ndarray:
    """One coordinate sweep over the free transition entries.

    Earlier coordinates in the sweep enter later updates at their new
    values; the innovation covariance stays at its previous iterate.  With a
    diagonal covariance the cross terms collapse to the coordinate's own row.
    """
    c = params.transition.copy()
    sinv = 1.0 / params.sigma
    weights = sets.c_base_weights(gamma)
    for (i, j), w in zip(sets.u_pi, weights):
        ridge = (1.0 - gamma.alpha) * w
        lasso = 0.5 * gamma.alpha * w
        cross = sinv[i] * (c[i] @ stats.h[:, j] - c[i, j] * stats.h[j, j])
        num = sinv[i] * stats.g[i, j] - cross
        den = sinv[i] * stats.h[j, j] + ridge
        if den == 0.0:
            raise DegenerateUpdateError(
                f"transition update ({i},{j}) has zero denominator")
        c[i, j] = soft_threshold(num, lasso) / den
    if project:
        c = project_causality(c, sets, margin)
    return c


def project_causality(transition: np.ndarray, sets: IndexSets,
                      margin: float = DEFAULT_CAUSAL_MARGIN) -> np.ndarray:
    c = transition.copy()
    for row, cols in sets.ar_blocks:
        cols = list(cols)
        c[row, cols] = enforce_causality(c[row, cols], margin)
    return c


def cm_update_covariance(stats: SufficientStats,
                         transition: np.ndarray) -> np.ndarray:
    """Diagonal innovation variances from the updated transition."""
    if stats.s == 0:
        raise InputError("cannot update variances without observations")
    r = stats.f.shape[0]
    cstar = transition[:r]
    resid = stats.f - stats.g @ cstar.T - cstar @ stats.g.T + \
        cstar @ stats.h @ cstar.T
    diag = np.diag(resid) / stats.s
    if np.any(diag < -1e-8):
        raise NumericError(
            f"negative innovation variance {diag.min():.3e}")
    return np.maximum(diag, SIGMA_FLOOR)


def cm_update_loadings(stats: SufficientStats, params: StateSpaceParams,
                       gamma: PenaltyConfig, sets: IndexSets) -> np.ndarray:
    """One coordinate sweep over the free loading entries."""
    b = params.loadings.copy()
    weights = sets.b_base_weights(gamma) * params.eps
    for (i, j), w in zip(sets.u_upsilon, weights):
        ridge = (1.0 - gamma.alpha) * w
        lasso = 0.5 * gamma.alpha * w
        s_i = stats.o_by_series[i]
        cross = b[i] @ s_i[:, j] - b[i, j] * s_i[j, j]
        num = stats.m[i, j] - cross
        den = s_i[j, j] + ridge
        if den == 0.0:
            raise DegenerateUpdateError(
                f"loading update ({i},{j}) has zero denominator")
        b[i, j] = soft_threshold(num, lasso) / den
    return b


class ObjectiveValue(NamedTuple):
    value: float
    pseudo_determinant_used: bool


def penalized_expected_objective(params: StateSpaceParams,
                                 stats: SufficientStats,
                                 gamma: PenaltyConfig,
                                 sets: IndexSets) -> ObjectiveValue:
    """Expected complete-data log-likelihood minus the shrinkage penalty.

    Constant terms are dropped.  A singular initial covariance falls back to
    its pseudo-determinant and pseudo-inverse on the free pattern, flagged in
    the result.
    """
    omega = params.omega0
    mu = params.mu0
    cross = stats.e0 - np.outer(stats.phi0, mu) - np.outer(mu, stats.phi0) + \
        np.outer(mu, mu)
    pseudo = False
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0 or not np.isfinite(logdet):
        pseudo = True
        evals, evecs = np.linalg.eigh(omega)
        tol = max(1e-12, 1e-12 * float(np.max(np.abs(evals), initial=0.0)))
        live = evals > tol
        logdet = float(np.sum(np.log(evals[live])))
        inv = (evecs[:, live] / evals[live]) @ evecs[:, live].T
        block0 = -0.5 * logdet - 0.5 * float(np.sum(inv * cross))
    else:
        block0 = -0.5 * logdet - \
            0.5 * float(np.trace(np.linalg.solve(omega, cross)))

    r = params.r
    cstar = params.transition[:r]
    resid = stats.f - stats.g @ cstar.T - cstar @ stats.g.T + \
        cstar @ stats.h @ cstar.T
    block1 = -0.5 * stats.s * float(np.sum(np.log(params.sigma))) - \
        0.5 * float(np.sum(np.diag(resid) / params.sigma))

    b = params.loadings
    quad = 0.0
    for i in range(params.n):
        quad += b[i] @ stats.o_by_series[i] @ b[i]
    meas = stats.sum_zz - 2.0 * float(np.sum(b * stats.m)) + quad
    block2 = -0.5 * meas / params.eps

    penalty = 0.0
    for (i, j), w in zip(sets.u_pi, sets.c_base_weights(gamma)):
        v = params.transition[i, j]
        penalty += w * (0.5 * (1 - gamma.alpha) * v * v +
                        0.5 * gamma.alpha * abs(v))
    for (i, j), w in zip(sets.u_upsilon, sets.b_base_weights(gamma)):
        v = params.loadings[i, j]
        penalty += w * (0.5 * (1 - gamma.alpha) * v * v +
                        0.5 * gamma.alpha * abs(v))
    return ObjectiveValue(block0 + block1 + block2 - penalty, pseudo)


# ---------------------------------------------------------------------------
# Initialization


def _interpolate(series: np.ndarray) -> np.ndarray:
    """Linear interpolation inside, nearest-value extension at the edges."""
    out = series.astype(np.float64).copy()
    obs = np.where(~np.isnan(out))[0]
    if obs.size == 0:
        raise InputError("cannot interpolate an all-missing series")
    out[:obs[0]] = out[obs[0]]
    out[obs[-1] + 1:] = out[obs[-1]]
    gaps = np.isnan(out)
    if gaps.any():
        idx = np.arange(out.size)
        out[gaps] = np.interp(idx[gaps], idx[~gaps], out[~gaps])
    return out


def moving_average_window(s: int) -> int:
    """round(2*sqrt(s) + 1), forced odd."""
    w = int(round(2.0 * math.sqrt(s) + 1.0))
    if w % 2 == 0:
        w += 1
    return w


def _centered_ma(x: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    out = np.empty_like(x)
    for t in range(x.size):
        lo = max(0, t - half)
        hi = min(x.size, t + half + 1)
        out[t] = x[lo:hi].mean()
    return out


def _ridge_regression(y: np.ndarray, x: np.ndarray,
                      penalty: float) -> np.ndarray:
    xtx = x.T @ x + penalty * np.eye(x.shape[1])
    return np.linalg.solve(xtx, x.T @ y)


def initialize(panel: Panel, shape: ModelShape,
               standardizer: Optional[Standardizer] = None,
               margin: float = DEFAULT_CAUSAL_MARGIN) -> StateSpaceParams:
    """Starting values: moving-average trends, ridge-fitted cycles.

    Trends are centered moving averages of the (interpolated) standardized
    series with a large window; the shared inflation trend combines the two
    rescaled averages.  De-trended data then seed the cycles: an AR(p) ridge
    fit on the anchor series' cycle, ridge loadings for the other series,
    AR(1) ridge fits on the leftover idiosyncratic parts.
    """
    s = panel.n_periods
    if s < 25:
        raise InputError(f"initialization needs >= 25 periods, got {s}")
    params, sets = build_trend_cycle(shape, standardizer)
    n, p, q = shape.n, shape.p, shape.q
    window = moving_average_window(s)

    filled = np.vstack([_interpolate(panel.values[i]) for i in range(n)])
    mas = np.vstack([_centered_ma(filled[i], window) for i in range(n)])

    n_trends = shape.n_trends
    trends = np.zeros((n_trends, s))
    if shape.is_macro_layout:
        scale = standardizer.scale if standardizer is not None else np.ones(n)
        for i in range(7):
            trends[i] = mas[i]
        trends[7] = 0.5 * (scale[7] * mas[7] + scale[8] * mas[8])
        detrended = filled.copy()
        for i in range(7):
            detrended[i] -= trends[i]
        detrended[7] -= trends[7] / scale[7]
        detrended[8] -= trends[7] / scale[8]
    else:
        trends = mas.copy()
        detrended = filled - mas

    trend_var = np.maximum(np.var(np.diff(trends, axis=1), axis=1),
                           TREND_VAR_FLOOR)
    params.sigma = np.full(shape.r, SIGMA_FLOOR)
    params.sigma[:n_trends] = trend_var
    params.mu0[:n_trends] = trends[:, 0]
    omega_diag = np.ones(q)

    if shape.is_macro_layout:
        for k in range(3):
            drift_state = n_trends + k
            params.mu0[drift_state] = float(np.mean(np.diff(trends[1 + k])))
            params.sigma[drift_state] = DRIFT_INIT_VAR
            omega_diag[drift_state] = DRIFT_INIT_VAR

    # Common cycle from the anchor series (unit loading), then loadings,
    # then AR(1) idiosyncratic leftovers; restrictions hold by construction.
    cycle_fit = np.zeros((n, s))
    for k in range(shape.n_cycles):
        anchor = 0 if k == 0 else 6
        targets = range(1, n) if k == 0 else (7, 8)
        proxy = detrended[anchor] - cycle_fit[anchor]
        row = shape.cycle_start + k
        cols = list(shape.cycle_columns(k))
        lagmat = np.column_stack([proxy[p - 1 - l:s - 1 - l]
                                  for l in range(p)])
        coef = _ridge_regression(proxy[p:], lagmat, INIT_RIDGE)
        coef = enforce_causality(coef, margin)
        params.transition[row, cols] = coef
        resid = proxy[p:] - lagmat @ coef
        params.sigma[row] = max(float(np.var(resid)), SIGMA_FLOOR)

        design = np.column_stack([proxy[p - 1 - l:s - l] for l in range(p)])
        cycle_fit[anchor] += proxy
        for i in targets:
            load = _ridge_regression(detrended[i][p - 1:] - cycle_fit[i][p - 1:],
                                     design, INIT_RIDGE)
            for col, val in zip(cols, load):
                params.loadings[i, col] = val
            cycle_fit[i][p - 1:] += design @ load

        # stationary covariance of the lag block seeds the free omega block
        comp = np.zeros((p, p))
        comp[0] = coef
        if p > 1:
            comp[np.arange(1, p), np.arange(p - 1)] = 1.0
        inj = np.zeros((p, p))
        inj[0, 0] = params.sigma[row]
        try:
            stat = scipy.linalg.solve_discrete_lyapunov(comp, inj)
        except Exception:
            stat = np.eye(p)
        params.omega0[np.ix_(cols, cols)] = stat

    for i in range(n):
        idio_state = shape.idio_start + i
        resid = detrended[i][p - 1:] - cycle_fit[i][p - 1:]
        phi = float(np.dot(resid[:-1], resid[1:]) /
                    (np.dot(resid[:-1], resid[:-1]) + INIT_RIDGE))
        phi = float(enforce_causality([phi], margin)[0])
        params.transition[idio_state, idio_state] = phi
        var = max(float(np.var(resid[1:] - phi * resid[:-1])), SIGMA_FLOOR)
        params.sigma[idio_state] = var
        omega_diag[idio_state] = var / max(1.0 - phi * phi, 1e-2)

    cbs = shape.cycle_start
    params.omega0[np.arange(cbs), np.arange(cbs)] = omega_diag[:cbs]
    return params


# ---------------------------------------------------------------------------
# Full estimation loop


@dataclass
class ConvergenceConfig:
    max_iter: int = 1000
    median_tol: float = 1e-3
    q95_tol: float = 1e-2
    denominator_guard: Optional[float] = None
    causal_margin: float = DEFAULT_CAUSAL_MARGIN

    def __post_init__(self):
        if self.median_tol <= 0 or self.q95_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")


@dataclass
class FitDiagnostics:
    iterations: int = 0
    converged: bool = False
    objective_trace: list = field(default_factory=list)
    median_trace: list = field(default_factory=list)
    q95_trace: list = field(default_factory=list)
    rho_common_trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    pseudo_det_flagged: bool = False

    def csv_lines(self):
        yield "iter,objective,median_relchange,q95_relchange,rho_common"
        for k in range(self.iterations):
            yield (f"{k + 1},{self.objective_trace[k]:.10g},"
                   f"{self.median_trace[k]:.6g},{self.q95_trace[k]:.6g},"
                   f"{self.rho_common_trace[k]:.6g}")


@dataclass
class FitResult:
    params: StateSpaceParams
    index_sets: IndexSets
    diagnostics: FitDiagnostics


def _sweep_vector(params: StateSpaceParams, sets: IndexSets) -> np.ndarray:
    c = [params.transition[i, j] for i, j in sets.u_pi]
    b = [params.loadings[i, j] for i, j in sets.u_upsilon]
    return np.concatenate([c, params.sigma, b])


def fit(panel: Panel, shape: ModelShape, gamma: PenaltyConfig,
        config: Optional[ConvergenceConfig] = None,
        standardizer: Optional[Standardizer] = None,
        mask: Optional[ObservationMask] = None) -> FitResult:
    """Estimate the model on a standardized panel.

    Stops when the median absolute relative parameter change drops below the
    median tolerance and the 95th percentile below its own, with the
    measurement-noise scale added to each denominator; hard stop at
    ``max_iter``.  A between-sweep objective decrease beyond 1e-6 is recorded
    as a warning, not an error, because the causality projection steps sit
    outside the monotone updates.
    """
    config = config or ConvergenceConfig()
    guard = config.denominator_guard
    if guard is None:
        guard = shape.eps
    mask = mask if mask is not None else observation_structure(panel)

    params = initialize(panel, shape, standardizer,
                        margin=config.causal_margin)
    sets = build_trend_cycle(shape, standardizer)[1]
    diag = FitDiagnostics()
    prev_vec = _sweep_vector(params, sets)
    prev_obj = None

    for _ in range(config.max_iter):
        stats = e_step(params, panel, mask)
        params.mu0, params.omega0 = cm_update_initial_conditions(
            stats, sets.omega_pattern)
        params.transition = cm_update_transition(
            stats, params, gamma, sets, project=True,
            margin=config.causal_margin)
        params.sigma = cm_update_covariance(stats, params.transition)
        params.loadings = cm_update_loadings(stats, params, gamma, sets)

        vec = _sweep_vector(params, sets)
        rel = np.abs(vec - prev_vec) / (np.abs(prev_vec) + guard)
        med = float(np.median(rel))
        q95 = float(np.quantile(rel, 0.95))
        obj = penalized_expected_objective(params, stats, gamma, sets)
        rho = companion_spectral_radius(
            params.transition[shape.cycle_start,
                              list(shape.cycle_columns(0))])
        diag.iterations += 1
        diag.objective_trace.append(obj.value)
        diag.median_trace.append(med)
        diag.q95_trace.append(q95)
        diag.rho_common_trace.append(rho)
        diag.pseudo_det_flagged |= obj.pseudo_determinant_used
        if prev_obj is not None and obj.value < prev_obj - 1e-6:
            diag.warnings.append(
                f"iter {diag.iterations}: objective decreased by "
                f"{prev_obj - obj.value:.3e}")
        prev_obj = obj.value
        prev_vec = vec
        if med < config.median_tol and q95 < config.q95_tol:
            diag.converged = True
            break
    return FitResult(params, sets, diag)


# ---------------------------------------------------------------------------
# Hyperparameter selection


@dataclass(frozen=True)
class SelectionGrid:
    """Candidate hyperparameter box, discretized."""

    p_values: tuple = (12,)
    lam_range: tuple = (1e-2, 2.5)
    alpha_range: tuple = (0.0, 1.0)
    beta_range: tuple = (1.0, 1.2)
    lam_count: int = 4
    alpha_count: int = 3
    beta_count: int = 2
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        for lo_hi, count, name in ((self.lam_range, self.lam_count, "lam"),
                                   (self.alpha_range, self.alpha_count,
                                    "alpha"),
                                   (self.beta_range, self.beta_count,
                                    "beta")):
            if lo_hi[0] != lo_hi[1] and count < 2:
                raise InputError(f"{name} range needs >= 2 grid points")

    def candidates(self):
        lams = np.geomspace(self.lam_range[0], self.lam_range[1],
                            self.lam_count) if self.lam_range[0] > 0 else \
            np.linspace(self.lam_range[0], self.lam_range[1], self.lam_count)
        alphas = np.linspace(self.alpha_range[0], self.alpha_range[1],
                             self.alpha_count)
        betas = np.linspace(self.beta_range[0], self.beta_range[1],
                            self.beta_count)
        out = []
        for p, lam, alpha, beta in product(self.p_values, lams, alphas,
                                           betas):
            out.append(PenaltyConfig(lam=float(lam), alpha=float(alpha),
                                     beta=float(beta), p=int(p)))
        return out

    def series_weights(self, shape: ModelShape) -> np.ndarray:
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.size != shape.n:
                raise InputError("weight vector length mismatch")
            return w
        w = np.zeros(shape.n)
        w[2 if shape.n == 9 else 0] = 1.0  # consumption series in the macro set
        return w


@dataclass(frozen=True)
class JackknifeSpec:
    """Artificial delete-d subsampler for the selection procedure."""

    n_subsamples: int = 4
    d: Optional[int] = None
    seed: int = 0


def _pseudo_out_of_sample_error(params, panel, mask, weights, first_half):
    res = _kalman.filter(params, panel, mask)
    err = 0.0
    count = 0
    for t in range(first_half, panel.n_periods):
        live = mask.observed[t] & ~np.isnan(res.innovations[t])
        if not live.any():
            continue
        err += float(np.sum(weights[live] * res.innovations[t][live] ** 2))
        count += 1
    if count == 0:
        raise InputError("no observed validation periods")
    return err / count


def select_hyperparameters(panel: Panel, shape: ModelShape,
                           grid: SelectionGrid,
                           subsampler: JackknifeSpec,
                           config: Optional[ConvergenceConfig] = None,
                           standardizer: Optional[Standardizer] = None):
    """Pick the penalty with the lowest expected one-step error.

    Fits every candidate on delete-d subsamples of the first half of the
    selection sample, then scores weighted one-step squared prediction
    errors over the second half (innovations of a single filter pass).
    Ties break lexicographically on (lam, alpha, beta).
    """
    config = config or ConvergenceConfig()
    mask = observation_structure(panel)
    half = panel.n_periods // 2
    if half < 25:
        raise InputError("selection sample too short to split")
    weights = grid.series_weights(shape)

    first_obs = mask.observed[:half]
    d = subsampler.d if subsampler.d is not None else \
        default_jackknife_d(int(first_obs.sum()))
    cell_masks = artificial_jackknife(first_obs, subsampler.n_subsamples, d,
                                      subsampler.seed)

    results = []
    failures = []
    for cand in grid.candidates():
        errs = []
        for cell_mask in cell_masks:
            try:
                errs.append(_candidate_subsample_error(
                    panel, shape, cand, cell_mask, mask, weights, half,
                    config, standardizer))
            except Exception as exc:
                failures.append(f"{_gamma_key(cand)}: {exc}")
        if errs:
            results.append((float(np.mean(errs)), cand))
    if not results:
        raise SelectionError("every candidate failed: " +
                             "; ".join(failures[:20]))
    best_err = min(err for err, _ in results)
    tied = [cand for err, cand in results if err <= best_err]
    tied.sort(key=lambda c: (c.lam, c.alpha, c.beta))
    return tied[0]


def _candidate_subsample_error(panel, shape, cand, cell_mask, mask, weights,
                               half, config, standardizer) -> float:
    """Fit one candidate on one masked first half, score the second half."""
    shape_c = ModelShape(n=shape.n, p=cand.p, extended=shape.extended,
                         eps=shape.eps)
    sub_panel = Panel(panel.dates[:half], panel.values[:, :half],
                      panel.series_ids, int(panel.dates[half - 1]))
    sub_mask = ObservationMask(mask.observed[:half]).restrict(cell_mask)
    res = fit(sub_panel, shape_c, cand, config, standardizer, sub_mask)
    if not res.diagnostics.converged:
        raise SelectionError("hit max_iter")
    return _pseudo_out_of_sample_error(res.params, panel, mask, weights,
                                       half)


def _gamma_key(gamma: PenaltyConfig):
    return f"(lam={gamma.lam:.4g},alpha={gamma.alpha:.3g}," \
           f"beta={gamma.beta:.3g},p={gamma.p})"
