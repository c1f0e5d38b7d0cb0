"""Missing-data Kalman filtering, fixed-interval smoothing, state forecasts.

Measurement rows are selected per period (no infinite-variance surrogates),
covariance updates use the Joseph form, and every covariance is symmetrized
after each step.  Pure functions of their inputs; safe to run in parallel on
cloned parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kalman_impl import filter_smooth_core
from .errors import ConditioningError, InputError
from .panel import ObservationMask, Panel, observation_structure
from .statespace import StateSpaceParams


@dataclass(frozen=True)
class FilterResult:
    """One-step-ahead and filtered moments for periods 1..T.

    Row t-1 of each array refers to period t; ``innovations`` holds the
    one-step prediction errors with NaN at unobserved cells.
    """

    x_pred: np.ndarray
    p_pred: np.ndarray
    x_filt: np.ndarray
    p_filt: np.ndarray
    loglik: float
    innovations: np.ndarray


@dataclass(frozen=True)
class SmootherOutput:
    """Smoothed moments for times 0..T (index = time).

    ``lag_cov[t]`` is Cov(state_t, state_{t-1} | all data) for t >= 1; index
    0 is unused.  ``means[0]``/``covs[0]`` are the smoothed initial state.
    """

    means: np.ndarray
    covs: np.ndarray
    lag_cov: np.ndarray
    loglik: float

    @property
    def n_periods(self) -> int:
        return self.means.shape[0] - 1


@dataclass(frozen=True)
class StateForecast:
    """Mean state forecasts j = 1..h ahead and the common-cycle slice."""

    means: np.ndarray
    cycle: np.ndarray


def _run(params: StateSpaceParams, panel: Panel,
         mask: Optional[ObservationMask], want_smooth: bool):
    params.validate_finite()
    if panel.n_series != params.n:
        raise InputError(f"panel has {panel.n_series} series, "
                         f"model expects {params.n}")
    mask = mask if mask is not None else observation_structure(panel)
    if mask.observed.shape != (panel.n_periods, panel.n_series):
        raise InputError("observation mask does not match panel dimensions")
    z = panel.values.T.copy()
    z[~mask.observed] = 0.0
    if not np.all(np.isfinite(z)):
        raise InputError("panel carries non-finite observed values")
    out = filter_smooth_core(z, mask.observed, params.transition,
                             params.loadings, params.innovation_cov(),
                             params.eps, params.mu0, params.omega0,
                             want_smooth)
    status = int(out[0])
    if status >= 0:
        raise ConditioningError(status)
    return mask, out


def filter(params: StateSpaceParams, panel: Panel,
           mask: Optional[ObservationMask] = None) -> FilterResult:
    """Forward pass; log-likelihood sums the observed-dimension terms."""
    mask, out = _run(params, panel, mask, want_smooth=False)
    _, loglik, x_pred, p_pred, x_filt, p_filt, _, _, _ = out
    innov = panel.values.T - x_pred[1:] @ params.loadings.T
    innov[~mask.observed] = np.nan
    return FilterResult(x_pred[1:], p_pred[1:], x_filt[1:], p_filt[1:],
                        float(loglik), innov)


def smooth(params: StateSpaceParams, panel: Panel,
           mask: Optional[ObservationMask] = None) -> SmootherOutput:
    """Backward pass with lag-one cross covariances and time-0 moments."""
    _, out = _run(params, panel, mask, want_smooth=True)
    _, loglik, _, _, _, _, x_sm, p_sm, p_lag = out
    return SmootherOutput(x_sm, p_sm, p_lag, float(loglik))


def forecast_states(params: StateSpaceParams, state: np.ndarray, horizon: int,
                    cycle_index: int) -> StateForecast:
    """Mean forecasts C^j state for j = 1..horizon."""
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    state = np.asarray(state, dtype=np.float64)
    means = np.empty((horizon, params.q))
    cur = state
    for j in range(horizon):
        cur = params.transition @ cur
        means[j] = cur
    return StateForecast(means, means[:, cycle_index].copy())
