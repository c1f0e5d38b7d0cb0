"""Sparse trend-cycle state-space templates.

Each observed series is the sum of a random-walk trend (three of them with
their own random-walk drifts in the nine-series layout), an idiosyncratic
AR(1) cycle, a distributed-lag loading on one stationary common AR(p) cycle,
and small measurement noise.  The template fixes every structural constant
and exposes the free coordinates (cycle coefficients, loadings, initial
moments, innovation variances) for estimation.

State ordering keeps innovation-carrying states first: trends, drifts,
idiosyncratic cycles, current cycle value(s), then the lag chain(s).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, NonCausalModelError, ShapeError
from .panel import Panel, Standardizer

PACKING_VERSION = "cycletrees-theta-v1"

DEFAULT_EPS = 1e-4
DEFAULT_CAUSAL_MARGIN = 0.02


@dataclass(frozen=True)
class ModelShape:
    """Dimensions and layout switches of the trend-cycle model.

    ``n == 9`` selects the macro layout (eight trends with one shared between
    the two inflation series, three drifts); any other ``n`` selects the
    reduced layout with one driftless trend and one idiosyncratic cycle per
    series.  ``extended`` adds a second common cycle loading on the oil and
    inflation rows and is only defined for the nine-series layout.
    """

    n: int = 9
    p: int = 12
    extended: bool = False
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ShapeError(f"need n >= 1 and p >= 1, got n={self.n} p={self.p}")
        if self.extended and self.n != 9:
            raise ShapeError("extended layout requires exactly 9 series")
        if self.eps <= 0:
            raise ShapeError("measurement noise eps must be positive")

    @property
    def is_macro_layout(self) -> bool:
        return self.n == 9

    @property
    def n_trends(self) -> int:
        return 8 if self.is_macro_layout else self.n

    @property
    def n_drifts(self) -> int:
        return 3 if self.is_macro_layout else 0

    @property
    def trend_of_series(self) -> tuple:
        if self.is_macro_layout:
            return (0, 1, 2, 3, 4, 5, 6, 7, 7)
        return tuple(range(self.n))

    @property
    def idio_start(self) -> int:
        return self.n_trends + self.n_drifts

    @property
    def cycle_start(self) -> int:
        """Index of the first common-cycle state."""
        return self.idio_start + self.n

    @property
    def n_cycles(self) -> int:
        return 2 if self.extended else 1

    @property
    def r(self) -> int:
        """Number of innovation-carrying states (always the leading block)."""
        return self.cycle_start + self.n_cycles

    @property
    def q(self) -> int:
        return self.cycle_start + self.n_cycles * self.p

    def cycle_columns(self, k: int = 0) -> tuple:
        """State indices carrying cycle ``k`` at lags 0..p-1."""
        cs, nc, p = self.cycle_start, self.n_cycles, self.p
        if not 0 <= k < nc:
            raise ShapeError(f"cycle index {k} out of range")
        lag_start = cs + nc + k * (p - 1)
        return (cs + k, *range(lag_start, lag_start + p - 1))

    @property
    def common_cycle_index(self) -> int:
        """State index of the current business-cycle value."""
        return self.cycle_start

    def ar_blocks(self) -> tuple:
        """(row, coefficient columns) of every AR block in the transition."""
        blocks = [(i, (i,)) for i in
                  range(self.idio_start, self.idio_start + self.n)]
        for k in range(self.n_cycles):
            blocks.append((self.cycle_start + k, self.cycle_columns(k)))
        return tuple(blocks)

    def omega_pattern(self) -> np.ndarray:
        """Boolean mask of initial-covariance entries allowed to be nonzero."""
        q, cs = self.q, self.cycle_start
        pat = np.zeros((q, q), dtype=bool)
        pat[np.arange(cs), np.arange(cs)] = True
        pat[cs:, cs:] = True
        return pat


@dataclass(frozen=True)
class PenaltyConfig:
    """Elastic-net shrinkage with lag-increasing weights."""

    lam: float = 0.0
    alpha: float = 0.0
    beta: float = 1.0
    p: int = 12

    def __post_init__(self):
        if self.lam < 0:
            raise InputError("lam must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError("alpha must lie in [0, 1]")
        if self.beta < 1.0:
            raise InputError("beta must be >= 1")
        if self.p < 1:
            raise InputError("p must be >= 1")


def gamma_matrix(gamma: PenaltyConfig, l: int) -> np.ndarray:
    """diag(lam, lam*beta, ..., lam*beta^(l-1))."""
    if l < 1:
        raise InputError(f"lag count must be >= 1, got {l}")
    return np.diag(gamma.lam * gamma.beta ** np.arange(l, dtype=np.float64))


@dataclass(frozen=True)
class IndexSets:
    """Free coordinates of the transition and loading matrices.

    ``u_pi`` and ``u_upsilon`` are ordered coordinate lists; the sweep order
    of the coordinate updates follows them exactly.  ``c_exp``/``b_exp`` hold
    the lag exponents k such that the base shrinkage weight of a coordinate
    is ``lam * beta**k``.
    """

    u_pi: tuple
    u_upsilon: tuple
    c_exp: np.ndarray
    b_exp: np.ndarray
    ar_blocks: tuple
    omega_pattern: np.ndarray

    def c_base_weights(self, gamma: PenaltyConfig) -> np.ndarray:
        return gamma.lam * gamma.beta ** self.c_exp

    def b_base_weights(self, gamma: PenaltyConfig) -> np.ndarray:
        return gamma.lam * gamma.beta ** self.b_exp


@dataclass
class StateSpaceParams:
    """Concrete parameter values on a fixed structural template.

    ``sigma`` holds the diagonal of the innovation covariance for the leading
    r states; the remaining (companion) states are noiseless.  ``eps`` is the
    fixed measurement-noise variance.
    """

    mu0: np.ndarray
    omega0: np.ndarray
    transition: np.ndarray
    loadings: np.ndarray
    sigma: np.ndarray
    eps: float

    @property
    def q(self) -> int:
        return self.transition.shape[0]

    @property
    def r(self) -> int:
        return self.sigma.size

    @property
    def n(self) -> int:
        return self.loadings.shape[0]

    def innovation_cov(self) -> np.ndarray:
        qmat = np.zeros((self.q, self.q))
        qmat[np.arange(self.r), np.arange(self.r)] = self.sigma
        return qmat

    def copy(self) -> "StateSpaceParams":
        return StateSpaceParams(self.mu0.copy(), self.omega0.copy(),
                                self.transition.copy(), self.loadings.copy(),
                                self.sigma.copy(), self.eps)

    def validate_finite(self):
        for name in ("mu0", "omega0", "transition", "loadings", "sigma"):
            if not np.all(np.isfinite(getattr(self, name))):
                from .errors import NumericError
                raise NumericError(f"non-finite values in {name}")


def build_trend_cycle(shape: ModelShape,
                      standardizer: Optional[Standardizer] = None):
    """Place all structural constants; free entries start at zero.

    Returns the parameter template and the index sets of its free
    coordinates.  The macro layout needs the standardizer because the two
    inflation rows load the shared trend with the reciprocal scale factors.
    """
    n, p, q, r = shape.n, shape.p, shape.q, shape.r
    if shape.is_macro_layout:
        if standardizer is None:
            scale = np.ones(n)
        else:
            scale = standardizer.scale
            if scale.size != n:
                raise ShapeError(f"standardizer has {scale.size} factors, "
                                 f"need {n}")

    c = np.zeros((q, q))
    for i in range(shape.n_trends):
        c[i, i] = 1.0
    if shape.is_macro_layout:
        # Trends of series 2..4 carry random-walk drifts.
        for k in range(3):
            c[1 + k, shape.n_trends + k] = 1.0
            c[shape.n_trends + k, shape.n_trends + k] = 1.0
    for k in range(shape.n_cycles):
        cols = shape.cycle_columns(k)
        for j in range(1, p):
            c[cols[j], cols[j - 1]] = 1.0

    b = np.zeros((n, q))
    trend_of = shape.trend_of_series
    for i in range(n):
        b[i, trend_of[i]] = 1.0
        b[i, shape.idio_start + i] = 1.0
    if shape.is_macro_layout:
        b[7, 7] = 1.0 / scale[7]
        b[8, 7] = 1.0 / scale[8]
    b[0, shape.cycle_start] = 1.0          # unit loading anchors the cycle
    if shape.extended:
        b[6, shape.cycle_start + 1] = 1.0  # oil anchors the second cycle

    u_pi = [(i, i) for i in range(shape.idio_start, shape.idio_start + n)]
    c_exp = [0] * n
    for k in range(shape.n_cycles):
        row = shape.cycle_start + k
        for lag, col in enumerate(shape.cycle_columns(k)):
            u_pi.append((row, col))
            c_exp.append(lag)

    u_upsilon = []
    b_exp = []
    free_rows = {0: [i for i in range(1, n)]}
    if shape.extended:
        free_rows[1] = [7, 8]
    for k in range(shape.n_cycles):
        cols = shape.cycle_columns(k)
        for i in free_rows[k]:
            for lag, col in enumerate(cols):
                u_upsilon.append((i, col))
                b_exp.append(lag)

    sets = IndexSets(tuple(u_pi), tuple(u_upsilon),
                     np.array(c_exp, dtype=np.int64),
                     np.array(b_exp, dtype=np.int64),
                     shape.ar_blocks(), shape.omega_pattern())

    params = StateSpaceParams(np.zeros(q), np.eye(q), c, b, np.ones(r),
                              shape.eps)
    return params, sets


@dataclass(frozen=True)
class PenaltyWeights:
    """Per-coordinate (ridge, lasso) multipliers entering the updates."""

    transition: dict
    loadings: dict


def effective_penalty_weights(gamma: PenaltyConfig, index_sets: IndexSets,
                              eps: float = DEFAULT_EPS) -> PenaltyWeights:
    """Shrinkage weights per free coordinate.

    Transition coordinates use the base weight directly; loading coordinates
    are scaled by the measurement-noise variance because the measurement
    block of the objective carries a 1/eps factor.  Ridge weights multiply
    (1 - alpha), lasso thresholds multiply alpha/2.
    """
    cw = index_sets.c_base_weights(gamma)
    bw = index_sets.b_base_weights(gamma) * eps
    trans = {coord: ((1.0 - gamma.alpha) * w, 0.5 * gamma.alpha * w)
             for coord, w in zip(index_sets.u_pi, cw)}
    loads = {coord: ((1.0 - gamma.alpha) * w, 0.5 * gamma.alpha * w)
             for coord, w in zip(index_sets.u_upsilon, bw)}
    return PenaltyWeights(trans, loads)


def companion_matrix(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
    p = coeffs.size
    comp = np.zeros((p, p))
    comp[0] = coeffs
    if p > 1:
        comp[np.arange(1, p), np.arange(p - 1)] = 1.0
    return comp


def companion_spectral_radius(coeffs: np.ndarray) -> float:
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
    if coeffs.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(coeffs)))))


def enforce_causality(coeffs: np.ndarray,
                      margin: float = DEFAULT_CAUSAL_MARGIN) -> np.ndarray:
    """Rescale an AR coefficient vector into the causal region.

    Scaling the lag-k coefficient by ((1 - margin)/rho)^k moves every
    companion eigenvalue onto radius (1 - margin) exactly; causal inputs pass
    through unchanged.
    """
    if not 0.0 < margin < 1.0:
        raise InputError("margin must lie in (0, 1)")
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
    rho = companion_spectral_radius(coeffs)
    if rho < 1.0:
        return coeffs.copy()
    factor = (1.0 - margin) / rho
    return coeffs * factor ** np.arange(1, coeffs.size + 1)


# ---------------------------------------------------------------------------
# Parameter packing and snapshots


def _omega_block_indices(shape: ModelShape):
    cs = shape.cycle_start
    size = shape.q - cs
    rows, cols = np.tril_indices(size)
    return cs, rows + cs, cols + cs


def pack_params(params: StateSpaceParams, shape: ModelShape,
                index_sets: IndexSets) -> np.ndarray:
    """Flatten the free coordinates into the canonical parameter vector."""
    cs, brows, bcols = _omega_block_indices(shape)
    parts = [params.mu0,
             np.diag(params.omega0)[:cs],
             params.omega0[brows, bcols],
             np.array([params.loadings[i, j] for i, j in index_sets.u_upsilon]),
             np.array([params.transition[i, j] for i, j in index_sets.u_pi]),
             params.sigma]
    return np.concatenate([np.asarray(p, dtype=np.float64).ravel()
                           for p in parts])


def unpack_params(theta: np.ndarray, shape: ModelShape,
                  index_sets: IndexSets,
                  standardizer: Optional[Standardizer] = None) -> StateSpaceParams:
    """Rebuild params from a packed vector on a fresh template."""
    params, _ = build_trend_cycle(shape, standardizer)
    theta = np.asarray(theta, dtype=np.float64)
    cs, brows, bcols = _omega_block_indices(shape)
    expected = shape.q + cs + brows.size + len(index_sets.u_upsilon) + \
        len(index_sets.u_pi) + shape.r
    if theta.size != expected:
        raise InputError(f"packed vector has {theta.size} entries, "
                         f"expected {expected}")
    pos = 0

    def take(k):
        nonlocal pos
        out = theta[pos:pos + k]
        pos += k
        return out

    params.mu0 = take(shape.q).copy()
    omega = np.zeros((shape.q, shape.q))
    d = take(cs)
    omega[np.arange(cs), np.arange(cs)] = d
    block = take(brows.size)
    omega[brows, bcols] = block
    omega[bcols, brows] = block
    params.omega0 = omega
    for val, (i, j) in zip(take(len(index_sets.u_upsilon)),
                           index_sets.u_upsilon):
        params.loadings[i, j] = val
    for val, (i, j) in zip(take(len(index_sets.u_pi)), index_sets.u_pi):
        params.transition[i, j] = val
    params.sigma = take(shape.r).copy()
    return params


def params_to_json(params: StateSpaceParams, shape: ModelShape,
                   index_sets: IndexSets,
                   standardizer: Optional[Standardizer] = None) -> str:
    doc = {
        "format": PACKING_VERSION,
        "n": shape.n,
        "p": shape.p,
        "extended": shape.extended,
        "eps": shape.eps,
        "scale": list(map(float, standardizer.scale))
                 if standardizer is not None else None,
        "theta": [float(v) for v in pack_params(params, shape, index_sets)],
    }
    return json.dumps(doc, indent=1)


def params_from_json(text: str):
    doc = json.loads(text)
    if doc.get("format") != PACKING_VERSION:
        raise InputError(f"unsupported snapshot format {doc.get('format')!r}")
    shape = ModelShape(n=doc["n"], p=doc["p"], extended=doc["extended"],
                       eps=doc["eps"])
    std = Standardizer(np.array(doc["scale"])) if doc["scale"] else None
    _, sets = build_trend_cycle(shape, std)
    params = unpack_params(np.array(doc["theta"]), shape, sets, std)
    return params, shape, sets, std


# ---------------------------------------------------------------------------
# Simulation


def simulate(params: StateSpaceParams, T: int, seed: int,
             index_sets: Optional[IndexSets] = None,
             series_ids: Optional[Sequence[str]] = None,
             start_date: str = "1984-01"):
    """Draw a synthetic panel and its latent state paths.

    The initial state comes from N(mu0, omega0); innovations hit only the
    leading r states; measurements add N(0, eps I).  When index sets are
    supplied the AR blocks must be causal or the call is refused.
    """
    if T < 0:
        raise InputError("T must be nonnegative")
    if np.any(params.sigma < 0):
        raise InputError("sigma entries must be nonnegative")
    if index_sets is not None:
        for row, cols in index_sets.ar_blocks:
            rho = companion_spectral_radius(params.transition[row, list(cols)])
            if rho >= 1.0:
                raise NonCausalModelError(
                    f"AR block at state {row} has spectral radius {rho:.4f}")
    rng = np.random.default_rng(seed)
    q, r, n = params.q, params.r, params.n

    evals, evecs = np.linalg.eigh(params.omega0)
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    state = params.mu0 + root @ rng.standard_normal(q)

    sd = np.sqrt(params.sigma)
    states = np.empty((T, q))
    z = np.empty((n, T))
    for t in range(T):
        innov = np.zeros(q)
        innov[:r] = sd * rng.standard_normal(r)
        state = params.transition @ state + innov
        states[t] = state
        z[:, t] = params.loadings @ state + \
            np.sqrt(params.eps) * rng.standard_normal(n)

    ids = tuple(series_ids) if series_ids is not None else \
        tuple(f"S{i + 1}" for i in range(n))
    first = _month(start_date)
    dates = np.arange(first, first + T, dtype=np.int64)
    panel = Panel(dates, z, ids, int(dates[-1]) if T else first)
    return panel, states


def _month(text: str) -> int:
    from .panel import month_from_str
    return month_from_str(text)
