"""Cycle-augmented predictor construction, resampling plans, tree ensembles.

The augmentation for a forecast made at period t stacks the smoothed and
projected common-cycle values around t (levels, first differences,
forward-minus-current and current-minus-backward contrasts), all computed
from the information available at t.  Ensembles fit one tree per data
partition and aggregate forecasts by averaging.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb
from typing import Optional, Sequence

import numpy as np

from . import kalman as _kalman
from .errors import ConfigError, EnsembleConstructionError, InputError
from .panel import ObservationMask, Panel, observation_structure
from .statespace import ModelShape, StateSpaceParams
from .tree import BinaryTree, fit_cart, predict, tree_from_json, tree_to_json


@dataclass(frozen=True)
class AugmentationConfig:
    """Layout of the cycle augmentation around the forecast origin."""

    forward: int = 11
    backward: int = 11
    target_lags: int = 12

    def __post_init__(self):
        if self.forward < 2 or self.backward < 2 or self.target_lags < 1:
            raise ConfigError("augmentation needs forward/backward >= 2 and "
                              "target_lags >= 1")

    @property
    def path_length(self) -> int:
        return self.forward + self.backward + 1

    @property
    def augmentation_length(self) -> int:
        f, b = self.forward, self.backward
        return (f + b + 1) + (f + b) + (f - 1) + (b - 1)

    @property
    def n_predictors(self) -> int:
        return self.target_lags + self.augmentation_length

    def digest(self) -> str:
        key = f"{self.forward},{self.backward},{self.target_lags}"
        return hashlib.sha256(key.encode()).hexdigest()[:16]


def augmentation_vector(path: np.ndarray, config: AugmentationConfig) -> np.ndarray:
    """Expand one cycle path (descending from t+forward to t-backward)."""
    f, b = config.forward, config.backward
    if path.size != config.path_length:
        raise InputError(f"cycle path must have {config.path_length} entries")
    levels = path
    diffs = path[:-1] - path[1:]
    cur = path[f]
    fwd_minus_cur = path[0:f - 1] - cur        # j = forward .. 2
    cur_minus_back = cur - path[f + 2:]        # k = 2 .. backward
    return np.concatenate([levels, diffs, fwd_minus_cur, cur_minus_back])


def build_augmented_predictors(target: np.ndarray, cycle_paths: dict,
                               config: AugmentationConfig):
    """Assemble per-period predictor rows.

    ``cycle_paths[t]`` holds the cycle values conditional on information at
    period t, ordered t+forward down to t-backward.  Returns the row matrix
    and the origin period of each row; rows lacking target history or a
    cycle path are dropped.
    """
    target = np.asarray(target, dtype=np.float64)
    rows, origins = [], []
    for t in range(config.target_lags - 1, target.size):
        if t not in cycle_paths:
            continue
        lags = target[t - config.target_lags + 1:t + 1][::-1]
        if np.any(np.isnan(lags)):
            continue
        rows.append(np.concatenate([lags,
                                    augmentation_vector(cycle_paths[t],
                                                        config)]))
        origins.append(t)
    if not rows:
        return np.empty((0, config.n_predictors)), np.array([], dtype=int)
    return np.vstack(rows), np.array(origins, dtype=int)


def build_ar_predictors(target: np.ndarray, lags: int = 12):
    """Autoregressive-only rows: the target's own lags, newest first."""
    target = np.asarray(target, dtype=np.float64)
    rows, origins = [], []
    for t in range(lags - 1, target.size):
        window = target[t - lags + 1:t + 1][::-1]
        if np.any(np.isnan(window)):
            continue
        rows.append(window)
        origins.append(t)
    if not rows:
        return np.empty((0, lags)), np.array([], dtype=int)
    return np.vstack(rows), np.array(origins, dtype=int)


def training_pairs(rows: np.ndarray, origins: np.ndarray,
                   target: np.ndarray):
    """Keep rows whose next-period target is observed; pair them with it."""
    target = np.asarray(target, dtype=np.float64)
    keep = np.zeros(origins.size, dtype=bool)
    for k, t in enumerate(origins):
        keep[k] = t + 1 < target.size and not np.isnan(target[t + 1])
    return rows[keep], target[origins[keep] + 1], origins[keep]


def realtime_cycle_paths(params: StateSpaceParams, panel: Panel,
                         shape: ModelShape, config: AugmentationConfig,
                         mask: Optional[ObservationMask] = None) -> dict:
    """Cycle paths per origin, each from a smoother run truncated at the
    origin so that no future observation leaks into the augmentation."""
    mask = mask if mask is not None else observation_structure(panel)
    idx = shape.common_cycle_index
    paths = {}
    for t in range(config.backward, panel.n_periods):
        sub = Panel(panel.dates[:t + 1], panel.values[:, :t + 1],
                    panel.series_ids, int(panel.dates[t]))
        sub_mask = ObservationMask(mask.observed[:t + 1])
        sm = _kalman.smooth(params, sub, sub_mask)
        fc = _kalman.forecast_states(params, sm.means[t + 1], config.forward,
                                     idx)
        hist = sm.means[t + 1 - config.backward:t + 2, idx][::-1]
        paths[t] = np.concatenate([fc.cycle[::-1], hist])
    return paths


# ---------------------------------------------------------------------------
# Resampling schemes


class Scheme(str, Enum):
    PAIR_BOOTSTRAP = "pair"
    BLOCK_BOOTSTRAP = "block"
    STATIONARY_BOOTSTRAP = "stationary"
    ARTIFICIAL_JACKKNIFE = "jackknife"


@dataclass(frozen=True)
class ResamplePlan:
    scheme: Scheme
    j: int
    seed: int
    block_length: Optional[int] = None
    expected_block_length: Optional[float] = None
    d: Optional[int] = None

    def __post_init__(self):
        if self.j < 1:
            raise ConfigError("need at least one subsample")
        if self.scheme is Scheme.BLOCK_BOOTSTRAP and \
                (self.block_length is None or self.block_length < 1):
            raise ConfigError("block bootstrap needs block_length >= 1")
        if self.scheme is Scheme.STATIONARY_BOOTSTRAP and \
                (self.expected_block_length is None or
                 self.expected_block_length < 1):
            raise ConfigError("stationary bootstrap needs expected block "
                              "length >= 1")
        if self.scheme is Scheme.ARTIFICIAL_JACKKNIFE and \
                self.d is not None and self.d < 1:
            raise ConfigError("jackknife deletion count must be >= 1")


def pair_bootstrap(n_samples: int, j: int, seed: int):
    """J multisets of row indices drawn with replacement."""
    if n_samples < 1:
        raise InputError("need at least one sample")
    rng = np.random.default_rng(seed)
    return [rng.integers(0, n_samples, size=n_samples) for _ in range(j)]


def block_bootstrap(t_len: int, j: int, block_length: int, seed: int):
    """Concatenate uniform contiguous blocks of fixed length, truncated."""
    if not 1 <= block_length <= t_len:
        raise InputError("need 1 <= block_length <= series length")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(j):
        picks = []
        while len(picks) < t_len:
            start = int(rng.integers(0, t_len - block_length + 1))
            picks.extend(range(start, start + block_length))
        out.append(np.array(picks[:t_len], dtype=np.int64))
    return out


def stationary_bootstrap(t_len: int, j: int, expected_block_length: float,
                         seed: int):
    """Geometric block lengths with the given mean, wrapping at the end."""
    if expected_block_length < 1:
        raise InputError("expected block length must be >= 1")
    rng = np.random.default_rng(seed)
    prob = 1.0 / expected_block_length
    out = []
    for _ in range(j):
        picks = np.empty(t_len, dtype=np.int64)
        pos = 0
        while pos < t_len:
            start = int(rng.integers(0, t_len))
            length = int(rng.geometric(prob))
            for step in range(min(length, t_len - pos)):
                picks[pos] = (start + step) % t_len
                pos += 1
        out.append(picks)
    return out


def default_jackknife_d(total_cells: int) -> int:
    """Stand-in for an externally tuned deletion count: 20% of the cells."""
    return max(1, int(round(0.2 * total_cells)))


def artificial_jackknife(observed, j: int, d: int, seed: int):
    """J distinct delete-d masks over the observed cells.

    ``observed`` is a boolean array (or an int for a flat universe of that
    size).  Each returned mask matches its shape with exactly d True cells,
    all of them observed.  All combinations are returned when there are no
    more than J of them; otherwise distinct draws are rejection-sampled.
    """
    if isinstance(observed, (int, np.integer)):
        observed = np.ones(int(observed), dtype=bool)
    observed = np.asarray(observed, dtype=bool)
    flat = np.flatnonzero(observed.ravel())
    total = flat.size
    if not 1 <= d < total:
        raise InputError(f"need 1 <= d < {total}, got d={d}")
    n_comb = comb(total, d)
    if n_comb <= j:
        chosen = list(combinations(range(total), d))
    else:
        rng = np.random.default_rng(seed)
        seen = set()
        chosen = []
        while len(chosen) < j:
            pick = tuple(sorted(rng.choice(total, size=d, replace=False)))
            if pick not in seen:
                seen.add(pick)
                chosen.append(pick)
    masks = []
    for pick in chosen:
        m = np.zeros(observed.size, dtype=bool)
        m[flat[list(pick)]] = True
        masks.append(m.reshape(observed.shape))
    return masks


# ---------------------------------------------------------------------------
# Ensemble fitting and aggregation


@dataclass
class EnsembleModel:
    """J fitted trees sharing one predictor layout."""

    trees: list
    min_leaf: int
    plan: ResamplePlan
    augmentation: Optional[AugmentationConfig] = None

    @property
    def j(self) -> int:
        return len(self.trees)


def _member_rows(n_rows: int, plan: ResamplePlan, member: int, attempt: int):
    seed = np.random.SeedSequence([plan.seed, member, attempt])
    sub_seed = int(seed.generate_state(1)[0])
    if plan.scheme is Scheme.PAIR_BOOTSTRAP:
        return pair_bootstrap(n_rows, 1, sub_seed)[0]
    if plan.scheme is Scheme.BLOCK_BOOTSTRAP:
        return block_bootstrap(n_rows, 1, min(plan.block_length, n_rows),
                               sub_seed)[0]
    if plan.scheme is Scheme.STATIONARY_BOOTSTRAP:
        return stationary_bootstrap(n_rows, 1, plan.expected_block_length,
                                    sub_seed)[0]
    d = plan.d if plan.d is not None else default_jackknife_d(n_rows)
    mask = artificial_jackknife(n_rows, 1, d, sub_seed)[0]
    return np.flatnonzero(~mask)


def fit_ensemble(rows: np.ndarray, targets: np.ndarray, plan: ResamplePlan,
                 min_leaf: int,
                 augmentation: Optional[AugmentationConfig] = None,
                 max_retries: int = 10) -> EnsembleModel:
    """Fit one tree per partition of the (window, target) tuples.

    For the jackknife, each deleted tuple drops its row.  A member whose
    partition leaves fewer than ``2 * min_leaf`` usable rows is redrawn up to
    ``max_retries`` times before the construction fails.
    """
    rows = np.asarray(rows, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    n = y.size
    if n < 2 * min_leaf:
        raise InputError(f"need at least {2 * min_leaf} training rows")
    trees = []
    for member in range(plan.j):
        tree = None
        for attempt in range(max_retries + 1):
            idx = _member_rows(n, plan, member, attempt)
            if idx.size < 2 * min_leaf:
                continue
            tree = fit_cart(y[idx], rows[idx][:, :, None], min_leaf)
            break
        if tree is None:
            raise EnsembleConstructionError(
                f"member {member} kept a degenerate partition after "
                f"{max_retries} retries")
        trees.append(tree)
    return EnsembleModel(trees, min_leaf, plan, augmentation)


def ensemble_forecast(model: EnsembleModel, row: np.ndarray) -> float:
    """Arithmetic mean of the member forecasts."""
    row = np.asarray(row, dtype=np.float64)
    preds = [predict(t, row.reshape(-1, 1)) for t in model.trees]
    return float(np.mean(preds))


def member_forecasts(model: EnsembleModel, row: np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    return np.array([predict(t, row.reshape(-1, 1)) for t in model.trees])


DEFAULT_MIN_LEAF_GRID = tuple(range(5, 51, 5))


def select_min_leaf(rows: np.ndarray, targets: np.ndarray,
                    grid=DEFAULT_MIN_LEAF_GRID) -> int:
    """Half/half pseudo out-of-sample grid search; ties take the smallest."""
    grid = tuple(grid)
    if not grid:
        raise ConfigError("min_leaf grid is empty")
    rows = np.asarray(rows, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if y.size < 20:
        raise InputError("need at least 20 usable rows for selection")
    half = y.size // 2
    best_err, best = np.inf, None
    for cand in sorted(grid):
        if half < 2 * cand:
            continue
        tree = fit_cart(y[:half], rows[:half][:, :, None], cand)
        preds = np.array([predict(tree, rows[i].reshape(-1, 1))
                          for i in range(half, y.size)])
        err = float(np.mean((y[half:] - preds) ** 2))
        if err < best_err:
            best_err, best = err, cand
    if best is None:
        raise InputError("selection sample too small for every candidate")
    return best


# ---------------------------------------------------------------------------
# Full-mode jackknife: masks hit the state-space input panel


def fit_ensemble_full_jackknife(panel: Panel, params: StateSpaceParams,
                                shape: ModelShape, target: np.ndarray,
                                config: AugmentationConfig,
                                plan: ResamplePlan, min_leaf: int,
                                mask: Optional[ObservationMask] = None
                                ) -> EnsembleModel:
    """Delete-d masks applied to the panel cells with re-smoothing per member.

    Each member re-runs the cycle extraction on its masked panel, rebuilds
    the augmented rows and fits its tree; this is the expensive faithful mode.
    """
    mask = mask if mask is not None else observation_structure(panel)
    d = plan.d if plan.d is not None else \
        default_jackknife_d(int(mask.observed.sum()))
    masks = artificial_jackknife(mask.observed, plan.j, d, plan.seed)
    trees = []
    for member, cell_mask in enumerate(masks):
        member_mask = mask.restrict(cell_mask)
        paths = realtime_cycle_paths(params, panel, shape, config,
                                     member_mask)
        rows, origins = build_augmented_predictors(target, paths, config)
        rows, ys, _ = training_pairs(rows, origins, target)
        if ys.size < 2 * min_leaf:
            raise EnsembleConstructionError(
                f"member {member} kept {ys.size} rows, "
                f"need {2 * min_leaf}")
        trees.append(fit_cart(ys, rows[:, :, None], min_leaf))
    return EnsembleModel(trees, min_leaf, plan, config)


# ---------------------------------------------------------------------------
# Manifest


def ensemble_to_manifest(model: EnsembleModel) -> str:
    doc = {
        "plan": {
            "scheme": model.plan.scheme.value,
            "j": model.plan.j,
            "seed": model.plan.seed,
            "block_length": model.plan.block_length,
            "expected_block_length": model.plan.expected_block_length,
            "d": model.plan.d,
        },
        "min_leaf": model.min_leaf,
        "augmentation": model.augmentation.digest()
                        if model.augmentation else None,
        "augmentation_config": (
            [model.augmentation.forward, model.augmentation.backward,
             model.augmentation.target_lags]
            if model.augmentation else None),
        "trees": [json.loads(tree_to_json(t)) for t in model.trees],
    }
    return json.dumps(doc)


def ensemble_from_manifest(text: str) -> EnsembleModel:
    doc = json.loads(text)
    plan = ResamplePlan(Scheme(doc["plan"]["scheme"]), doc["plan"]["j"],
                        doc["plan"]["seed"], doc["plan"]["block_length"],
                        doc["plan"]["expected_block_length"],
                        doc["plan"]["d"])
    aug = None
    if doc["augmentation_config"]:
        f, b, lags = doc["augmentation_config"]
        aug = AugmentationConfig(f, b, lags)
    trees = [tree_from_json(json.dumps(t)) for t in doc["trees"]]
    return EnsembleModel(trees, doc["min_leaf"], plan, aug)
