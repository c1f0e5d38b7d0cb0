"""Batch front end: simulate, decompose, select, fit ensembles, forecast,
and replay vintages into relative-MSE reports.

Every command reads a key=value config file, merges explicit flags on top,
echoes the resolved configuration into the output directory, and seeds all
randomness from the config.  Exit codes: 0 success, 1 configuration or input
error, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import ecm, ensemble, kalman, panel as panel_mod
from .ensemble import (
    AugmentationConfig,
    ResamplePlan,
    Scheme,
    build_ar_predictors,
    build_augmented_predictors,
    ensemble_forecast,
    ensemble_from_manifest,
    ensemble_to_manifest,
    fit_ensemble,
    fit_ensemble_full_jackknife,
    realtime_cycle_paths,
    select_min_leaf,
    training_pairs,
)
from .errors import ConfigError, CycletreesError, InputError, SelectionError
from .panel import (
    Panel,
    Transform,
    load_csv_panel,
    month_from_str,
    month_to_str,
    observation_structure,
    standardize,
    write_csv_panel,
)
from .statespace import (
    ModelShape,
    PenaltyConfig,
    build_trend_cycle,
    params_from_json,
    params_to_json,
    simulate,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGED = 2


# ---------------------------------------------------------------------------
# Configuration plumbing


def parse_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


@dataclass
class RunConfig:
    values: dict

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing config key {key!r}")
        return self.values[key]

    def get_int(self, key, default=None):
        v = self.get(key)
        return default if v is None else int(v)

    def get_float(self, key, default=None):
        v = self.get(key)
        return default if v is None else float(v)

    def get_bool(self, key, default=False):
        v = self.get(key)
        if v is None:
            return default
        return str(v).strip().lower() in ("1", "true", "yes", "on")

    def get_list(self, key, default=()):
        v = self.get(key)
        if v is None:
            return list(default)
        return [item.strip() for item in str(v).split(",") if item.strip()]

    def echo(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        lines = [f"{k} = {self.values[k]}" for k in sorted(self.values)]
        with open(os.path.join(out_dir, "config_echo.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _merge_config(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for key in ("seed", "out", "scheme", "mode"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag)
    if getattr(args, "extended", False):
        values["extended"] = "true"
    return RunConfig(values)


def _shape_from(cfg: RunConfig, n: int) -> ModelShape:
    return ModelShape(n=n, p=cfg.get_int("p", 12),
                      extended=cfg.get_bool("extended"),
                      eps=cfg.get_float("eps", 1e-4))


def _gamma_from(cfg: RunConfig) -> PenaltyConfig:
    return PenaltyConfig(lam=cfg.get_float("lambda", 0.1),
                         alpha=cfg.get_float("alpha", 0.5),
                         beta=cfg.get_float("beta", 1.0),
                         p=cfg.get_int("p", 12))


def _transforms_from(cfg: RunConfig, n: int):
    names = cfg.get_list("transforms")
    if not names:
        return [Transform.LEVELS] * n
    if len(names) != n:
        raise ConfigError(f"need {n} transforms, got {len(names)}")
    mapping = {"levels": Transform.LEVELS, "yoy": Transform.YOY_RETURN,
               "mom_sq": Transform.MOM_SQUARED_RETURN}
    try:
        return [mapping[name] for name in names]
    except KeyError as exc:
        raise ConfigError(f"unknown transform {exc.args[0]!r}") from None


def _macro_panel(full: Panel, cfg: RunConfig):
    macro_ids = cfg.get_list("macro_series")
    if not macro_ids:
        target_ids = set(cfg.get_list("targets"))
        macro_ids = [s for s in full.series_ids if s not in target_ids]
    idx = [full.series_ids.index(s) for s in macro_ids]
    return Panel(full.dates, full.values[idx], macro_ids, full.vintage_date)


def relative_mse(predictions: np.ndarray, truths: np.ndarray) -> float:
    """Model MSE over the MSE of a forecast constant at zero."""
    predictions = np.asarray(predictions, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if truths.size == 0:
        raise InputError("no realized values to score")
    base = float(np.mean(truths ** 2))
    if base == 0.0:
        raise InputError("zero-forecast benchmark has zero error")
    return float(np.mean((predictions - truths) ** 2)) / base


# ---------------------------------------------------------------------------
# simulate


def _target_rows(rng, cycle, cfg: RunConfig, n_targets: int):
    """Squared returns whose volatility is a nonlinear map of the cycle.

    ``vol_mode = threshold`` jumps between two levels when the lagged cycle
    crosses a threshold; ``vol_mode = exp`` scales continuously.
    """
    lo = cfg.get_float("vol_low", 1.0)
    hi = cfg.get_float("vol_high", 3.0)
    thr = cfg.get_float("vol_threshold", 0.0)
    mode = cfg.get("vol_mode", "threshold")
    slope = cfg.get_float("vol_slope", 0.5)
    T = cycle.size
    out = np.empty((n_targets, T))
    for k in range(n_targets):
        shocks = rng.standard_normal(T)
        for t in range(T):
            lagged = 0.0 if t == 0 else cycle[t - 1]
            if mode == "exp":
                level = lo * np.exp(-slope * lagged)
            else:
                level = lo if lagged >= thr else hi
            out[k, t] = (level * shocks[t]) ** 2
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    out_dir = cfg.require("out")
    seed = cfg.get_int("seed", 0)
    n = cfg.get_int("n", 3)
    p = cfg.get_int("p", 2)
    T = cfg.get_int("periods", 240)
    n_targets = cfg.get_int("n_targets", 1)
    start = cfg.get("start_date", "1984-01")

    shape = ModelShape(n=n, p=p, extended=cfg.get_bool("extended"))
    params, sets = build_trend_cycle(shape)
    ar = [float(v) for v in cfg.get_list("ar", ["1.2", "-0.35"])]
    if len(ar) != p:
        raise ConfigError(f"need {p} AR coefficients, got {len(ar)}")
    cols = list(shape.cycle_columns(0))
    params.transition[shape.cycle_start, cols] = ar
    idio_ar = cfg.get_float("idio_ar", 0.3)
    load_scale = cfg.get_float("loading_scale", 0.9)
    for i in range(n):
        params.transition[shape.idio_start + i, shape.idio_start + i] = \
            idio_ar
    for i in range(1, n):
        params.loadings[i, cols[0]] = load_scale
        if p > 1:
            params.loadings[i, cols[1]] = -load_scale / 3.0
    params.sigma = np.full(shape.r, cfg.get_float("trend_sd", 0.03) ** 2)
    params.sigma[shape.idio_start:shape.idio_start + n] = \
        cfg.get_float("idio_sd", 0.3) ** 2
    params.sigma[shape.cycle_start] = cfg.get_float("cycle_sd", 1.0) ** 2
    params.omega0 = 0.1 * np.eye(shape.q)

    macro_ids = [f"M{i + 1}" for i in range(n)]
    panel, states = simulate(params, T, seed=seed, index_sets=sets,
                             series_ids=macro_ids, start_date=start)
    cycle = states[:, shape.common_cycle_index]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    targets = _target_rows(rng, cycle, cfg, n_targets)
    target_ids = [f"T{k + 1}" for k in range(n_targets)]

    merged = Panel(panel.dates, np.vstack([panel.values, targets]),
                   tuple(macro_ids + target_ids), panel.vintage_date)
    os.makedirs(out_dir, exist_ok=True)
    write_csv_panel(merged, os.path.join(out_dir, "data.csv"))
    truth = Panel(panel.dates, cycle[None, :], ("psi1",),
                  panel.vintage_date)
    write_csv_panel(truth, os.path.join(out_dir, "truth_cycle.csv"))

    vintage_count = cfg.get_int("vintage_count", 0)
    if vintage_count:
        if vintage_count > T:
            raise ConfigError("vintage_count exceeds simulated periods")
        vdir = os.path.join(out_dir, "vintages")
        os.makedirs(vdir, exist_ok=True)
        for offset in range(vintage_count):
            t = T - vintage_count + offset
            cut = int(merged.dates[t])
            write_csv_panel(merged.truncate(cut),
                            os.path.join(vdir, f"{month_to_str(cut)}.csv"))
    cfg.echo(out_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# decompose


def _fit_on_panel(cfg: RunConfig, macro: Panel):
    transforms = _transforms_from(cfg, macro.n_series)
    transformed = panel_mod.apply_transform(macro, transforms)
    std_panel, std = standardize(transformed)
    shape = _shape_from(cfg, macro.n_series)
    gamma = _gamma_from(cfg)
    config = ecm.ConvergenceConfig(max_iter=cfg.get_int("max_iter", 1000))
    result = ecm.fit(std_panel, shape, gamma, config, std)
    return shape, std_panel, std, result


def cmd_decompose(cfg: RunConfig) -> int:
    out_dir = cfg.require("out")
    data = cfg.require("data")
    full = load_csv_panel(data)
    macro = _macro_panel(full, cfg)
    expected_n = cfg.get_int("n")
    if expected_n is not None and macro.n_series != expected_n:
        print(f"shape mismatch: panel has {macro.n_series} series, "
              f"config expects {expected_n}", file=sys.stderr)
        return EXIT_CONFIG

    shape, std_panel, std, result = _fit_on_panel(cfg, macro)
    os.makedirs(out_dir, exist_ok=True)
    cfg.echo(out_dir)
    with open(os.path.join(out_dir, "diagnostics.csv"), "w") as fh:
        fh.write("\n".join(result.diagnostics.csv_lines()) + "\n")

    sm = kalman.smooth(result.params, std_panel)
    with open(os.path.join(out_dir, "cycle.csv"), "w") as fh:
        fh.write("date,psi1_smoothed\n")
        for t in range(std_panel.n_periods):
            fh.write(f"{month_to_str(int(std_panel.dates[t]))},"
                     f"{sm.means[t + 1, shape.common_cycle_index]!r}\n")
    trend_states = list(range(shape.n_trends))
    with open(os.path.join(out_dir, "trends.csv"), "w") as fh:
        fh.write("date," + ",".join(f"trend{i + 1}"
                                    for i in trend_states) + "\n")
        for t in range(std_panel.n_periods):
            vals = ",".join(repr(float(sm.means[t + 1, i]))
                            for i in trend_states)
            fh.write(f"{month_to_str(int(std_panel.dates[t]))},{vals}\n")
    with open(os.path.join(out_dir, "params.json"), "w") as fh:
        fh.write(params_to_json(result.params, shape, result.index_sets,
                                std))
    if not result.diagnostics.converged:
        print("did not converge within max_iter; diagnostics retained",
              file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# select


def cmd_select(cfg: RunConfig) -> int:
    out_dir = cfg.require("out")
    full = load_csv_panel(cfg.require("data"))
    macro = _macro_panel(full, cfg)
    transformed = panel_mod.apply_transform(
        macro, _transforms_from(cfg, macro.n_series))
    std_panel, std = standardize(transformed)
    shape = _shape_from(cfg, macro.n_series)
    grid = ecm.SelectionGrid(
        p_values=tuple(int(v) for v in cfg.get_list(
            "grid_p", [str(cfg.get_int("p", 12))])),
        lam_range=(cfg.get_float("grid_lambda_min", 1e-2),
                   cfg.get_float("grid_lambda_max", 2.5)),
        alpha_range=(cfg.get_float("grid_alpha_min", 0.0),
                     cfg.get_float("grid_alpha_max", 1.0)),
        beta_range=(cfg.get_float("grid_beta_min", 1.0),
                    cfg.get_float("grid_beta_max", 1.2)),
        lam_count=cfg.get_int("grid_lambda_points", 4),
        alpha_count=cfg.get_int("grid_alpha_points", 3),
        beta_count=cfg.get_int("grid_beta_points", 2))
    spec = ecm.JackknifeSpec(
        n_subsamples=cfg.get_int("subsamples", 4),
        d=cfg.get_int("d"), seed=cfg.get_int("seed", 0))
    config = ecm.ConvergenceConfig(max_iter=cfg.get_int("max_iter", 1000))
    best = ecm.select_hyperparameters(std_panel, shape, grid, spec, config,
                                      std)
    os.makedirs(out_dir, exist_ok=True)
    cfg.echo(out_dir)
    with open(os.path.join(out_dir, "selected.json"), "w") as fh:
        json.dump({"lambda": best.lam, "alpha": best.alpha,
                   "beta": best.beta, "p": best.p}, fh, indent=1)
    return EXIT_OK


# ---------------------------------------------------------------------------
# ensembles


def _augmentation_from(cfg: RunConfig) -> AugmentationConfig:
    return AugmentationConfig(
        forward=cfg.get_int("forward", 11),
        backward=cfg.get_int("backward", 11),
        target_lags=cfg.get_int("target_lags", 12))


def _plan_from(cfg: RunConfig, seed: int, scheme=None) -> ResamplePlan:
    scheme = Scheme(scheme or cfg.get("scheme", "pair"))
    return ResamplePlan(
        scheme, j=cfg.get_int("j", 100), seed=seed,
        block_length=cfg.get_int("block_length"),
        expected_block_length=cfg.get_float("expected_block_length"),
        d=cfg.get_int("d"))


def _training_table(cfg, variant, target_values, paths, aug):
    if variant == "augmented":
        rows, origins = build_augmented_predictors(target_values, paths, aug)
    else:
        rows, origins = build_ar_predictors(target_values,
                                            aug.target_lags)
    return training_pairs(rows, origins, target_values) + (rows, origins)


def _resolve_min_leaf(cfg, rows, ys):
    raw = cfg.get("min_leaf", "10")
    if str(raw).strip().lower() == "auto":
        return select_min_leaf(rows, ys)
    return int(raw)


def cmd_fit_ensemble(cfg: RunConfig) -> int:
    out_dir = cfg.require("out")
    full = load_csv_panel(cfg.require("data"))
    target_id = cfg.require("target")
    variant = cfg.get("variant", "augmented")
    macro = _macro_panel(full, cfg)
    target_values = full.series(target_id)
    aug = _augmentation_from(cfg)
    seed = cfg.get_int("seed", 0)

    shape, std_panel, std, result = _fit_on_panel(cfg, macro)
    paths = realtime_cycle_paths(result.params, std_panel, shape, aug)
    train_rows, ys, _, _, _ = _training_table(cfg, variant, target_values,
                                              paths, aug)
    min_leaf = _resolve_min_leaf(cfg, train_rows, ys)
    plan = _plan_from(cfg, seed)
    if plan.scheme is Scheme.ARTIFICIAL_JACKKNIFE and \
            cfg.get("mode", "fast") == "full" and variant == "augmented":
        model = fit_ensemble_full_jackknife(
            std_panel, result.params, shape, target_values, aug, plan,
            min_leaf)
    else:
        model = fit_ensemble(train_rows, ys, plan, min_leaf,
                             aug if variant == "augmented" else None)
    os.makedirs(out_dir, exist_ok=True)
    cfg.echo(out_dir)
    with open(os.path.join(out_dir, "ensemble.json"), "w") as fh:
        fh.write(ensemble_to_manifest(model))
    with open(os.path.join(out_dir, "params.json"), "w") as fh:
        fh.write(params_to_json(result.params, shape, result.index_sets,
                                std))
    if not result.diagnostics.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_forecast(cfg: RunConfig) -> int:
    out_dir = cfg.require("out")
    full = load_csv_panel(cfg.require("data"))
    target_id = cfg.require("target")
    with open(cfg.require("ensemble")) as fh:
        model = ensemble_from_manifest(fh.read())
    target_values = full.series(target_id)
    aug = _augmentation_from(cfg)

    if model.augmentation is not None:
        with open(cfg.require("params")) as fh:
            params, shape, sets, std = params_from_json(fh.read())
        macro = _macro_panel(full, cfg)
        transformed = panel_mod.apply_transform(
            macro, _transforms_from(cfg, macro.n_series))
        # reuse the training-time scale factors: the loading matrix embeds them
        std_panel = transformed.with_values(
            std.standardize_values(transformed.values))
        paths = realtime_cycle_paths(params, std_panel, shape,
                                     model.augmentation)
        rows, origins = build_augmented_predictors(
            target_values, paths, model.augmentation)
    else:
        rows, origins = build_ar_predictors(target_values, aug.target_lags)
    if rows.shape[0] == 0:
        raise InputError("no usable forecast origin in the data")
    forecast = ensemble_forecast(model, rows[-1])
    origin_date = int(full.dates[origins[-1]])
    os.makedirs(out_dir, exist_ok=True)
    cfg.echo(out_dir)
    with open(os.path.join(out_dir, "forecast.csv"), "w") as fh:
        fh.write("date,target,forecast\n")
        fh.write(f"{month_to_str(origin_date + 1)},{target_id},"
                 f"{forecast!r}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _vintage_files(vintage_dir):
    files = sorted(f for f in os.listdir(vintage_dir) if f.endswith(".csv"))
    if not files:
        raise InputError(f"no vintage files in {vintage_dir}")
    months = [month_from_str(os.path.splitext(f)[0]) for f in files]
    gaps = [month_to_str(a + 1) for a, b in zip(months[:-1], months[1:])
            if b != a + 1]
    if gaps:
        raise InputError("missing vintage files for: " + ", ".join(gaps))
    return [os.path.join(vintage_dir, f) for f in files], months


def cmd_evaluate(cfg: RunConfig) -> int:
    out_dir = cfg.require("out")
    vintage_dir = cfg.require("vintages")
    target_ids = cfg.get_list("targets")
    if not target_ids:
        raise ConfigError("no targets configured")
    schemes = [Scheme(s) for s in cfg.get_list("schemes",
                                               ["pair", "jackknife"])]
    variants = cfg.get_list("variants", ["autoregressive", "augmented"])
    aug = _augmentation_from(cfg)
    seed = cfg.get_int("seed", 0)
    mode = cfg.get("mode", "fast")

    audit_path = os.environ.get("CYCLETREES_AUDIT_LOG")
    audit = open(audit_path, "w") if audit_path else None

    files, months = _vintage_files(vintage_dir)
    final = load_csv_panel(files[-1])
    realized = {tid: dict(zip(final.dates.tolist(), final.series(tid)))
                for tid in target_ids}

    forecasts = []  # (target, scheme, variant, date, yhat)
    non_converged = 0
    for v_idx, (path, month) in enumerate(zip(files[:-1], months[:-1])):
        if audit:
            panel_mod.ACCESS_LOG = log = []
        vintage = load_csv_panel(path)
        if audit:
            for opened in log:
                audit.write(f"{month_to_str(month)} {opened}\n")
            panel_mod.ACCESS_LOG = None
        macro = _macro_panel(vintage, cfg)
        shape, std_panel, std, result = _fit_on_panel(cfg, macro)
        non_converged += not result.diagnostics.converged
        paths = realtime_cycle_paths(result.params, std_panel, shape, aug)
        origin = vintage.n_periods - 1
        for t_idx, tid in enumerate(target_ids):
            target_values = vintage.series(tid)
            for s_idx, scheme in enumerate(schemes):
                for var_idx, variant in enumerate(variants):
                    rows_train, ys, _, rows_all, origins_all = \
                        _training_table(cfg, variant, target_values, paths,
                                        aug)
                    if origins_all.size == 0 or origins_all[-1] != origin:
                        continue
                    min_leaf = _resolve_min_leaf(cfg, rows_train, ys)
                    member_seed = int(np.random.SeedSequence(
                        [seed, v_idx, t_idx, s_idx, var_idx])
                        .generate_state(1)[0])
                    plan = _plan_from(cfg, member_seed, scheme)
                    if scheme is Scheme.ARTIFICIAL_JACKKNIFE and \
                            mode == "full" and variant == "augmented":
                        model = fit_ensemble_full_jackknife(
                            std_panel, result.params, shape, target_values,
                            aug, plan, min_leaf)
                    else:
                        model = fit_ensemble(rows_train, ys, plan, min_leaf)
                    yhat = ensemble_forecast(model, rows_all[-1])
                    forecasts.append((tid, scheme.value, variant,
                                      int(vintage.dates[origin]) + 1, yhat))
    if audit:
        audit.close()

    os.makedirs(out_dir, exist_ok=True)
    cfg.echo(out_dir)
    with open(os.path.join(out_dir, "forecasts.csv"), "w") as fh:
        fh.write("target,scheme,variant,date,forecast,realized\n")
        for tid, scheme, variant, date, yhat in forecasts:
            real = realized[tid].get(date, np.nan)
            fh.write(f"{tid},{scheme},{variant},{month_to_str(date)},"
                     f"{yhat!r},{real!r}\n")

    with open(os.path.join(out_dir, "report.csv"), "w") as fh:
        fh.write("target,scheme,variant,rel_mse\n")
        for tid in target_ids:
            for scheme in schemes:
                for variant in variants:
                    preds, truths = [], []
                    for rec in forecasts:
                        if rec[:3] == (tid, scheme.value, variant):
                            real = realized[tid].get(rec[3])
                            if real is not None and np.isfinite(real):
                                preds.append(rec[4])
                                truths.append(real)
                    if not preds:
                        continue
                    rel = relative_mse(np.array(preds), np.array(truths))
                    fh.write(f"{tid},{scheme.value},{variant},{rel!r}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cycletrees",
        description="Trend-cycle decomposition and cycle-augmented tree "
                    "ensembles")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "decompose", "select", "fit-ensemble",
                 "forecast", "evaluate"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="key = value configuration file")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--out")
        cmd.add_argument("--scheme",
                         choices=[s.value for s in Scheme])
        cmd.add_argument("--mode", choices=["fast", "full"])
        cmd.add_argument("--extended", action="store_true")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "decompose": cmd_decompose,
    "select": cmd_select,
    "fit-ensemble": cmd_fit_ensemble,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        return _COMMANDS[args.command](cfg)
    except SelectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (CycletreesError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
