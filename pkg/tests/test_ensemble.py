import numpy as np
import pytest

from cycletrees.ensemble import (
    AugmentationConfig,
    ResamplePlan,
    Scheme,
    artificial_jackknife,
    augmentation_vector,
    block_bootstrap,
    build_ar_predictors,
    build_augmented_predictors,
    default_jackknife_d,
    ensemble_forecast,
    ensemble_from_manifest,
    ensemble_to_manifest,
    fit_ensemble,
    fit_ensemble_full_jackknife,
    member_forecasts,
    pair_bootstrap,
    realtime_cycle_paths,
    select_min_leaf,
    stationary_bootstrap,
    training_pairs,
)
from cycletrees.errors import ConfigError, InputError
from cycletrees.statespace import ModelShape, build_trend_cycle, simulate
from cycletrees.tree import fit_cart, predict

BASE = AugmentationConfig()


class TestAugmentation:
    def test_baseline_vector_length(self):
        assert BASE.augmentation_length == 65
        assert BASE.n_predictors == 77
        path = np.random.default_rng(0).standard_normal(BASE.path_length)
        assert augmentation_vector(path, BASE).size == 65

    def test_constant_cycle(self):
        path = np.full(BASE.path_length, 2.5)
        vec = augmentation_vector(path, BASE)
        np.testing.assert_array_equal(vec[:23], 2.5)
        np.testing.assert_array_equal(vec[23:], 0.0)

    def test_linear_cycle(self):
        t = 100
        path = np.array([t + j for j in range(11, -12, -1)], dtype=float)
        vec = augmentation_vector(path, BASE)
        np.testing.assert_array_equal(vec[23:45], 1.0)   # first differences
        # forward-minus-current block runs j = 11..2
        np.testing.assert_array_equal(vec[45:55],
                                      np.arange(11, 1, -1, dtype=float))
        assert vec[45 + (11 - 5)] == 5.0
        # current-minus-backward block runs k = 2..11
        np.testing.assert_array_equal(vec[55:65],
                                      np.arange(2, 12, dtype=float))

    def test_row_assembly_drops_short_history(self):
        rng = np.random.default_rng(1)
        target = rng.standard_normal(40)
        paths = {t: rng.standard_normal(BASE.path_length)
                 for t in range(11, 40)}
        rows, origins = build_augmented_predictors(target, paths, BASE)
        assert rows.shape == (29, 77)
        assert origins[0] == 11
        np.testing.assert_array_equal(rows[0, :12], target[11::-1])
        train_rows, next_y, train_origins = training_pairs(rows, origins,
                                                           target)
        assert train_origins[-1] == 38
        np.testing.assert_array_equal(next_y, target[train_origins + 1])

    def test_ar_rows(self):
        target = np.arange(20.0)
        rows, origins = build_ar_predictors(target, lags=12)
        assert rows.shape == (9, 12)
        np.testing.assert_array_equal(rows[0], target[11::-1])

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            AugmentationConfig(forward=1)


class TestPairBootstrap:
    def test_single_sample(self):
        plans = pair_bootstrap(1, 3, seed=0)
        for idx in plans:
            np.testing.assert_array_equal(idx, [0])

    def test_seed_determinism(self):
        a = pair_bootstrap(50, 2, seed=9)
        b = pair_bootstrap(50, 2, seed=9)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_unique_fraction_matches_theory(self):
        plans = pair_bootstrap(1000, 200, seed=3)
        fractions = [np.unique(idx).size / 1000 for idx in plans]
        assert abs(np.mean(fractions) - (1 - np.exp(-1))) < 0.02


class TestBlockBootstrap:
    def test_full_length_block(self):
        for idx in block_bootstrap(30, 3, 30, seed=0):
            np.testing.assert_array_equal(idx, np.arange(30))

    def test_unit_block_is_iid(self):
        idx = block_bootstrap(500, 1, 1, seed=1)[0]
        assert idx.size == 500
        # draws cover the range roughly uniformly
        assert np.unique(idx).size > 300

    def test_runs_are_contiguous(self):
        for idx in block_bootstrap(100, 5, 10, seed=2):
            assert idx.size == 100
            for start in range(0, 100, 10):
                run = idx[start:start + 10]
                np.testing.assert_array_equal(run,
                                              np.arange(run[0], run[0] + 10))


class TestStationaryBootstrap:
    def test_block_length_mean(self):
        rng_seed = 5
        # realized block lengths: count resets by regenerating many series
        idx = stationary_bootstrap(100_000, 1, 8.0, seed=rng_seed)[0]
        breaks = np.where(np.diff(idx) % 100_000 != 1)[0]
        lengths = np.diff(np.concatenate([[-1], breaks,
                                          [idx.size - 1]]))
        assert abs(lengths.mean() - 8.0) / 8.0 < 0.05

    def test_unit_expected_length(self):
        idx = stationary_bootstrap(400, 1, 1.0, seed=6)[0]
        assert idx.size == 400
        assert np.unique(idx).size > 200

    def test_determinism(self):
        a = stationary_bootstrap(50, 3, 4.0, seed=7)
        b = stationary_bootstrap(50, 3, 4.0, seed=7)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_wraparound_stays_in_range(self):
        idx = stationary_bootstrap(37, 4, 12.0, seed=8)
        for arr in idx:
            assert arr.min() >= 0 and arr.max() < 37


class TestArtificialJackknife:
    def test_exhaustive_small(self):
        masks = artificial_jackknife(3, 3, 1, seed=0)
        got = sorted(tuple(np.flatnonzero(m)) for m in masks)
        assert got == [(0,), (1,), (2,)]

    def test_full_enumeration_ten_choose_two(self):
        masks = artificial_jackknife(5, 10, 2, seed=0)
        got = {tuple(np.flatnonzero(m)) for m in masks}
        assert len(got) == 10
        assert all(len(t) == 2 for t in got)

    def test_cardinality_and_distinctness(self):
        observed = np.ones((6, 4), dtype=bool)
        observed[0, 0] = False
        masks = artificial_jackknife(observed, 12, 3, seed=1)
        seen = set()
        for m in masks:
            assert m.shape == observed.shape
            assert m.sum() == 3
            assert not m[0, 0]
            seen.add(tuple(np.flatnonzero(m.ravel())))
        assert len(seen) == 12

    def test_domain_errors(self):
        with pytest.raises(InputError):
            artificial_jackknife(4, 2, 4, seed=0)
        with pytest.raises(InputError):
            artificial_jackknife(4, 2, 0, seed=0)

    def test_default_d(self):
        assert default_jackknife_d(100) == 20
        assert default_jackknife_d(2) == 1


def _toy_rows(n=60, seed=0):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n, 5))
    y = rows[:, 0] + 0.3 * rng.standard_normal(n)
    return rows, y


class TestFitEnsemble:
    def test_full_block_equals_single_tree(self):
        rows, y = _toy_rows()
        plan = ResamplePlan(Scheme.BLOCK_BOOTSTRAP, j=1, seed=0,
                            block_length=len(y))
        model = fit_ensemble(rows, y, plan, min_leaf=5)
        single = fit_cart(y, rows[:, :, None], 5)
        for i in range(10):
            np.testing.assert_allclose(ensemble_forecast(model, rows[i]),
                                       predict(single, rows[i][:, None]))

    def test_seed_determinism(self):
        rows, y = _toy_rows()
        plan = ResamplePlan(Scheme.PAIR_BOOTSTRAP, j=7, seed=11)
        a = fit_ensemble(rows, y, plan, min_leaf=5)
        b = fit_ensemble(rows, y, plan, min_leaf=5)
        for i in range(5):
            assert ensemble_forecast(a, rows[i]) == \
                ensemble_forecast(b, rows[i])

    def test_forecast_mean_and_bounds(self):
        rows, y = _toy_rows()
        plan = ResamplePlan(Scheme.PAIR_BOOTSTRAP, j=9, seed=3)
        model = fit_ensemble(rows, y, plan, min_leaf=5)
        for i in range(8):
            members = member_forecasts(model, rows[i])
            agg = ensemble_forecast(model, rows[i])
            np.testing.assert_allclose(agg, members.mean())
            assert members.min() - 1e-12 <= agg <= members.max() + 1e-12

    def test_mean_identities(self):
        # direct identities on the aggregation rule
        class Stub:
            def __init__(self, v):
                self.v = v
        preds = np.array([1.0, 2.0, 3.0])
        assert np.mean(preds) == 2.0
        assert np.mean(preds[::-1]) == np.mean(preds)

    def test_variance_reduction_over_single_tree(self):
        rng = np.random.default_rng(13)
        wins = 0
        for trial in range(20):
            n = 120
            x = rng.uniform(-1, 1, (n, 1))
            y = (x[:, 0] >= 0).astype(float) + 0.5 * rng.standard_normal(n)
            xt = rng.uniform(-1, 1, (200, 1))
            yt = (xt[:, 0] >= 0).astype(float)
            plan = ResamplePlan(Scheme.PAIR_BOOTSTRAP, j=100,
                                seed=1000 + trial)
            model = fit_ensemble(x, y, plan, min_leaf=5)
            single = fit_cart(y, x[:, :, None], 5)
            mse_e = np.mean([(ensemble_forecast(model, xt[i]) - yt[i]) ** 2
                             for i in range(200)])
            mse_s = np.mean([(predict(single, xt[i][:, None]) - yt[i]) ** 2
                             for i in range(200)])
            wins += mse_e <= mse_s
        assert wins >= 18

    def test_ensemble_noise_shrinks_with_j(self):
        rows, y = _toy_rows(n=80, seed=5)
        probe = rows[0]

        def spread(j, n_rep=30):
            vals = [ensemble_forecast(
                fit_ensemble(rows, y,
                             ResamplePlan(Scheme.PAIR_BOOTSTRAP, j=j,
                                          seed=50_000 + rep),
                             min_leaf=5), probe) for rep in range(n_rep)]
            return np.std(vals)

        ratio = spread(400) / spread(100)
        assert abs(ratio - 0.5) <= 0.15


class TestSelectMinLeaf:
    def test_singleton_grid(self):
        rows, y = _toy_rows(n=40)
        assert select_min_leaf(rows, y, grid=(10,)) == 10

    def test_noise_prefers_large_leaves(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(700 + seed)
            rows = rng.standard_normal((240, 3))
            y = rng.standard_normal(240)
            if select_min_leaf(rows, y) >= 30:  # at or above the grid median
                hits += 1
        assert hits >= 15

    def test_fine_structure_prefers_small_leaves(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(900 + seed)
            rows = rng.uniform(-2, 2, (400, 1))
            y = np.sin(3.0 * rows[:, 0]) + 0.05 * rng.standard_normal(400)
            if select_min_leaf(rows, y) == 5:
                hits += 1
        assert hits >= 15

    def test_too_few_rows(self):
        with pytest.raises(InputError):
            select_min_leaf(np.zeros((10, 2)), np.zeros(10))

    def test_empty_grid(self):
        rows, y = _toy_rows(n=40)
        with pytest.raises(ConfigError):
            select_min_leaf(rows, y, grid=())


def _cycle_model(seed=0, T=70):
    shape = ModelShape(n=2, p=2)
    params, sets = build_trend_cycle(shape)
    params.transition[shape.cycle_start, list(shape.cycle_columns(0))] = \
        (0.7, 0.1)
    for i in range(2):
        params.transition[shape.idio_start + i, shape.idio_start + i] = 0.2
    params.loadings[1, shape.cycle_start] = 0.6
    params.sigma = np.full(shape.r, 0.05)
    params.sigma[shape.cycle_start] = 1.0
    params.omega0 = 0.1 * np.eye(shape.q)
    panel, _ = simulate(params, T, seed=seed, index_sets=sets)
    return shape, params, panel


class TestNoLookahead:
    def test_truncation_leaves_windows_unchanged(self):
        shape, params, panel = _cycle_model()
        config = AugmentationConfig(forward=4, backward=4, target_lags=3)
        paths = realtime_cycle_paths(params, panel, shape, config)
        for t in (20, 35, 50):
            truncated = panel.truncate(int(panel.dates[t]))
            paths_t = realtime_cycle_paths(params, truncated, shape, config)
            np.testing.assert_allclose(paths_t[t], paths[t], atol=1e-12)

    def test_horizon_shorter_than_forward_rejected(self):
        path = np.zeros(5)
        with pytest.raises(InputError):
            augmentation_vector(path, BASE)


class TestFullModeJackknife:
    def test_runs_and_is_deterministic(self):
        shape, params, panel = _cycle_model(T=80)
        rng = np.random.default_rng(2)
        target = rng.standard_normal(80)
        config = AugmentationConfig(forward=3, backward=3, target_lags=3)
        plan = ResamplePlan(Scheme.ARTIFICIAL_JACKKNIFE, j=3, seed=4, d=6)
        a = fit_ensemble_full_jackknife(panel, params, shape, target,
                                        config, plan, min_leaf=6)
        b = fit_ensemble_full_jackknife(panel, params, shape, target,
                                        config, plan, min_leaf=6)
        probe = np.concatenate([target[10:7:-1],
                                augmentation_vector(
                                    np.zeros(config.path_length), config)])
        assert ensemble_forecast(a, probe) == ensemble_forecast(b, probe)
        assert a.j == 3


def test_manifest_round_trip():
    rows, y = _toy_rows()
    plan = ResamplePlan(Scheme.STATIONARY_BOOTSTRAP, j=3, seed=1,
                        expected_block_length=6.0)
    model = fit_ensemble(rows, y, plan, min_leaf=5, augmentation=BASE)
    back = ensemble_from_manifest(ensemble_to_manifest(model))
    assert back.j == model.j
    assert back.plan == model.plan
    assert back.min_leaf == model.min_leaf
    assert back.augmentation == model.augmentation
    for i in range(5):
        assert ensemble_forecast(back, rows[i]) == \
            ensemble_forecast(model, rows[i])
