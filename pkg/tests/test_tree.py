import numpy as np
import pytest

from cycletrees.errors import ConfigError, InputError
from cycletrees.tree import (
    BinaryTree,
    PredictorWindow,
    fit_cart,
    leaves,
    predict,
    predict_additive,
    root_to_leaf_walk,
    split_indicator,
    training_sse,
    tree_from_json,
    tree_to_json,
)
from cycletrees._tree_impl import _best_split_loop, _best_split_numpy, \
    best_split


def seven_vertex_tree(b3=3.0, b4=4.0, b6=6.0, b7=7.0):
    return BinaryTree(
        m=3, p_lags=2,
        children={1: (2, 3), 2: (4, 5), 5: (6, 7)},
        labels={1: (3, 2, 1.5), 2: (2, 1, 10.0), 5: (1, 1, 5.0)},
        leaf_values={3: b3, 4: b4, 6: b6, 7: b7})


def example_window():
    # columns: lag 1 then lag 2
    return PredictorWindow(np.array([[4.5, 5.0],
                                     [10.0, 12.0],
                                     [2.0, 0.5]]))


class TestGraph:
    def test_leaf_partition_of_printed_tree(self):
        f, fbar = leaves(seven_vertex_tree())
        assert f == frozenset({3, 4, 6, 7})
        assert fbar == frozenset({1, 2, 5})

    def test_singleton(self):
        tree = BinaryTree(m=1, p_lags=1, leaf_values={1: 7.0})
        f, fbar = leaves(tree)
        assert f == frozenset({1}) and fbar == frozenset()
        assert root_to_leaf_walk(tree, 1) == ()
        assert predict(tree, np.zeros((1, 1))) == 7.0

    def test_edge_listing_pairs_share_parent(self):
        edges = seven_vertex_tree().edges
        assert edges == ((1, 2), (1, 3), (2, 4), (2, 5), (5, 6), (5, 7))
        for k in range(0, len(edges), 2):
            assert edges[k][0] == edges[k + 1][0]
            assert edges[k][1] % 2 == 0 and edges[k + 1][1] % 2 == 1

    def test_walks(self):
        tree = seven_vertex_tree()
        assert root_to_leaf_walk(tree, 7) == ((1, 2), (2, 5), (5, 7))
        assert root_to_leaf_walk(tree, 3) == ((1, 3),)
        with pytest.raises(InputError):
            root_to_leaf_walk(tree, 2)

    def test_leaf_count_identity_random_trees(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            tree = BinaryTree(m=1, p_lags=1, leaf_values={1: 0.0})
            next_id = 2
            while len(tree.vertices) < rng.integers(1, 16):
                leaf_ids = list(tree.leaf_values)
                v = leaf_ids[rng.integers(len(leaf_ids))]
                del tree.leaf_values[v]
                tree.labels[v] = (1, 1, float(rng.standard_normal()))
                tree.children[v] = (next_id, next_id + 1)
                tree.leaf_values[next_id] = 0.0
                tree.leaf_values[next_id + 1] = 0.0
                next_id += 2
            f, fbar = leaves(tree)
            assert len(f) == len(fbar) + 1


class TestIndicators:
    def test_example_leaf_products(self):
        tree = seven_vertex_tree()
        window = example_window()
        products = {}
        for leaf in (3, 4, 6, 7):
            prod = 1.0
            for v, w in root_to_leaf_walk(tree, leaf):
                prod *= split_indicator(window, tree.labels[v], w)
            products[leaf] = prod
        assert products == {3: 1.0, 4: 0.0, 6: 0.0, 7: 0.0}

    def test_boundary_even_odd(self):
        window = PredictorWindow(np.array([[1.5]]))
        label = (1, 1, 1.5)
        assert split_indicator(window, label, 2) == 1.0
        assert split_indicator(window, label, 3) == 0.0

    def test_partition_of_unity(self):
        rng = np.random.default_rng(4)
        tree = seven_vertex_tree()
        for _ in range(100):
            window = PredictorWindow(rng.standard_normal((3, 2)) * 5)
            total = 0.0
            for leaf in tree.leaf_values:
                prod = 1.0
                for v, w in root_to_leaf_walk(tree, leaf):
                    prod *= split_indicator(window, tree.labels[v], w)
                total += prod
            assert total == 1.0


class TestPredict:
    def test_example_prediction_is_b3(self):
        tree = seven_vertex_tree(b3=42.0)
        assert predict(tree, example_window()) == 42.0
        assert predict_additive(tree, example_window()) == 42.0

    def test_two_strategies_agree(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal(60)
        windows = rng.standard_normal((60, 2, 3))
        tree = fit_cart(y, windows, min_leaf=3)
        for _ in range(50):
            w = PredictorWindow(rng.standard_normal((2, 3)) * 2)
            np.testing.assert_allclose(predict(tree, w),
                                       predict_additive(tree, w))

    def test_dimension_check(self):
        tree = seven_vertex_tree()
        with pytest.raises(InputError):
            predict(tree, np.zeros((2, 2)))


def brute_force_best(x, y, idx, min_leaf):
    """Exhaustive split search: every (column, midpoint) pair."""
    best = np.inf
    for col in range(x.shape[1]):
        vals = np.unique(x[idx, col])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (a + b)
            left = idx[x[idx, col] >= thr]
            right = idx[x[idx, col] < thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            sse = np.sum((y[left] - y[left].mean()) ** 2) + \
                np.sum((y[right] - y[right].mean()) ** 2)
            best = min(best, sse)
    return best


def assert_tree_matches_exhaustive(tree, x, y, min_leaf):
    """Walk the fitted tree; every split must attain the brute-force SSE."""
    stack = [(1, np.arange(y.size))]
    while stack:
        v, idx = stack.pop()
        if v in tree.leaf_values:
            if idx.size >= 2 * min_leaf:
                parent_sse = np.sum((y[idx] - y[idx].mean()) ** 2)
                assert brute_force_best(x, y, idx, min_leaf) >= \
                    parent_sse - 1e-9
            np.testing.assert_allclose(tree.leaf_values[v], y[idx].mean())
            continue
        c1, c2, thr = tree.labels[v]
        col = (c1 - 1) * tree.p_lags + (c2 - 1)
        left = idx[x[idx, col] >= thr]
        right = idx[x[idx, col] < thr]
        achieved = np.sum((y[left] - y[left].mean()) ** 2) + \
            np.sum((y[right] - y[right].mean()) ** 2)
        expected = brute_force_best(x, y, idx, min_leaf)
        np.testing.assert_allclose(achieved, expected, rtol=1e-9, atol=1e-9)
        even, odd = tree.children[v]
        stack.append((even, left))
        stack.append((odd, right))


class TestFitCart:
    def test_constant_targets(self):
        y = np.full(10, 3.5)
        windows = np.random.default_rng(0).standard_normal((10, 2, 1))
        tree = fit_cart(y, windows, min_leaf=1)
        assert leaves(tree)[0] == frozenset({1})
        assert tree.leaf_values[1] == 3.5
        assert tree.sigma == 0.0

    def test_step_function_single_split(self):
        x = np.linspace(-1, 1, 20)
        y = (x >= 0).astype(float)
        windows = x.reshape(-1, 1, 1)
        tree = fit_cart(y, windows, min_leaf=1)
        assert len(tree.children) == 1
        c1, c2, thr = tree.labels[1]
        assert (c1, c2) == (1, 1)
        below = x[x < 0].max()
        above = x[x >= 0].min()
        assert below < thr <= above
        assert training_sse(y, windows, tree) == 0.0

    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            n = int(rng.integers(20, 41))
            windows = rng.standard_normal((n, 3, 2))
            y = rng.standard_normal(n) + windows[:, 0, 0]
            tree = fit_cart(y, windows, min_leaf=5)
            x = windows.reshape(n, 6)
            assert_tree_matches_exhaustive(tree, x, y, 5)

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(23)
        y = rng.standard_normal(50)
        windows = rng.standard_normal((50, 2, 2))
        tree = fit_cart(y, windows, min_leaf=7)
        x = windows.reshape(50, 4)
        counts = {1: np.arange(50)}
        stack = [(1, counts[1])]
        while stack:
            v, idx = stack.pop()
            if v in tree.leaf_values:
                assert idx.size >= 7
                continue
            c1, c2, thr = tree.labels[v]
            col = (c1 - 1) * 2 + (c2 - 1)
            even, odd = tree.children[v]
            stack.append((even, idx[x[idx, col] >= thr]))
            stack.append((odd, idx[x[idx, col] < thr]))

    def test_monotone_transform_keeps_structure(self):
        rng = np.random.default_rng(29)
        windows = rng.standard_normal((60, 3, 1))
        y = np.sin(windows[:, 1, 0]) + 0.1 * rng.standard_normal(60)
        tree_a = fit_cart(y, windows, min_leaf=5)

        warped = windows.copy()
        warped[:, 1, 0] = np.exp(warped[:, 1, 0])
        tree_b = fit_cart(y, warped, min_leaf=5)

        assert set(tree_a.children) == set(tree_b.children)
        for v in tree_a.labels:
            assert tree_a.labels[v][:2] == tree_b.labels[v][:2]
        # identical training partitions
        def memberships(tree, data):
            out = []
            for row in data:
                v = 1
                while v in tree.children:
                    c1, c2, thr = tree.labels[v]
                    even, odd = tree.children[v]
                    v = even if row[c1 - 1, c2 - 1] >= thr else odd
                out.append(v)
            return out
        assert memberships(tree_a, windows) == memberships(tree_b, warped)

    def test_deeper_trees_never_increase_training_sse(self):
        rng = np.random.default_rng(31)
        windows = rng.standard_normal((80, 2, 2))
        y = windows[:, 0, 0] ** 2 + 0.2 * rng.standard_normal(80)
        previous = np.inf
        for min_leaf in (40, 20, 10, 5, 2):
            tree = fit_cart(y, windows, min_leaf)
            sse = training_sse(y, windows, tree)
            assert sse <= previous + 1e-9
            previous = sse

    def test_training_prediction_equals_leaf_mean(self):
        rng = np.random.default_rng(37)
        windows = rng.standard_normal((30, 2, 1))
        y = rng.standard_normal(30)
        tree = fit_cart(y, windows, min_leaf=3)
        x = windows.reshape(30, 2)
        groups = {}
        for i in range(30):
            v = 1
            while v in tree.children:
                c1, c2, thr = tree.labels[v]
                even, odd = tree.children[v]
                v = even if x[i, (c1 - 1)] >= thr else odd
            groups.setdefault(v, []).append(i)
        for v, rows in groups.items():
            np.testing.assert_allclose(tree.leaf_values[v], y[rows].mean())
            for i in rows:
                np.testing.assert_allclose(predict(tree, windows[i]),
                                           y[rows].mean())

    def test_min_leaf_config_error(self):
        with pytest.raises(ConfigError):
            fit_cart(np.zeros(4), np.zeros((4, 1, 1)), min_leaf=0)


class TestKernelBackends:
    def test_loop_and_numpy_agree(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            n = int(rng.integers(4, 60))
            x = rng.standard_normal((n, 4))
            if rng.random() < 0.5:
                x[:, 0] = np.round(x[:, 0])  # force ties
            y = rng.standard_normal(n)
            idx = np.sort(rng.choice(n, size=max(2, n // 2), replace=False))
            got_l = _best_split_loop(x, y, idx.astype(np.int64), 1)
            got_n = _best_split_numpy(x, y, idx.astype(np.int64), 1)
            assert got_l[0] == got_n[0]
            np.testing.assert_allclose(got_l[1], got_n[1])
            np.testing.assert_allclose(got_l[2], got_n[2], atol=1e-9)

    def test_active_backend_matches_brute_force(self):
        rng = np.random.default_rng(43)
        x = rng.standard_normal((40, 3))
        y = rng.standard_normal(40)
        idx = np.arange(40, dtype=np.int64)
        col, thr, sse = best_split(x, y, idx, 4)
        np.testing.assert_allclose(sse, brute_force_best(x, y, idx, 4),
                                   atol=1e-9)


def test_serialization_round_trip():
    rng = np.random.default_rng(47)
    y = rng.standard_normal(40)
    windows = rng.standard_normal((40, 3, 2))
    tree = fit_cart(y, windows, min_leaf=4)
    back = tree_from_json(tree_to_json(tree))
    assert back.children == tree.children
    assert back.labels == tree.labels
    assert back.leaf_values == tree.leaf_values
    assert back.sigma == tree.sigma
    for _ in range(10):
        w = rng.standard_normal((3, 2))
        assert predict(back, w) == predict(tree, w)
