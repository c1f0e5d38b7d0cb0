"""Binary regression trees over lagged predictor windows.

A tree is a directed graph whose vertices are naturals: the root is 1, every
split allocates the next two ids, and by construction the even child of a
vertex carries the ">= threshold" branch while the odd child carries "<".
Internal vertices hold a (feature, lag, threshold) label; leaves hold values.

Fitting is greedy recursive least-squares partitioning with midpoint
thresholds and a minimum leaf size as the only complexity control.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ._tree_impl import best_split
from .errors import ConfigError, InputError

ROOT = 1


@dataclass(frozen=True)
class PredictorWindow:
    """A single m x p_lags block of predictors, most recent column first."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if not np.all(np.isfinite(vals)):
            raise InputError("predictor window carries non-finite entries")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def p_lags(self) -> int:
        return self.values.shape[1]

    def lagged(self, feature: int, lag: int) -> float:
        """Value of 1-based ``feature`` at 1-based ``lag``."""
        return float(self.values[feature - 1, lag - 1])


@dataclass
class BinaryTree:
    """Vertices, edges, split labels and leaf values of a fitted tree."""

    m: int
    p_lags: int
    children: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)
    leaf_values: dict = field(default_factory=dict)
    sigma: float = 0.0

    @property
    def vertices(self) -> tuple:
        return tuple(sorted(set(self.children) | set(self.leaf_values) |
                            {ROOT}))

    @property
    def edges(self) -> tuple:
        out = []
        for v in sorted(self.children):
            even, odd = self.children[v]
            out.append((v, even))
            out.append((v, odd))
        return tuple(out)

    def parent_map(self) -> dict:
        return {w: v for v, pair in self.children.items() for w in pair}


def leaves(tree: BinaryTree):
    """Partition vertices into leaves and internal vertices."""
    leaf_set = frozenset(tree.leaf_values)
    internal = frozenset(tree.children)
    return leaf_set, internal


def root_to_leaf_walk(tree: BinaryTree, leaf: int) -> tuple:
    """Ordered edges of the unique walk from the root to ``leaf``."""
    if leaf not in tree.leaf_values:
        raise InputError(f"vertex {leaf} is not a leaf")
    parents = tree.parent_map()
    walk = []
    v = leaf
    while v != ROOT:
        parent = parents[v]
        walk.append((parent, v))
        v = parent
    return tuple(reversed(walk))


def split_indicator(window: PredictorWindow, label, w: int) -> float:
    """1 when the window falls on child ``w``'s side of the split, else 0."""
    c1, c2, c3 = label
    x = window.lagged(c1, c2)
    if x >= c3:
        return 1.0 if w % 2 == 0 else 0.0
    return 1.0 if w % 2 == 1 else 0.0


def predict_additive(tree: BinaryTree, window: PredictorWindow) -> float:
    """Sum over leaves of leaf value times its walk's indicator product."""
    total = 0.0
    for leaf, value in tree.leaf_values.items():
        prod = 1.0
        for v, w in root_to_leaf_walk(tree, leaf):
            prod *= split_indicator(window, tree.labels[v], w)
            if prod == 0.0:
                break
        total += value * prod
    return total


def predict(tree: BinaryTree, window) -> float:
    """Forecast for the window; walks the tree from the root."""
    if not isinstance(window, PredictorWindow):
        window = PredictorWindow(window)
    if (window.m, window.p_lags) != (tree.m, tree.p_lags):
        raise InputError(
            f"window is {window.m}x{window.p_lags}, tree expects "
            f"{tree.m}x{tree.p_lags}")
    v = ROOT
    while v in tree.children:
        c1, c2, c3 = tree.labels[v]
        even, odd = tree.children[v]
        v = even if window.lagged(c1, c2) >= c3 else odd
    return tree.leaf_values[v]


def _flatten_windows(windows) -> np.ndarray:
    if isinstance(windows, np.ndarray) and windows.ndim == 3:
        arr = windows
    else:
        arr = np.stack([w.values if isinstance(w, PredictorWindow) else
                        np.atleast_2d(w) for w in windows])
    n, m, p = arr.shape
    return arr.reshape(n, m * p), m, p


def fit_cart(targets: np.ndarray, windows, min_leaf: int) -> BinaryTree:
    """Greedy least-squares tree.

    Splitting stops when a node has fewer than ``2 * min_leaf`` rows or no
    admissible split strictly reduces the summed squared error.  Leaf values
    are node means; ``sigma`` is the root-mean-squared training residual.
    """
    if min_leaf < 1:
        raise ConfigError(f"min_leaf must be >= 1, got {min_leaf}")
    y = np.asarray(targets, dtype=np.float64)
    x, m, p = _flatten_windows(windows)
    if y.size != x.shape[0]:
        raise InputError("targets and windows disagree on the sample count")
    if y.size < 2 * min_leaf:
        raise InputError(
            f"need at least {2 * min_leaf} samples, got {y.size}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise InputError("training data carries non-finite entries")

    tree = BinaryTree(m=m, p_lags=p)
    fitted = np.empty(y.size)
    next_id = 2
    queue = deque([(ROOT, np.arange(y.size, dtype=np.int64))])
    while queue:
        vertex, idx = queue.popleft()
        mean = float(y[idx].mean())
        if idx.size < 2 * min_leaf:
            tree.leaf_values[vertex] = mean
            fitted[idx] = mean
            continue
        col, thr, child_sse = best_split(x, y, idx, min_leaf)
        parent_sse = float(np.sum((y[idx] - mean) ** 2))
        if col < 0 or not parent_sse - child_sse > 0.0:
            tree.leaf_values[vertex] = mean
            fitted[idx] = mean
            continue
        c1, c2 = divmod(col, p)
        tree.labels[vertex] = (c1 + 1, c2 + 1, float(thr))
        even, odd = next_id, next_id + 1
        next_id += 2
        tree.children[vertex] = (even, odd)
        ge = x[idx, col] >= thr
        queue.append((even, idx[ge]))
        queue.append((odd, idx[~ge]))

    tree.sigma = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return tree


def training_sse(targets: np.ndarray, windows, tree: BinaryTree) -> float:
    x, _, _ = _flatten_windows(windows)
    y = np.asarray(targets, dtype=np.float64)
    preds = np.array([predict(tree, x[i].reshape(tree.m, tree.p_lags))
                      for i in range(y.size)])
    return float(np.sum((y - preds) ** 2))


# ---------------------------------------------------------------------------
# Serialization (nested JSON for audit and golden tests)


def _vertex_doc(tree: BinaryTree, v: int):
    if v in tree.leaf_values:
        return {"id": v, "value": tree.leaf_values[v]}
    c1, c2, c3 = tree.labels[v]
    even, odd = tree.children[v]
    return {"id": v, "label": [c1, c2, c3],
            "children": [_vertex_doc(tree, even), _vertex_doc(tree, odd)]}


def tree_to_json(tree: BinaryTree) -> str:
    doc = {"m": tree.m, "p_lags": tree.p_lags, "sigma": tree.sigma,
           "root": _vertex_doc(tree, ROOT)}
    return json.dumps(doc)


def tree_from_json(text: str) -> BinaryTree:
    doc = json.loads(text)
    tree = BinaryTree(m=doc["m"], p_lags=doc["p_lags"], sigma=doc["sigma"])

    def walk(node):
        if "value" in node:
            tree.leaf_values[node["id"]] = float(node["value"])
            return
        c1, c2, c3 = node["label"]
        tree.labels[node["id"]] = (int(c1), int(c2), float(c3))
        kids = node["children"]
        tree.children[node["id"]] = (kids[0]["id"], kids[1]["id"])
        walk(kids[0])
        walk(kids[1])

    walk(doc["root"])
    return tree
