"""CART regression trees (variance-reduction splits) and bagged random forests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, InputError, ShapeError

LEAF = -1
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class DecisionTree:
    """Flat array encoding of a binary regression tree.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise samples with
    ``x[feature[i]] <= threshold[i]`` go to ``left[i]`` and the rest to
    ``right[i]``. ``value[i]`` is the mean training target of the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def to_dict(self, node: int = 0) -> dict:
        """Nested-node JSON structure: leaves ``{"value", "n"}``, splits add
        ``{"feature", "threshold", "left", "right"}``."""
        out = {"value": float(self.value[node]), "n": int(self.n_samples[node])}
        if self.feature[node] != LEAF:
            out.update(
                feature=int(self.feature[node]),
                threshold=float(self.threshold[node]),
                left=self.to_dict(int(self.left[node])),
                right=self.to_dict(int(self.right[node])),
            )
        return out

    @classmethod
    def from_dict(cls, payload: dict, n_features: int) -> "DecisionTree":
        rows = []

        def walk(node):
            idx = len(rows)
            rows.append([LEAF, 0.0, LEAF, LEAF, node["value"], node["n"]])
            if "feature" in node:
                rows[idx][0], rows[idx][1] = node["feature"], node["threshold"]
                rows[idx][2] = walk(node["left"])
                rows[idx][3] = walk(node["right"])
            return idx

        walk(payload)
        cols = list(zip(*rows))
        return cls(
            np.array(cols[0], dtype=int),
            np.array(cols[1], dtype=float),
            np.array(cols[2], dtype=int),
            np.array(cols[3], dtype=int),
            np.array(cols[4], dtype=float),
            np.array(cols[5], dtype=int),
            n_features,
        )


def best_split(X, y, features, min_samples_leaf=1):
    """Best ``(feature, threshold, child_sse)`` over the given features, or ``None``.

    Thresholds are midpoints between consecutive distinct sorted values. The
    first minimum in (feature order, ascending threshold) wins ties.
    """
    n = len(y)
    yc = y - y.mean()
    # cumulative sums carry rounding noise; treat near-equal scores as ties
    tol = TIE_RTOL * max(float(yc @ yc), np.finfo(float).tiny)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], yc[order]
        csum, csq = np.cumsum(ys), np.cumsum(ys * ys)
        n_left = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        valid &= (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        if not valid.any():
            continue
        sl, ql = csum[:-1], csq[:-1]
        sr, qr = csum[-1] - sl, csq[-1] - ql
        sse = (ql - sl * sl / n_left) + (qr - sr * sr / (n - n_left))
        sse = np.where(valid, sse, np.inf)
        i = int(np.argmax(sse <= sse.min() + tol))
        if best is None or sse[i] < best[2] - tol:
            best = (f, 0.5 * (xs[i] + xs[i + 1]), float(sse[i]))
    return best


def _feature_count(max_features, n_features) -> int:
    if max_features is None:
        return n_features
    if isinstance(max_features, float) and 0.0 < max_features <= 1.0:
        return max(1, int(math.ceil(max_features * n_features)))
    if isinstance(max_features, int) and 1 <= max_features:
        return min(max_features, n_features)
    raise InputError(f"invalid max_features {max_features!r}")


def fit_tree(
    X,
    y,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | float | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Grow a tree greedily until purity, ``max_depth`` or ``min_samples_leaf`` stops it.

    When ``max_features`` restricts the candidates, each node draws its own
    feature subset from ``rng``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or len(X) != len(y):
        raise ShapeError(f"X {X.shape} and y {y.shape} do not align")
    if len(y) == 0:
        raise FitError("cannot fit a tree on zero samples")
    if min_samples_leaf < 1:
        raise InputError("min_samples_leaf must be >= 1")
    n_features = X.shape[1]
    k = _feature_count(max_features, n_features)
    if k < n_features and rng is None:
        rng = np.random.default_rng(0)

    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        count.append(len(idx))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if len(idx) < 2 * min_samples_leaf or (max_depth is not None and depth >= max_depth):
            continue
        ys = y[idx]
        if np.all(ys == ys[0]):
            continue
        features = range(n_features) if k == n_features else np.sort(rng.choice(n_features, k, replace=False))
        split = best_split(X[idx], ys, features, min_samples_leaf)
        if split is None:
            continue
        f, t, _ = split
        mask = X[idx, f] <= t
        feature[node], threshold[node] = int(f), float(t)
        left_idx, right_idx = idx[mask], idx[~mask]
        left[node] = new_node(left_idx)
        right[node] = new_node(right_idx)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], right_idx, depth + 1))
        stack.append((left[node], left_idx, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(value, dtype=float),
        np.array(count, dtype=int),
        n_features,
    )


def predict_tree(tree: DecisionTree, X) -> np.ndarray | float:
    """Route each row left on ``x[f] <= t``; a 1-D ``X`` is one sample and yields a float."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != tree.n_features:
        raise ShapeError(f"tree expects {tree.n_features} features, got {X.shape[1]}")
    node = np.zeros(len(X), dtype=int)
    active = tree.feature[node] != LEAF
    while active.any():
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, tree.feature[cur]] <= tree.threshold[cur]
        node[rows] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] != LEAF
    out = tree.value[node]
    return float(out[0]) if single else out


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise InputError("bootstrap needs n >= 1")
    return rng.integers(0, n, size=n)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: int | float | None = None
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise InputError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise InputError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class RandomForest:
    params: ForestParams
    trees: tuple
    seeds: tuple = field(default=())

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {
                "n_trees": p.n_trees,
                "max_depth": p.max_depth,
                "min_samples_leaf": p.min_samples_leaf,
                "max_features": p.max_features,
                "seed": p.seed,
                "bootstrap": p.bootstrap,
            },
            "n_features": self.trees[0].n_features,
            "seeds": list(self.seeds),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RandomForest":
        n_features = payload["n_features"]
        trees = tuple(DecisionTree.from_dict(t, n_features) for t in payload["trees"])
        return cls(ForestParams(**payload["params"]), trees, tuple(payload["seeds"]))


def fit_forest(X, y, params: ForestParams = ForestParams()) -> RandomForest:
    """Fit ``n_trees`` trees; tree ``i`` draws its bootstrap and feature subsets from seed ``seed + i``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeError(f"X {X.shape} and y {y.shape} do not align")
    if len(y) == 0:
        raise FitError("cannot fit a forest on zero samples")
    trees, seeds = [], []
    for i in range(params.n_trees):
        seed = params.seed + i
        rng = np.random.default_rng(seed)
        idx = bootstrap_indices(len(y), rng) if params.bootstrap else np.arange(len(y))
        trees.append(
            fit_tree(X[idx], y[idx], params.max_depth, params.min_samples_leaf, params.max_features, rng)
        )
        seeds.append(seed)
    return RandomForest(params, tuple(trees), tuple(seeds))


def predict_forest(forest: RandomForest, X) -> np.ndarray | float:
    preds = [predict_tree(t, X) for t in forest.trees]
    return float(np.mean(preds)) if np.isscalar(preds[0]) else np.mean(preds, axis=0)
