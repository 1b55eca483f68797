"""CART regression trees and a bagged forest of them."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _serial
from ._random import check_seed, derive_seed, make_rng

# Reductions within this relative margin of the best one count as ties, so
# that the tie-break order (feature, then threshold) is not at the mercy of
# summation rounding.
TIE_RTOL = 1e-12

LEAF = -1


def split_gains(X, y, min_samples_leaf=1):
    """Variance reduction of every midpoint split, for all columns of ``X`` at once.

    Returns ``(thresholds, gains, valid)``, each of shape (n - 1, n_features),
    with rows in ascending threshold order per column. Thresholds are
    midpoints between consecutive sorted values; ``valid`` marks those
    between distinct values that leave ``min_samples_leaf`` rows on each
    side. The reduction is ``var(y) - (n_l var(y_l) + n_r var(y_r)) / n``
    with population variances.
    """
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    n = len(y)
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    # Centre targets to keep the running sums well conditioned.
    yc = np.asarray(y, dtype=float) - np.mean(y)
    ys = yc[order]
    csum = np.cumsum(ys, axis=0)[:-1]
    csq = np.cumsum(ys * ys, axis=0)[:-1]
    total, total_sq = float(yc.sum()), float(np.sum(yc * yc))
    n_left = np.arange(1, n)[:, None]
    n_right = n - n_left
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    sse_left = csq - csum**2 / n_left
    sse_right = (total_sq - csq) - (total - csum) ** 2 / n_right
    gains = (total_sq - sse_left - sse_right) / n
    thresholds = (xs[:-1] + xs[1:]) / 2.0
    return thresholds, gains, valid


def best_split(X, y, features=None, min_samples_leaf=1):
    """Best (feature, threshold, reduction) over ``features``, or None.

    None means no admissible split reduces the variance. Ties go to the
    lowest feature index, then the lowest threshold.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        return None
    features = np.arange(X.shape[1]) if features is None else np.sort(np.asarray(features, dtype=np.int64))
    scale = float(np.var(y))
    if scale == 0.0 or len(features) == 0:
        return None
    thr, gain, valid = split_gains(X[:, features], y, min_samples_leaf)
    gain = np.where(valid, gain, -np.inf)
    top = gain.max()
    tol = TIE_RTOL * scale
    if top <= tol:
        return None
    # Column-major scan: first feature, then first threshold within it.
    hit = np.flatnonzero((gain >= top - tol).T.ravel())[0]
    col, row = divmod(int(hit), gain.shape[0])
    return int(features[col]), float(thr[row, col]), float(gain[row, col])


@dataclass(frozen=True)
class RegressionTree:
    """Flat node arrays in preorder; ``feature == LEAF`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self):
        return len(self.feature)

    def apply(self, X):
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X):
        return self.value[self.apply(np.asarray(X, dtype=float))]

    def depth(self):
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def to_lines(self):
        lines = []
        for i in range(self.n_nodes):
            if self.feature[i] == LEAF:
                lines.append(_serial.line("leaf", self.value[i], int(self.n_samples[i])))
            else:
                lines.append(
                    _serial.line("split", int(self.feature[i]), self.threshold[i], int(self.n_samples[i]))
                )
        return lines

    @classmethod
    def from_items(cls, items, start=0):
        """Rebuild one tree from preorder ``(kind, tokens)`` pairs beginning at
        ``items[start]``; returns the tree and the index after its last node."""
        nodes = []
        pos = start

        def build():
            nonlocal pos
            kind, toks = items[pos]
            pos += 1
            i = len(nodes)
            if kind == "leaf":
                nodes.append([LEAF, np.nan, -1, -1, float(toks[0]), int(toks[1])])
            elif kind == "split":
                nodes.append([int(toks[0]), float(toks[1]), -1, -1, np.nan, int(toks[2])])
                nodes[i][2] = build()
                nodes[i][3] = build()
            else:
                raise ValueError(f"unexpected node kind {kind!r}")
            return i

        build()
        cols = list(zip(*nodes))
        tree = cls(
            feature=np.array(cols[0], dtype=np.int64),
            threshold=np.array(cols[1], dtype=float),
            left=np.array(cols[2], dtype=np.int64),
            right=np.array(cols[3], dtype=np.int64),
            value=np.array(cols[4], dtype=float),
            n_samples=np.array(cols[5], dtype=np.int64),
        )
        return tree, pos


def build_tree(X, y, max_depth=None, min_samples_leaf=5, max_features=None, seed=0):
    """Grow a CART tree on all rows of ``X``.

    ``seed`` only drives the choice of candidate features when
    ``max_features`` is below the feature count.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 1:
        raise ValueError("cannot grow a tree on zero rows")
    k = d if max_features is None else int(max_features)
    if not 1 <= k <= d:
        raise ValueError(f"max_features must lie in [1, {d}], got {max_features}")
    rng = make_rng(seed)
    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def grow(rows, depth):
        i = len(feature)
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(float(y[rows].mean()))
        count.append(len(rows))
        if (max_depth is not None and depth >= max_depth) or len(rows) < 2 * min_samples_leaf:
            return i
        cands = range(d) if k == d else np.sort(rng.choice(d, size=k, replace=False))
        split = best_split(X[rows], y[rows], cands, min_samples_leaf)
        if split is None:
            return i
        f, thr, _ = split
        mask = X[rows, f] <= thr
        feature[i], threshold[i], value[i] = f, thr, np.nan
        left[i] = grow(rows[mask], depth + 1)
        right[i] = grow(rows[~mask], depth + 1)
        return i

    grow(np.arange(n), 0)
    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=float),
        n_samples=np.array(count, dtype=np.int64),
    )


class _TreeParams:
    def _check_tree_params(self, n_features):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0 or None, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.max_features is not None and not 1 <= self.max_features <= n_features:
            raise ValueError(f"max_features must lie in [1, {n_features}], got {self.max_features}")
        check_seed(self.random_state)

    def _check_predict_input(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return X


class RegressionTreeRegressor(_TreeParams, RegressorMixin, BaseEstimator):
    """Single CART tree with variance-reduction splits.

    Parameters
    ----------
    max_depth : int or None, default=None
    min_samples_leaf : int, default=5
    max_features : int or None, default=None
        Features drawn (without replacement) as split candidates at each node.
    random_state : int, default=0
    """

    def __init__(self, max_depth=None, min_samples_leaf=5, max_features=None, random_state=0):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self._check_tree_params(X.shape[1])
        self.n_features_in_ = X.shape[1]
        self.tree_ = build_tree(
            X, y, self.max_depth, self.min_samples_leaf, self.max_features, self.random_state
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        return self.tree_.predict(self._check_predict_input(X))


class RandomForestRegressor(_TreeParams, RegressorMixin, BaseEstimator):
    """Bagged CART trees; the prediction is the mean over trees.

    Each tree ``t`` gets its own seed derived from ``(random_state, t)``,
    which drives both its bootstrap draw and its feature subsampling, so the
    forest does not depend on the order or concurrency of tree fitting.

    Parameters
    ----------
    n_estimators : int, default=16
    max_depth : int or None, default=None
    min_samples_leaf : int, default=5
    max_features : int or None, default=None
    bootstrap : bool, default=True
        Resample N rows with replacement for every tree.
    random_state : int, default=0
    n_jobs : int, default=1
        Threads used to fit trees.
    """

    def __init__(
        self,
        n_estimators=16,
        max_depth=None,
        min_samples_leaf=5,
        max_features=None,
        bootstrap=True,
        random_state=0,
        n_jobs=1,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _fit_one(self, X, y, seed):
        rows = np.arange(len(y))
        if self.bootstrap:
            rows = make_rng(seed, 0).integers(0, len(y), size=len(y))
        tree = build_tree(
            X[rows], y[rows], self.max_depth, self.min_samples_leaf, self.max_features,
            derive_seed(seed, 1),
        )
        return tree, rows

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        self._check_tree_params(X.shape[1])
        self.n_features_in_ = X.shape[1]
        self.tree_seeds_ = [derive_seed(self.random_state, t) for t in range(self.n_estimators)]
        if self.n_jobs and self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                results = list(pool.map(lambda s: self._fit_one(X, y, s), self.tree_seeds_))
        else:
            results = [self._fit_one(X, y, s) for s in self.tree_seeds_]
        self.trees_ = [tree for tree, _ in results]
        self.sample_indices_ = [rows for _, rows in results]
        return self

    @classmethod
    def from_trees(cls, trees, n_features):
        model = cls(n_estimators=len(trees))
        model.trees_ = list(trees)
        model.n_features_in_ = n_features
        model.tree_seeds_ = []
        return model

    def predict(self, X):
        check_is_fitted(self, "trees_")
        X = self._check_predict_input(X)
        return np.mean([tree.predict(X) for tree in self.trees_], axis=0)

    def to_text(self):
        check_is_fitted(self, "trees_")
        lines = [
            "model random_forest",
            _serial.line("n_features", int(self.n_features_in_)),
            _serial.line("n_trees", len(self.trees_)),
            "max_depth " + ("none" if self.max_depth is None else str(int(self.max_depth))),
            _serial.line("min_samples_leaf", int(self.min_samples_leaf)),
            "max_features " + ("all" if self.max_features is None else str(int(self.max_features))),
            "bootstrap " + ("true" if self.bootstrap else "false"),
            _serial.line("random_state", int(self.random_state)),
        ]
        for t, tree in enumerate(self.trees_):
            seed = self.tree_seeds_[t] if self.tree_seeds_ else 0
            lines.append(_serial.line("tree", t, int(seed)))
            lines.extend(tree.to_lines())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        items = _serial.expect_header(text, "random_forest")
        head = {}
        pos = 0
        while pos < len(items) and items[pos][0] != "tree":
            head[items[pos][0]] = items[pos][1]
            pos += 1
        trees, seeds = [], []
        while pos < len(items):
            key, toks = items[pos]
            if key != "tree":
                raise ValueError(f"expected 'tree', got {key!r}")
            seeds.append(int(toks[1]))
            tree, pos = RegressionTree.from_items(items, pos + 1)
            trees.append(tree)
        md = head["max_depth"][0]
        mf = head["max_features"][0]
        model = cls(
            n_estimators=int(head["n_trees"][0]),
            max_depth=None if md == "none" else int(md),
            min_samples_leaf=int(head["min_samples_leaf"][0]),
            max_features=None if mf == "all" else int(mf),
            bootstrap=head["bootstrap"][0] == "true",
            random_state=int(head["random_state"][0]),
        )
        model.n_features_in_ = int(head["n_features"][0])
        model.trees_ = trees
        model.tree_seeds_ = seeds
        return model
