import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strengthcurve.forest import (
    LEAF,
    RandomForestRegressor,
    RegressionTree,
    RegressionTreeRegressor,
    best_split,
    build_tree,
)
from strengthcurve.synth import SynthConfig, generate


def brute_force_split(X, y, min_samples_leaf=1, rtol=1e-12):
    """Enumerate every (feature, midpoint) pair and score it directly."""
    n = len(y)
    parent = np.var(y)
    if parent == 0:
        return None
    scored = []
    for f in range(X.shape[1]):
        values = sorted(set(X[:, f].tolist()))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2
            left, right = y[X[:, f] <= thr], y[X[:, f] > thr]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            gain = parent - (len(left) * np.var(left) + len(right) * np.var(right)) / n
            scored.append((f, thr, gain))
    if not scored:
        return None
    top = max(g for _, _, g in scored)
    if top <= rtol * parent:
        return None
    return min((f, thr, g) for f, thr, g in scored if g >= top - rtol * parent)[:2] + (top,)


def leaf_rows(tree, X):
    leaves = tree.apply(X)
    return {leaf: np.flatnonzero(leaves == leaf) for leaf in np.unique(leaves)}


class TestBestSplit:
    def test_constant_targets(self):
        assert best_split(np.array([[0.0], [1.0], [2.0]]), np.array([4.0, 4.0, 4.0])) is None

    def test_constant_features(self):
        assert best_split(np.ones((4, 2)), np.array([1.0, 2.0, 3.0, 4.0])) is None

    def test_two_points(self):
        f, thr, gain = best_split(np.array([[0.0], [1.0]]), np.array([0.0, 10.0]))
        assert (f, thr) == (0, 0.5)
        assert gain == pytest.approx(25.0)

    def test_step(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        f, thr, gain = best_split(X, (X[:, 0] > 0).astype(float))
        assert (f, thr) == (0, 0.0)
        assert gain == pytest.approx(0.25)

    def test_tie_prefers_lowest_feature(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert best_split(X, np.array([0.0, 1.0]))[:2] == (0, 0.5)

    def test_tie_prefers_lowest_threshold(self):
        # Splitting after either outer point gives the same reduction.
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 0.0, 0.0, 1.0])
        assert best_split(X, y)[1] == 0.5

    def test_min_leaf_respected(self):
        X = np.arange(6.0)[:, None]
        y = np.array([10.0, 0, 0, 0, 0, 0])
        assert best_split(X, y, min_samples_leaf=1)[1] == 0.5
        assert best_split(X, y, min_samples_leaf=2)[1] == 1.5

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(123)
        for trial in range(200):
            n = int(rng.integers(2, 9))
            if trial % 2:
                X = rng.integers(0, 4, size=(n, 2)).astype(float)
                y = rng.integers(0, 3, size=n).astype(float)
            else:
                X = rng.normal(size=(n, 2))
                y = rng.normal(size=n)
            leaf = int(rng.integers(1, 3))
            got = best_split(X, y, min_samples_leaf=leaf)
            want = brute_force_split(X, y, leaf)
            if want is None:
                assert got is None
            else:
                assert got[:2] == want[:2]
                assert got[2] == pytest.approx(want[2], rel=1e-9, abs=1e-12)


class TestTree:
    def test_single_row(self):
        tree = build_tree(np.array([[1.0, 2.0]]), np.array([7.0]))
        assert tree.n_nodes == 1 and tree.value[0] == 7.0

    def test_step_data_exact(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = (X[:, 0] > 0).astype(float)
        tree = build_tree(X, y, min_samples_leaf=1)
        assert tree.depth() == 1
        np.testing.assert_array_equal(tree.predict(X), y)

    def test_depth_zero(self):
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(30, 3)), rng.normal(size=30)
        tree = build_tree(X, y, max_depth=0)
        assert tree.n_nodes == 1
        assert tree.value[0] == pytest.approx(y.mean())

    @pytest.mark.parametrize("seed", range(5))
    def test_structural_invariants(self, seed):
        rng = np.random.default_rng(seed)
        X = np.round(rng.normal(size=(120, 4)), 1)
        y = X[:, 0] ** 2 + rng.normal(size=120)
        tree = build_tree(X, y, min_samples_leaf=int(rng.integers(1, 6)), max_features=int(rng.integers(1, 5)), seed=seed)
        # Leaf-mean law, recomputed by routing the training rows again.
        for leaf, rows in leaf_rows(tree, X).items():
            assert tree.feature[leaf] == LEAF
            assert tree.value[leaf] == pytest.approx(y[rows].mean(), rel=1e-12)
            assert tree.n_samples[leaf] == len(rows)
        # Threshold containment, checked node by node on the rows reaching it.
        stack = [(0, np.arange(len(y)))]
        while stack:
            node, rows = stack.pop()
            if tree.feature[node] == LEAF:
                continue
            assert tree.left[node] >= 0 and tree.right[node] >= 0
            col = X[rows, tree.feature[node]]
            thr = tree.threshold[node]
            assert (col < thr).any() and (col > thr).any()
            mask = col <= thr
            stack += [(tree.left[node], rows[mask]), (tree.right[node], rows[~mask])]

    def test_estimator_wrapper(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = RegressionTreeRegressor(min_samples_leaf=1).fit(X, y)
        np.testing.assert_array_equal(model.predict(X), y)
        with pytest.raises(ValueError):
            model.predict(np.ones((2, 3)))


@pytest.fixture(scope="module")
def synth500():
    ds = generate(SynthConfig(n=500, seed=1, noise_std=2.0))
    return ds.X, ds.y


class TestForest:
    def test_no_bootstrap_all_features_gives_identical_trees(self, synth500):
        X, y = synth500
        rf = RandomForestRegressor(bootstrap=False, random_state=4).fit(X, y)
        single = build_tree(X, y, min_samples_leaf=5)
        for tree in rf.trees_:
            np.testing.assert_array_equal(tree.threshold, single.threshold)
            np.testing.assert_array_equal(tree.value, single.value)
        np.testing.assert_allclose(rf.predict(X), single.predict(X), rtol=1e-14)

    def test_deterministic(self, synth500):
        X, y = synth500
        a = RandomForestRegressor(random_state=7).fit(X, y)
        b = RandomForestRegressor(random_state=7).fit(X, y)
        assert a.to_text() == b.to_text()
        c = RandomForestRegressor(random_state=8).fit(X, y)
        assert a.to_text() != c.to_text()

    def test_schedule_independence(self, synth500):
        X, y = synth500
        seq = RandomForestRegressor(random_state=3, max_features=3, n_jobs=1).fit(X, y)
        par = RandomForestRegressor(random_state=3, max_features=3, n_jobs=4).fit(X, y)
        assert seq.to_text() == par.to_text()

    def test_tree_seeds(self, synth500):
        X, y = synth500
        rf = RandomForestRegressor(random_state=5).fit(X, y)
        assert len(rf.trees_) == 16
        assert len(set(rf.tree_seeds_)) == 16

    def test_bagging_reduces_training_error(self, synth500):
        X, y = synth500
        rf = RandomForestRegressor(random_state=2).fit(X, y)
        forest_mse = np.mean((rf.predict(X) - y) ** 2)
        tree_mse = np.mean([np.mean((t.predict(X) - y) ** 2) for t in rf.trees_])
        assert forest_mse <= tree_mse

    def test_bootstrap_leaf_means(self, synth500):
        X, y = synth500
        rf = RandomForestRegressor(random_state=6, n_estimators=3).fit(X, y)
        for tree, rows in zip(rf.trees_, rf.sample_indices_):
            Xb, yb = X[rows], y[rows]
            for leaf, idx in leaf_rows(tree, Xb).items():
                assert tree.value[leaf] == pytest.approx(yb[idx].mean(), rel=1e-12)

    def test_constant_forest(self):
        leaf = RegressionTree.from_items([("leaf", ["30", "4"])])[0]
        rf = RandomForestRegressor.from_trees([leaf] * 16, n_features=6)
        np.testing.assert_array_equal(rf.predict(np.random.default_rng(0).normal(size=(3, 6))), 30.0)

    def test_two_tree_mean(self):
        t10 = RegressionTree.from_items([("leaf", ["10", "1"])])[0]
        t20 = RegressionTree.from_items([("leaf", ["20", "1"])])[0]
        rf = RandomForestRegressor.from_trees([t10, t20], n_features=2)
        assert rf.predict(np.zeros((1, 2)))[0] == 15.0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32))
    def test_prediction_bounds(self, seed):
        rng = np.random.default_rng(seed)
        X, y = rng.normal(size=(40, 2)), rng.normal(size=40)
        rf = RandomForestRegressor(n_estimators=4, min_samples_leaf=2, random_state=seed % 1000).fit(X, y)
        leaves = np.concatenate([t.value[t.feature == LEAF] for t in rf.trees_])
        pred = rf.predict(rng.normal(size=(50, 2)) * 3)
        assert np.all(pred >= leaves.min() - 1e-12)
        assert np.all(pred <= leaves.max() + 1e-12)

    def test_serialization_round_trip(self, synth500):
        X, y = synth500
        rf = RandomForestRegressor(n_estimators=3, random_state=1).fit(X, y)
        text = rf.to_text()
        back = RandomForestRegressor.from_text(text)
        np.testing.assert_array_equal(back.predict(X), rf.predict(X))
        assert back.to_text() == text

    def test_param_validation(self):
        with pytest.raises(ValueError):
            RandomForestRegressor(n_estimators=0).fit(np.ones((3, 2)), np.arange(3.0))
        with pytest.raises(ValueError):
            RandomForestRegressor(max_features=3).fit(np.ones((3, 2)), np.arange(3.0))
