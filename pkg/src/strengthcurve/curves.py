"""Learning curves over cross-validation folds and the plateau metric.

For fold ``j`` the candidate training rows are the union of the other folds,
shuffled once with a stream derived from ``(seed, j)``. The subset at size
``s`` is the first ``s`` rows of that shuffle, so subsets are nested and
are the same for every estimator given the same folds and seed.
"""

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from . import _serial
from ._random import check_seed, derive_seed, make_rng
from .dataset import round_half_up
from .metrics import mse


class LearningCurveError(RuntimeError):
    """A fit inside the learning curve failed; the original error is ``__cause__``."""

    def __init__(self, size, fold, cause):
        self.size = size
        self.fold = fold
        super().__init__(f"fit failed at train_size={size}, fold={fold}: {cause}")


def size_schedule(n_available, increment=0.10):
    """Training sizes ``round_half_up(i * increment * n_available)``, deduplicated,
    ending at ``n_available``."""
    if n_available < 10:
        raise ValueError(f"need at least 10 available rows, got {n_available}")
    if not 0.0 < increment <= 1.0:
        raise ValueError(f"increment must lie in (0, 1], got {increment}")
    steps = int(np.floor(1.0 / increment + 1e-9))
    sizes = [round_half_up(i * increment * n_available) for i in range(1, steps + 1)]
    sizes.append(n_available)
    out = []
    for s in sizes:
        if s >= 1 and (not out or s > out[-1]):
            out.append(min(s, n_available))
    return out


@dataclass(frozen=True)
class LearningCurvePoint:
    train_size: int
    train_mse_mean: float
    val_mse_mean: float
    val_mse_std: float
    train_mse_folds: tuple
    val_mse_folds: tuple


@dataclass(frozen=True)
class LearningCurve:
    label: str
    points: tuple
    increment: float
    seed: int
    subset_digests: dict = field(default_factory=dict, compare=False)

    @property
    def sizes(self):
        return [p.train_size for p in self.points]

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points])

    def to_tsv(self):
        k = len(self.points[0].val_mse_folds)
        header = ["train_size", "train_mse_mean", "val_mse_mean", "val_mse_std"]
        header += [f"train_mse_fold{j}" for j in range(k)]
        header += [f"val_mse_fold{j}" for j in range(k)]
        rows = ["\t".join(header)]
        for p in self.points:
            vals = [str(p.train_size)] + [
                _serial.fmt(v)
                for v in (p.train_mse_mean, p.val_mse_mean, p.val_mse_std, *p.train_mse_folds, *p.val_mse_folds)
            ]
            rows.append("\t".join(vals))
        return "\n".join(rows) + "\n"


def _subset_digest(idx):
    return hashlib.sha256(np.asarray(idx, dtype=np.int64).tobytes()).hexdigest()[:16]


def _fit_task(args):
    estimator, X, y, train_idx, val_idx = args
    model = clone(estimator).fit(X[train_idx], y[train_idx])
    return mse(model.predict(X[train_idx]), y[train_idx]), mse(model.predict(X[val_idx]), y[val_idx])


def fold_subsets(folds, increment=0.10, seed=0):
    """Yield ``(size_index, size, fold, train_rows, val_rows)`` in schedule order."""
    seed = check_seed(seed)
    pools = []
    for j in range(folds.k):
        pool = folds.training_indices(j)
        pools.append(pool[make_rng(seed, 0, j).permutation(len(pool))])
    n_available = min(len(p) for p in pools)
    for si, size in enumerate(size_schedule(n_available, increment)):
        for j in range(folds.k):
            yield si, size, j, pools[j][:size], folds.validation_indices(j)


def learning_curve(estimator, X, y, folds, increment=0.10, seed=0, label=None, n_jobs=1):
    """Training and validation MSE against training-set size.

    Parameters
    ----------
    estimator : sklearn-style regressor
        Cloned for every (size, fold); if it has a ``random_state`` parameter
        it is set to a seed derived from ``(seed, size index, fold)``.
    X, y : arrays indexed by the dataset indices stored in ``folds``.
    folds : FoldPlan
    increment : float
        Step of the size schedule as a fraction of the smallest fold
        complement.
    n_jobs : int
        Worker processes; results do not depend on it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    seed = check_seed(seed)
    if folds.k < 2:
        raise ValueError("learning curves need at least 2 folds")
    has_seed = "random_state" in estimator.get_params()

    keys, tasks, digests = [], [], {}
    for si, size, j, train_idx, val_idx in fold_subsets(folds, increment, seed):
        est = clone(estimator)
        if has_seed:
            est.set_params(random_state=derive_seed(seed, 1, si, j))
        keys.append((size, j))
        tasks.append((est, X, y, train_idx, val_idx))
        digests[(size, j)] = _subset_digest(train_idx)

    results = []
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            futures = [pool.submit(_fit_task, t) for t in tasks]
            for key, fut in zip(keys, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    raise LearningCurveError(*key, exc) from exc
    else:
        for key, task in zip(keys, tasks):
            try:
                results.append(_fit_task(task))
            except Exception as exc:
                raise LearningCurveError(*key, exc) from exc

    by_size = {}
    for (size, j), res in zip(keys, results):
        by_size.setdefault(size, []).append(res)
    points = []
    for size, res in by_size.items():
        tr = np.array([r[0] for r in res])
        va = np.array([r[1] for r in res])
        points.append(
            LearningCurvePoint(
                train_size=int(size),
                train_mse_mean=float(tr.mean()),
                val_mse_mean=float(va.mean()),
                val_mse_std=float(va.std()),
                train_mse_folds=tuple(float(v) for v in tr),
                val_mse_folds=tuple(float(v) for v in va),
            )
        )
    return LearningCurve(
        label=label or type(estimator).__name__,
        points=tuple(points),
        increment=float(increment),
        seed=seed,
        subset_digests=digests,
    )


def min_data_to_plateau(curve):
    """Smallest training size from which every later point has a mean
    validation MSE below ``final mean + final std``.

    The final point always qualifies, so the result is at most the final
    training size.
    """
    if not curve.points:
        raise ValueError("curve has no points")
    final = curve.points[-1]
    bound = final.val_mse_mean + final.val_mse_std
    i = len(curve.points) - 1
    while i > 0 and curve.points[i - 1].val_mse_mean < bound:
        i -= 1
    return curve.points[i].train_size
