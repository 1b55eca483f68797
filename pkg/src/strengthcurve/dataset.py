"""Mixture records, CSV ingestion, train/test splits and cross-validation folds.

Fractions are held as 0-1 solid weight fractions. Coarse aggregate is the
implicit remainder and is never stored.
"""

import csv
import hashlib
import logging
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._random import check_seed, make_rng
from .exceptions import DataValidationError

logger = logging.getLogger(__name__)

FEATURES = (
    "w_cm",
    "cement_frac",
    "flyash_frac",
    "fine_agg_frac",
    "aea_dosage",
    "wra_dosage",
)
TARGET = "strength_mpa"
COLUMNS = FEATURES + (TARGET,)
FRACTIONS = ("cement_frac", "flyash_frac", "fine_agg_frac")

# Slack on the fraction-sum bound so that values written with 17 significant
# digits and read back still pass.
_SUM_TOL = 1e-12


def record_violation(values):
    """Return a description of the first broken invariant, or None.

    ``values`` maps every name in ``COLUMNS`` to a float.
    """
    for name in COLUMNS:
        if not math.isfinite(values[name]):
            return f"{name} must be finite, got {values[name]!r}"
    if values["w_cm"] <= 0:
        return f"w_cm must be > 0, got {values['w_cm']!r}"
    for name in FRACTIONS:
        v = values[name]
        if not 0.0 <= v <= 1.0:
            return f"fraction bound: {name} must lie in [0, 1], got {v!r}"
    total = sum(values[name] for name in FRACTIONS)
    if total > 1.0 + _SUM_TOL:
        return (
            "fraction sum bound: cement_frac + flyash_frac + fine_agg_frac "
            f"must be <= 1, got {total!r}"
        )
    for name in ("aea_dosage", "wra_dosage"):
        if values[name] < 0:
            return f"{name} must be >= 0, got {values[name]!r}"
    if values[TARGET] <= 0:
        return f"{TARGET} must be > 0, got {values[TARGET]!r}"
    return None


@dataclass(frozen=True)
class MixtureRecord:
    """One concrete mixture and its measured 28-day strength (MPa)."""

    w_cm: float
    cement_frac: float
    flyash_frac: float
    fine_agg_frac: float
    aea_dosage: float
    wra_dosage: float
    strength_mpa: float

    def __post_init__(self):
        values = {name: float(getattr(self, name)) for name in COLUMNS}
        for name, v in values.items():
            object.__setattr__(self, name, v)
        problem = record_violation(values)
        if problem is not None:
            raise DataValidationError(problem)


def feature_vector(rec):
    """Features of ``rec`` in the fixed order of ``FEATURES``."""
    return np.array([getattr(rec, name) for name in FEATURES], dtype=float)


@dataclass(frozen=True)
class Dataset:
    records: tuple
    source_id: str = "unnamed"
    n_skipped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise DataValidationError("dataset must contain at least one record")

    def __len__(self):
        return len(self.records)

    @property
    def X(self):
        """Feature matrix, shape (n_records, 6)."""
        return np.array([feature_vector(r) for r in self.records], dtype=float).reshape(
            len(self.records), len(FEATURES)
        )

    @property
    def y(self):
        return np.array([r.strength_mpa for r in self.records], dtype=float)

    @classmethod
    def from_arrays(cls, X, y, source_id="arrays"):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(FEATURES) or len(y) != len(X):
            raise DataValidationError(
                f"expected X of shape (n, {len(FEATURES)}) and y of length n, "
                f"got {X.shape} and {y.shape}"
            )
        records = []
        for i, (row, target) in enumerate(zip(X, y)):
            try:
                records.append(MixtureRecord(*row, target))
            except DataValidationError as exc:
                raise DataValidationError(str(exc), row=i + 1) from None
        return cls(tuple(records), source_id)


def load_csv(path, schema=None, percent_fractions=False, strict=True):
    """Read mixture records from a comma-separated file with a header row.

    Parameters
    ----------
    path : str or path-like
    schema : dict, optional
        Maps record field names to CSV header names. Fields not mentioned use
        their own name.
    percent_fractions : bool
        The three fraction columns are in percent and are divided by 100.
    strict : bool
        Reject the file on the first invalid row. When False, invalid rows
        are skipped and counted in ``Dataset.n_skipped``. Unparseable cells
        are always fatal.

    Returns
    -------
    Dataset
        One record per data row, in file order.
    """
    schema = dict(schema or {})
    unknown = set(schema) - set(COLUMNS)
    if unknown:
        raise DataValidationError(f"schema maps unknown fields: {sorted(unknown)}")
    mapping = {name: schema.get(name, name) for name in COLUMNS}

    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such data file: {path}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError("file is empty; a header row is required") from None

        dupes = sorted({h for h in header if header.count(h) > 1})
        if dupes:
            raise DataValidationError(f"duplicate header column(s): {dupes}")
        missing = [col for col in mapping.values() if col not in header]
        if missing:
            raise DataValidationError(f"missing header column(s): {missing}")
        positions = {name: header.index(col) for name, col in mapping.items()}

        records = []
        skipped = 0
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = {}
            for name, pos in positions.items():
                cell = row[pos].strip() if pos < len(row) else ""
                try:
                    values[name] = float(cell)
                except ValueError:
                    raise DataValidationError(
                        f"cannot parse {cell!r} as a number", row=row_no, column=mapping[name]
                    ) from None
            if percent_fractions:
                for name in FRACTIONS:
                    values[name] /= 100.0
            problem = record_violation(values)
            if problem is not None:
                if strict:
                    raise DataValidationError(problem, row=row_no)
                skipped += 1
                continue
            records.append(MixtureRecord(**values))

    if skipped:
        logger.warning("skipped %d invalid row(s) in %s", skipped, path)
        warnings.warn(f"skipped {skipped} invalid row(s) in {path}", stacklevel=2)
    if not records:
        raise DataValidationError(f"no valid records in {path}")
    return Dataset(tuple(records), source_id=str(path), n_skipped=skipped)


def write_csv(dataset, path):
    """Write ``dataset`` in the standard column layout, 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in dataset.records:
            writer.writerow([format(getattr(rec, name), ".17g") for name in COLUMNS])


def round_half_up(x):
    # 1e-9 absorbs representation error in products such as 0.5 * 37.
    return int(math.floor(x + 0.5 + 1e-9))


def _digest(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.asarray(a, dtype=np.int64).tobytes())
        h.update(b"|")
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class SplitPlan:
    train_indices: tuple
    test_indices: tuple
    seed: int
    train_ratio: float

    @property
    def digest(self):
        """Short hash identifying the exact train/test partition."""
        return _digest(self.train_indices, self.test_indices)


def split_train_test(ds, ratio=0.7, seed=0):
    """Random train/test partition with ``round_half_up(ratio * N)`` training rows.

    Indices are a PCG64 permutation of ``range(N)``; each side is returned
    sorted so that record order is preserved within it.
    """
    n = len(ds)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    seed = check_seed(seed)
    n_train = round_half_up(ratio * n)
    perm = make_rng(seed).permutation(n)
    return SplitPlan(
        train_indices=tuple(int(i) for i in np.sort(perm[:n_train])),
        test_indices=tuple(int(i) for i in np.sort(perm[n_train:])),
        seed=seed,
        train_ratio=float(ratio),
    )


@dataclass(frozen=True)
class FoldPlan:
    """Cross-validation fold ids, aligned position by position with
    ``train_indices``."""

    k: int
    assignments: tuple
    seed: int
    train_indices: tuple = field(default=())

    def fold_sizes(self):
        return [self.assignments.count(j) for j in range(self.k)]

    def validation_indices(self, j):
        return np.array(
            [i for i, f in zip(self.train_indices, self.assignments) if f == j], dtype=np.int64
        )

    def training_indices(self, j):
        return np.array(
            [i for i, f in zip(self.train_indices, self.assignments) if f != j], dtype=np.int64
        )


def kfold(plan, k=5, seed=0):
    """Assign each training index of ``plan`` to one of ``k`` folds.

    The training indices are shuffled and dealt round-robin, so the first
    ``n % k`` folds receive one extra member.
    """
    n = len(plan.train_indices)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of training rows ({n})")
    seed = check_seed(seed)
    order = make_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    return FoldPlan(
        k=int(k),
        assignments=tuple(int(a) for a in assignments),
        seed=seed,
        train_indices=tuple(plan.train_indices),
    )


class Scaler(TransformerMixin, BaseEstimator):
    """Per-column z-scoring with population standard deviation.

    Zero-variance columns are mapped to 0 rather than divided by zero.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[0] < 2:
            raise ValueError(f"Scaler needs at least 2 rows, got {X.shape[0]}")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, Scaler was fitted with {self.n_features_in_}"
            )
        safe = np.where(self.scale_ > 0, self.scale_, 1.0)
        out = (X - self.mean_) / safe
        out[:, self.scale_ == 0] = 0.0
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=float)
        return X * self.scale_ + self.mean_

    def to_lines(self):
        return [
            "scaler_mean " + " ".join(format(v, ".17g") for v in self.mean_),
            "scaler_scale " + " ".join(format(v, ".17g") for v in self.scale_),
        ]

    @classmethod
    def from_arrays(cls, mean, scale):
        sc = cls()
        sc.mean_ = np.asarray(mean, dtype=float)
        sc.scale_ = np.asarray(scale, dtype=float)
        sc.n_features_in_ = len(sc.mean_)
        return sc


def standardize(train_vectors):
    """Fit a ``Scaler`` on ``train_vectors`` and return it with the transformed rows."""
    scaler = Scaler().fit(train_vectors)
    return scaler, scaler.transform(train_vectors)
