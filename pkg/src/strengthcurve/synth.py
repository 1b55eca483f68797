"""Synthetic mixtures with a known strength law.

The law is an Abrams-type exponential decay in w/cm with multiplicative
fly ash, fine aggregate and air corrections, plus a water-reducer term that
saturates at ``WRA_SATURATION``. The saturation makes the law non-smooth in
``wra_dosage``. All constants are arbitrary choices that put strengths in a
roughly 15-60 MPa band.
"""

from dataclasses import dataclass, field

import numpy as np

from ._random import check_seed, make_rng
from .dataset import FEATURES, FRACTIONS, Dataset, MixtureRecord

ABRAMS_A = 130.0
ABRAMS_B = 20.0
FLYASH_COEF = -0.8
FINE_AGG_COEF = -0.5
FINE_AGG_REF = 0.35
AEA_COEF = 0.02
WRA_COEF = 0.4
WRA_SATURATION = 6.0

MIN_STRENGTH = 0.1
MAX_REJECTION_ROUNDS = 1000

DEFAULT_RANGES = {
    "w_cm": (0.30, 0.70),
    "cement_frac": (0.10, 0.20),
    "flyash_frac": (0.00, 0.10),
    "fine_agg_frac": (0.25, 0.45),
    "aea_dosage": (0.0, 5.0),
    "wra_dosage": (0.0, 10.0),
}


def ground_truth(x, ranges=None):
    """Noise-free strength (MPa) for feature rows ``x`` in ``FEATURES`` order.

    Accepts one row or a 2-D array. When ``ranges`` is given, every feature
    must lie inside its (min, max) box.
    """
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    if X.shape[1] != len(FEATURES):
        raise ValueError(f"expected {len(FEATURES)} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    if ranges is not None:
        for j, name in enumerate(FEATURES):
            lo, hi = ranges[name]
            bad = (X[:, j] < lo) | (X[:, j] > hi)
            if bad.any():
                raise ValueError(f"{name}={X[bad, j][0]!r} outside configured range [{lo}, {hi}]")
    w_cm, _, flyash, fine, aea, wra = X.T
    s = (
        ABRAMS_A
        * ABRAMS_B ** (-w_cm)
        * (1.0 + FLYASH_COEF * flyash)
        * (1.0 + FINE_AGG_COEF * (fine - FINE_AGG_REF))
        * (1.0 - AEA_COEF * aea)
        + WRA_COEF * np.minimum(wra, WRA_SATURATION)
    )
    return float(s[0]) if x.ndim == 1 else s


@dataclass(frozen=True)
class SynthConfig:
    n: int
    seed: int = 0
    noise_std: float = 0.0
    ranges: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n > 0):
            raise ValueError(f"n must be a positive integer, got {self.n}")
        check_seed(self.seed)
        if not self.noise_std >= 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        ranges = dict(DEFAULT_RANGES)
        ranges.update(self.ranges)
        for name, (lo, hi) in ranges.items():
            if name not in DEFAULT_RANGES:
                raise ValueError(f"unknown feature {name!r} in ranges")
            if not lo < hi:
                raise ValueError(f"range for {name} must satisfy min < max, got ({lo}, {hi})")
        object.__setattr__(self, "ranges", ranges)


def _uniform(rng, bounds, size):
    lo, hi = bounds
    return rng.uniform(lo, hi, size=size)


def generate(cfg):
    """Draw ``cfg.n`` mixtures uniformly in ``cfg.ranges``.

    The fraction triple is redrawn for rows whose fractions sum above 1.
    Strength is the ground-truth law plus N(0, noise_std) noise, floored at
    ``MIN_STRENGTH``.
    """
    rng = make_rng(cfg.seed)
    n = cfg.n
    fracs = np.column_stack([_uniform(rng, cfg.ranges[f], n) for f in FRACTIONS])
    for _ in range(MAX_REJECTION_ROUNDS):
        bad = fracs.sum(axis=1) > 1.0
        if not bad.any():
            break
        fracs[bad] = np.column_stack([_uniform(rng, cfg.ranges[f], int(bad.sum())) for f in FRACTIONS])
    else:
        raise ValueError(
            "could not draw fraction triples summing to <= 1; the configured ranges are inconsistent"
        )
    X = np.column_stack(
        [
            _uniform(rng, cfg.ranges["w_cm"], n),
            fracs,
            _uniform(rng, cfg.ranges["aea_dosage"], n),
            _uniform(rng, cfg.ranges["wra_dosage"], n),
        ]
    )
    y = ground_truth(X)
    if cfg.noise_std > 0:
        y = y + rng.normal(0.0, cfg.noise_std, size=n)
    y = np.maximum(y, MIN_STRENGTH)
    records = tuple(MixtureRecord(*row, target) for row, target in zip(X, y))
    return Dataset(records, source_id=f"synth(n={n}, seed={cfg.seed}, noise_std={cfg.noise_std})")
