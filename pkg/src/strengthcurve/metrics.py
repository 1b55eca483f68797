"""Accuracy measures for strength predictions.

Errors are always ``predicted - measured``. Confidence intervals are
half-widths of a Gaussian fitted to the errors, reported about its mean.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _serial


def _pair(pred, actual, min_len=1):
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.shape != actual.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {actual.size} targets")
    if pred.size < min_len:
        raise ValueError(f"need at least {min_len} value(s), got {pred.size}")
    return pred, actual


def mse(pred, actual):
    pred, actual = _pair(pred, actual)
    return float(np.mean((pred - actual) ** 2))


def rmse(mse_value):
    if mse_value < 0:
        raise ValueError(f"mse must be >= 0, got {mse_value}")
    return math.sqrt(mse_value)


def r_squared(pred, actual):
    pred, actual = _pair(pred, actual, min_len=2)
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R^2 is undefined when all measured values are identical")
    return 1.0 - float(np.sum((actual - pred) ** 2)) / ss_tot


def error_distribution(pred, actual):
    pred, actual = _pair(pred, actual, min_len=0)
    return pred - actual


@dataclass(frozen=True)
class GaussianFit:
    mu: float
    sigma: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.sigma == 0:
            return np.where(x == self.mu, np.inf, 0.0)
        z = (x - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))


def fit_gaussian(errors):
    """Maximum-likelihood normal fit: sample mean and population std."""
    errors = np.asarray(errors, dtype=float).ravel()
    if errors.size < 2:
        raise ValueError(f"need at least 2 errors to fit a Gaussian, got {errors.size}")
    if not np.all(np.isfinite(errors)):
        raise ValueError("errors must be finite")
    mu = float(errors.mean())
    sigma = float(np.sqrt(np.mean((errors - mu) ** 2)))
    return GaussianFit(mu, sigma)


# Coefficients of P. J. Acklam's rational approximation to the inverse normal
# CDF (relative error below 1.15e-9 before refinement).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_quantile(p):
    """Standard-normal quantile function.

    Acklam's rational approximation followed by one Halley step against
    ``math.erfc``; the result is accurate to well below 1e-12 absolute on
    (1e-300, 1 - 1e-16).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def confidence_interval(g, level):
    """Half-width ``z * sigma`` of the central ``level`` interval of ``g``."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return normal_quantile((1.0 + level) / 2.0) * g.sigma


@dataclass(frozen=True)
class EvaluationReport:
    mse: float
    rmse: float
    r2: float
    mu: float
    sigma: float
    ci90: float
    ci95: float
    n: int

    @property
    def gaussian(self):
        return GaussianFit(self.mu, self.sigma)

    def to_text(self, extra=None):
        """Key/value document; ``extra`` adds string-valued keys (split hash, model)."""
        lines = [_serial.line(k, v) for k, v in asdict(self).items()]
        for k, v in (extra or {}).items():
            lines.append(f"{k} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        raw = {k: v[0] for k, v in _serial.parse(text)}
        values = {name: float(raw[name]) for name in ("mse", "rmse", "r2", "mu", "sigma", "ci90", "ci95")}
        return cls(n=int(raw["n"]), **values)


def evaluate(pred, actual):
    pred, actual = _pair(pred, actual, min_len=2)
    m = mse(pred, actual)
    g = fit_gaussian(error_distribution(pred, actual))
    return EvaluationReport(
        mse=m,
        rmse=rmse(m),
        r2=r_squared(pred, actual),
        mu=g.mu,
        sigma=g.sigma,
        ci90=confidence_interval(g, 0.90),
        ci95=confidence_interval(g, 0.95),
        n=int(pred.size),
    )
