"""Multivariate polynomial regression: monomial expansion + ridge least squares."""

import itertools
import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _serial
from .dataset import Scaler


def polynomial_terms(n_features, degree):
    """Exponent multi-indices of total degree <= ``degree`` in graded lex order.

    The intercept (all zeros) comes first; within one total degree, tuples
    appear in descending lexicographic order, e.g. x1^2, x1*x2, x2^2.
    """
    if degree < 0 or n_features < 1:
        raise ValueError("need degree >= 0 and n_features >= 1")
    terms = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_features), d):
            exps = [0] * n_features
            for j in combo:
                exps[j] += 1
            terms.append(tuple(exps))
    return terms


def n_terms(n_features, degree):
    return math.comb(n_features + degree, degree)


def expand(x, degree):
    """Monomial values of ``x`` (1-D) or of each row of ``x`` (2-D)."""
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    single = x.ndim == 1
    X = np.atleast_2d(x)
    terms = polynomial_terms(X.shape[1], degree)
    # Build column by column: each term of degree d extends a degree d-1 term
    # by one factor, which keeps the cost linear in the number of terms.
    cols = {terms[0]: np.ones(X.shape[0])}
    for t in terms[1:]:
        j = max(i for i, e in enumerate(t) if e > 0)
        parent = list(t)
        parent[j] -= 1
        cols[t] = cols[tuple(parent)] * X[:, j]
    out = np.column_stack([cols[t] for t in terms])
    return out[0] if single else out


def solve_ridge(Phi, y, ridge):
    """Minimise ||y - Phi c||^2 + ridge * ||c[1:]||^2 by QR of the augmented system."""
    n_rows, n_cols = Phi.shape
    if ridge > 0:
        penalty = np.zeros((n_cols - 1, n_cols))
        penalty[:, 1:] = math.sqrt(ridge) * np.eye(n_cols - 1)
        A = np.vstack([Phi, penalty])
        b = np.concatenate([y, np.zeros(n_cols - 1)])
    else:
        A, b = Phi, y
    if A.shape[0] < n_cols:
        raise np.linalg.LinAlgError(
            f"underdetermined system ({n_rows} rows, {n_cols} terms) with ridge=0; "
            "increase ridge"
        )
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * n_cols * np.finfo(float).eps:
        raise np.linalg.LinAlgError(
            "rank-deficient design matrix; increase ridge or remove degenerate features"
        )
    return np.linalg.solve(R, Q.T @ b)


class PolynomialRegression(RegressorMixin, BaseEstimator):
    """Polynomial least squares on standardized features.

    Parameters
    ----------
    degree : int, default=3
        Maximum total degree of the monomials.
    ridge : float, default=1e-8
        L2 penalty on every coefficient except the intercept.

    Attributes
    ----------
    scaler_ : Scaler
    terms_ : list of tuple
        Exponent multi-indices, aligned with ``coef_``.
    coef_ : ndarray
    """

    def __init__(self, degree=3, ridge=1e-8):
        self.degree = degree
        self.ridge = ridge

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {self.ridge}")
        self.n_features_in_ = X.shape[1]
        if X.shape[0] >= 2:
            self.scaler_ = Scaler().fit(X)
        else:
            self.scaler_ = Scaler.from_arrays(X[0], np.zeros(X.shape[1]))
        Phi = expand(self.scaler_.transform(X), self.degree)
        self.terms_ = polynomial_terms(X.shape[1], self.degree)
        self.coef_ = solve_ridge(Phi, y, self.ridge)
        if not np.all(np.isfinite(self.coef_)):
            raise np.linalg.LinAlgError("non-finite coefficients")
        return self

    def design_matrix(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return expand(self.scaler_.transform(X), self.degree)

    def predict(self, X):
        return self.design_matrix(X) @ self.coef_

    def penalized_loss(self, X, y, coef=None):
        """Training objective at ``coef`` (defaults to the fitted one)."""
        coef = self.coef_ if coef is None else np.asarray(coef, dtype=float)
        r = np.asarray(y, dtype=float) - self.design_matrix(X) @ coef
        return float(r @ r + self.ridge * coef[1:] @ coef[1:])

    def to_text(self):
        check_is_fitted(self, "coef_")
        lines = [
            "model polynomial",
            _serial.line("degree", int(self.degree)),
            _serial.line("ridge", self.ridge),
            _serial.line("n_features", int(self.n_features_in_)),
            *self.scaler_.to_lines(),
        ]
        for t, c in zip(self.terms_, self.coef_):
            lines.append(_serial.line("term", *[int(e) for e in t], c))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        items = _serial.expect_header(text, "polynomial")
        fields = {}
        terms, coef = [], []
        for key, toks in items:
            if key == "term":
                terms.append(tuple(int(t) for t in toks[:-1]))
                coef.append(float(toks[-1]))
            else:
                fields[key] = toks
        model = cls(degree=int(fields["degree"][0]), ridge=float(fields["ridge"][0]))
        model.n_features_in_ = int(fields["n_features"][0])
        model.scaler_ = Scaler.from_arrays(
            _serial.floats(fields["scaler_mean"]), _serial.floats(fields["scaler_scale"])
        )
        model.terms_ = terms
        model.coef_ = np.array(coef)
        if terms != polynomial_terms(model.n_features_in_, model.degree):
            raise ValueError("terms are not in canonical order")
        return model
