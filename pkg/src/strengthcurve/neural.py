"""Single-hidden-layer sigmoid network trained by mini-batch backpropagation.

The output neuron is linear and works on z-scored targets; inputs are
z-scored by a ``Scaler`` fitted on the training rows.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _serial
from ._random import check_seed, make_rng
from .dataset import Scaler
from .exceptions import TrainingDivergedError

MAX_EPOCHS = 100_000


# exp(700) is finite in double precision; beyond it the logistic value is
# below 1e-304 and is held there.
_Z_CLIP = 700.0


def sigmoid(z):
    """Logistic function ``1 / (1 + exp(-z))``, overflow-free on [-700, 700]."""
    z = np.clip(np.asarray(z, dtype=float), -_Z_CLIP, _Z_CLIP)
    out = 1.0 / (1.0 + np.exp(-z))
    return out if out.ndim else float(out)


def _sigmoid_pair(z):
    """``(sigmoid(z), sigmoid(-z))``; the second keeps full relative precision
    where ``1 - sigmoid(z)`` would cancel."""
    ez = np.exp(-np.clip(z, -_Z_CLIP, _Z_CLIP))
    h = 1.0 / (1.0 + ez)
    return h, ez * h


@dataclass
class NetworkParams:
    w_ih: np.ndarray  # (n_hidden, n_inputs)
    b_h: np.ndarray  # (n_hidden,)
    w_ho: np.ndarray  # (n_hidden,)
    b_o: float

    def flat(self):
        return np.concatenate([self.w_ih.ravel(), self.b_h, self.w_ho, [self.b_o]])

    @classmethod
    def from_flat(cls, v, n_hidden, n_inputs):
        v = np.asarray(v, dtype=float)
        a = n_hidden * n_inputs
        return cls(
            v[:a].reshape(n_hidden, n_inputs).copy(),
            v[a : a + n_hidden].copy(),
            v[a + n_hidden : a + 2 * n_hidden].copy(),
            float(v[-1]),
        )

    def copy(self):
        return NetworkParams(self.w_ih.copy(), self.b_h.copy(), self.w_ho.copy(), float(self.b_o))


def forward(params, Xs):
    """Standardized-space output for rows ``Xs``; also returns hidden activations."""
    H = sigmoid(Xs @ params.w_ih.T + params.b_h)
    return H @ params.w_ho + params.b_o, H


def backprop(params, Xs, ys):
    """Gradient of the mean of ``0.5 * (output - ys)**2`` over the rows of ``Xs``."""
    H, H_comp = _sigmoid_pair(Xs @ params.w_ih.T + params.b_h)
    r = H @ params.w_ho + params.b_o - ys
    n = len(ys)
    # sigmoid' = sigmoid(z) * sigmoid(-z); avoids cancellation in 1 - H.
    delta = np.outer(r, params.w_ho) * H * H_comp
    return NetworkParams(
        w_ih=delta.T @ Xs / n,
        b_h=delta.sum(axis=0) / n,
        w_ho=H.T @ r / n,
        b_o=float(r.sum() / n),
    )


class NeuralNetworkRegressor(RegressorMixin, BaseEstimator):
    """Feedforward network with one hidden sigmoid layer and a linear output.

    Parameters
    ----------
    n_hidden : int, default=7
    learning_rate : float, default=0.05
    epochs : int, default=500
        Passes over the training rows; at most ``MAX_EPOCHS``.
    batch_size : int or None, default=32
        None trains full-batch.
    init_scale : float or None, default=None
        Weights start uniform in [-init_scale, init_scale]; None means
        ``1 / sqrt(n_inputs)``. Biases start at zero.
    random_state : int, default=0
        Seeds initialisation and the per-epoch shuffle.
    """

    def __init__(
        self,
        n_hidden=7,
        learning_rate=0.05,
        epochs=500,
        batch_size=32,
        init_scale=None,
        random_state=0,
    ):
        self.n_hidden = n_hidden
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.init_scale = init_scale
        self.random_state = random_state

    def _check_config(self):
        if not (isinstance(self.n_hidden, (int, np.integer)) and self.n_hidden > 0):
            raise ValueError(f"n_hidden must be a positive integer, got {self.n_hidden}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (isinstance(self.epochs, (int, np.integer)) and 0 < self.epochs <= MAX_EPOCHS):
            raise ValueError(f"epochs must be an integer in [1, {MAX_EPOCHS}], got {self.epochs}")
        if self.batch_size is not None and not (
            isinstance(self.batch_size, (int, np.integer)) and self.batch_size > 0
        ):
            raise ValueError(f"batch_size must be a positive integer or None, got {self.batch_size}")
        if self.init_scale is not None and not self.init_scale > 0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale}")
        check_seed(self.random_state)

    def fit(self, X, y):
        self._check_config()
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n, d = X.shape
        self.n_features_in_ = d
        if n >= 2:
            self.scaler_ = Scaler().fit(X)
        else:
            self.scaler_ = Scaler.from_arrays(X[0], np.zeros(d))
        t_std = float(y.std())
        self.target_scale_ = (float(y.mean()), t_std if t_std > 0 else 1.0)
        Xs = self.scaler_.transform(X)
        ys = (y - self.target_scale_[0]) / self.target_scale_[1]

        rng = make_rng(self.random_state)
        scale = self.init_scale if self.init_scale is not None else 1.0 / np.sqrt(d)
        params = NetworkParams(
            w_ih=rng.uniform(-scale, scale, size=(self.n_hidden, d)),
            b_h=np.zeros(self.n_hidden),
            w_ho=rng.uniform(-scale, scale, size=self.n_hidden),
            b_o=0.0,
        )
        batch = n if self.batch_size is None else min(self.batch_size, n)
        lr = self.learning_rate
        # ``backprop`` with the parameter updates fused in; the loop body
        # dominates training time. Overflow on the way to divergence is
        # reported through the loss check, not as warnings.
        W, bh, wo, bo = params.w_ih, params.b_h, params.w_ho, params.b_o
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(1, self.epochs + 1):
                order = rng.permutation(n)
                for start in range(0, n, batch):
                    idx = order[start : start + batch]
                    xb = Xs[idx]
                    H, H_comp = _sigmoid_pair(xb @ W.T + bh)
                    r = (H @ wo + bo - ys[idx]) / len(idx)
                    delta = np.outer(r, wo) * H * H_comp
                    W -= lr * (delta.T @ xb)
                    bh -= lr * delta.sum(axis=0)
                    wo -= lr * (H.T @ r)
                    bo -= lr * r.sum()
                params.b_o = float(bo)
                out, _ = forward(params, Xs)
                loss = float(np.mean((out - ys) ** 2))
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch, lr)
        self.params_ = params
        self.train_mse_ = loss * self.target_scale_[1] ** 2
        return self

    @classmethod
    def from_params(cls, params, scaler=None, target_scale=(0.0, 1.0)):
        """Wrap explicit parameters; ``scaler=None`` leaves inputs unscaled."""
        n_hidden, d = params.w_ih.shape
        model = cls(n_hidden=n_hidden)
        model.params_ = params.copy()
        model.n_features_in_ = d
        model.scaler_ = scaler if scaler is not None else Scaler.from_arrays(np.zeros(d), np.ones(d))
        model.target_scale_ = (float(target_scale[0]), float(target_scale[1]))
        return model

    def _standardize(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return self.scaler_.transform(X)

    def predict(self, X):
        out, _ = forward(self.params_, self._standardize(X))
        mean, std = self.target_scale_
        return out * std + mean

    def gradient(self, x, y):
        """Backpropagated gradient of 0.5 * residual**2 at one raw sample, in
        standardized-target units."""
        Xs = self._standardize(np.atleast_2d(x))
        if Xs.shape[0] != 1:
            raise ValueError("gradient expects a single sample")
        ys = (np.array([float(y)]) - self.target_scale_[0]) / self.target_scale_[1]
        return backprop(self.params_, Xs, ys)

    def loss(self, x, y, params=None):
        """0.5 * squared standardized residual at one sample."""
        p = self.params_ if params is None else params
        Xs = self._standardize(np.atleast_2d(x))
        ys = (float(y) - self.target_scale_[0]) / self.target_scale_[1]
        out, _ = forward(p, Xs)
        return 0.5 * float((out[0] - ys) ** 2)

    def to_text(self):
        check_is_fitted(self, "params_")
        p = self.params_
        lines = [
            "model neural_network",
            _serial.line("n_inputs", int(self.n_features_in_)),
            _serial.line("n_hidden", int(p.w_ih.shape[0])),
            *self.scaler_.to_lines(),
            _serial.line("target_scale", *self.target_scale_),
            _serial.line("w_ih", *p.w_ih.ravel()),
            _serial.line("b_h", *p.b_h),
            _serial.line("w_ho", *p.w_ho),
            _serial.line("b_o", p.b_o),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        f = dict(_serial.expect_header(text, "neural_network"))
        d, h = int(f["n_inputs"][0]), int(f["n_hidden"][0])
        params = NetworkParams(
            w_ih=np.array(_serial.floats(f["w_ih"])).reshape(h, d),
            b_h=np.array(_serial.floats(f["b_h"])),
            w_ho=np.array(_serial.floats(f["w_ho"])),
            b_o=float(f["b_o"][0]),
        )
        scaler = Scaler.from_arrays(_serial.floats(f["scaler_mean"]), _serial.floats(f["scaler_scale"]))
        return cls.from_params(params, scaler, _serial.floats(f["target_scale"]))
