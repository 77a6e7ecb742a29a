"""Two-layer logistic networks with a truncated output.

A model with dimensions ``(M, m_star, m)`` computes

    h(x) = mu_0 + sum_i mu_i * s( lam_i0 + sum_j lam_ij * s(theta_ij0 + theta_ij . x) )

with ``s`` the logistic function, ``i = 1..M`` and ``j = 1..4 m_star``, and
reports ``T(h) = sign(h) * min(|h|, beta)``.

Training fits many independent models (one per response column) on the same
inputs in a single vectorized loop.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._normal import RandomStream
from ._validation import check_data_matrix
from .exceptions import ConfigurationError, DataError, TrainingDivergedError


def default_truncation(n: int, p: int, q: int, m: int) -> float:
    """``log(n) * sqrt(log(d n))`` with ``d = max(p, q, m)``."""
    d = max(p, q, m, 1)
    return math.log(n) * math.sqrt(math.log(d * n))


def truncate(h, beta):
    return np.clip(h, -beta, beta)


@dataclass
class FnnModel:
    mu: np.ndarray      # (M + 1,): mu_0 .. mu_M
    lam: np.ndarray     # (M, H + 1): lam_i0 .. lam_iH, H = 4 m_star
    theta: np.ndarray   # (M, H, m + 1): theta_ij0 .. theta_ijm
    beta_trunc: float = math.inf

    @property
    def dims(self):
        M, H, m1 = self.theta.shape
        return (M, H // 4, m1 - 1)

    def raw_output(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a1 = self.theta[None, :, :, 0] + np.einsum("bv,ihv->bih", x, self.theta[:, :, 1:])
        s2 = logistic(self.lam[None, :, 0] + np.einsum("bih,ih->bi", logistic(a1), self.lam[:, 1:]))
        return self.mu[0] + s2 @ self.mu[1:]

    def forward(self, x) -> np.ndarray:
        """Truncated network output for each row of ``x`` (shape ``(n,)``)."""
        return truncate(self.raw_output(x), self.beta_trunc)

    def to_dict(self) -> dict:
        M, m_star, m = self.dims
        return {"dims": [M, m_star, m],
                "beta_trunc": None if math.isinf(self.beta_trunc) else self.beta_trunc,
                "mu": self.mu.tolist(), "lam": self.lam.tolist(), "theta": self.theta.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "FnnModel":
        beta = math.inf if d["beta_trunc"] is None else float(d["beta_trunc"])
        model = cls(np.asarray(d["mu"], dtype=float), np.asarray(d["lam"], dtype=float),
                    np.asarray(d["theta"], dtype=float), beta)
        if list(model.dims) != list(d["dims"]):
            raise DataError("serialized dims do not match the weight arrays")
        return model

    @classmethod
    def from_json(cls, text: str) -> "FnnModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FnnConfig:
    """Architecture and optimizer settings.

    ``beta_trunc=None`` means "use :func:`default_truncation`" when the
    caller knows the problem sizes, and no truncation otherwise.  The default
    ``init_scale=None`` draws each weight uniformly on ``+-1/sqrt(fan_in)``.
    """

    hidden_units: int = 32
    m_star: int = 1
    beta_trunc: float | None = None
    epochs: int = 500
    learning_rate: float = 1e-3
    batch_size: int = 32
    init_scale: float | None = None
    seed: int = 0
    dtype: str = "float32"

    def validate(self):
        if self.hidden_units < 1 or self.m_star < 1:
            raise ConfigurationError("hidden_units and m_star must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be positive")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError("dtype must be 'float32' or 'float64'")


class _Params:
    """Stacked parameters of ``r`` models: mu (r, M+1), lam (r, M, H+1),
    theta (r, M, H, m+1)."""

    names = ("mu", "lam", "theta")

    def __init__(self, mu, lam, theta):
        self.mu, self.lam, self.theta = mu, lam, theta

    def arrays(self):
        return [self.mu, self.lam, self.theta]

    def model(self, j, beta):
        return FnnModel(self.mu[j].copy(), self.lam[j].copy(), self.theta[j].copy(), beta)

    @classmethod
    def stack(cls, models):
        return cls(np.stack([mo.mu for mo in models]), np.stack([mo.lam for mo in models]),
                   np.stack([mo.theta for mo in models]))


def init_model(M, m_star, m, stream: RandomStream, init_scale=None) -> FnnModel:
    H = 4 * m_star
    gen = stream.generator()

    def uni(shape, fan_in):
        s = init_scale if init_scale is not None else 1.0 / math.sqrt(fan_in)
        return s * (2.0 * gen.random(shape) - 1.0)

    theta = uni((M, H, m + 1), max(m, 1))
    lam = uni((M, H + 1), H)
    mu = uni(M + 1, M)
    return FnnModel(mu, lam, theta)


def logistic(x):
    """``1 / (1 + exp(-x))`` computed as ``(1 + tanh(x / 2)) / 2``."""
    out = np.multiply(x, 0.5)
    np.tanh(out, out=out)
    out *= 0.5
    out += 0.5
    return out


def _with_ones(x):
    return np.hstack([np.ones((x.shape[0], 1), dtype=x.dtype), x])


def _forward_batch(P, x1):
    # x1 carries a leading column of ones for the input biases
    r, M, H, m1 = P.theta.shape
    b = x1.shape[0]
    s1 = logistic((x1 @ P.theta.reshape(r * M * H, m1).T).reshape(b, r, M, H))
    a2 = np.einsum("brih,rih->bri", s1, P.lam[:, :, 1:])
    a2 += P.lam[None, :, :, 0]
    s2 = logistic(a2)
    h = np.einsum("bri,ri->br", s2, P.mu[:, 1:])
    h += P.mu[None, :, 0]
    return s1, s2, h


def _loss_grad(P, x1, t, beta):
    """Per-model mean squared loss of the truncated output and its gradient.

    ``x1`` has a leading column of ones.  Clamped outputs carry zero gradient.
    """
    b = x1.shape[0]
    s1, s2, h = _forward_batch(P, x1)
    err = t - truncate(h, beta)
    loss = np.einsum("br,br->r", err, err) / b
    dh = err * (-2.0 / b)
    if np.any(np.isfinite(beta)):
        dh *= np.abs(h) < beta
    g_mu = np.empty_like(P.mu)
    g_mu[:, 0] = dh.sum(axis=0)
    g_mu[:, 1:] = np.einsum("br,bri->ri", dh, s2)
    da2 = dh[:, :, None] * P.mu[None, :, 1:]
    da2 *= s2 * (1.0 - s2)
    g_lam = np.empty_like(P.lam)
    g_lam[:, :, 0] = da2.sum(axis=0)
    g_lam[:, :, 1:] = np.einsum("bri,brih->rih", da2, s1)
    # s1 is not needed afterwards; reuse its buffer for the first-layer delta
    back = da2[..., None] * P.lam[None, :, :, 1:]
    s1 -= s1 * s1
    s1 *= back
    g_theta = (s1.reshape(b, -1).T @ x1).reshape(P.theta.shape)
    return loss, [g_mu, g_lam, g_theta]


def loss_and_gradient(model: FnnModel, inputs, targets, truncated=False):
    """Mean squared loss of one model and its analytic gradient.

    Returns ``(loss, {"mu": ..., "lam": ..., "theta": ...})``.  By default
    the untruncated output is used.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    t = np.asarray(targets, dtype=float).reshape(-1, 1)
    beta = model.beta_trunc if truncated else math.inf
    loss, grads = _loss_grad(_Params.stack([model]), _with_ones(x), t, beta)
    return float(loss[0]), {k: g[0] for k, g in zip(_Params.names, grads)}


@dataclass
class TrainResult:
    models: list
    loss_history: np.ndarray  # (epochs, r): mean minibatch loss per epoch


def train_many(inputs, targets, config: FnnConfig = FnnConfig(), stream_offset: int = 0,
               beta_trunc: float | None = None) -> TrainResult:
    """Train one network per column of ``targets`` on shared ``inputs``.

    Column ``j`` is initialized from ``RandomStream(seed, stream_offset + j)``;
    all columns see the same minibatch order, drawn from a separate stream.
    Adam with the usual moment constants is used.

    Raises
    ------
    TrainingDivergedError
        If a loss becomes non-finite.
    """
    config.validate()
    x = check_data_matrix(inputs, "inputs", min_samples=2, allow_empty_columns=True)
    t = check_data_matrix(targets, "targets", min_samples=2)
    n, m = x.shape
    if t.shape[0] != n:
        raise DataError("inputs and targets have different numbers of rows")
    r = t.shape[1]
    beta = beta_trunc if beta_trunc is not None else config.beta_trunc
    beta = math.inf if beta is None else float(beta)
    models = [init_model(config.hidden_units, config.m_star, m,
                         RandomStream(config.seed, stream_offset + j).child(0), config.init_scale)
              for j in range(r)]
    dt = np.dtype(config.dtype)
    P = _Params(*[a.astype(dt) for a in _Params.stack(models).arrays()])
    x1 = _with_ones(x).astype(dt)
    t = t.astype(dt)
    beta_dt = dt.type(beta)
    params = P.arrays()
    m1 = [np.zeros_like(a) for a in params]
    m2 = [np.zeros_like(a) for a in params]
    b1, b2, eps, lr = 0.9, 0.999, 1e-8, config.learning_rate
    shuffle = RandomStream(config.seed, 0).child(1).generator()
    bs = min(config.batch_size, n)
    history = np.empty((config.epochs, r))
    step = 0
    for epoch in range(config.epochs):
        order = shuffle.permutation(n)
        total = np.zeros(r)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = _loss_grad(P, x1[idx], t[idx], beta_dt)
            if not np.all(np.isfinite(loss)):
                raise TrainingDivergedError(
                    f"non-finite training loss at epoch {epoch + 1}; try a smaller learning rate")
            total += loss * idx.size
            step += 1
            c1 = 1.0 - b1 ** step
            c2 = 1.0 - b2 ** step
            for a, g, v1, v2 in zip(params, grads, m1, m2):
                v1 *= b1
                v1 += (1.0 - b1) * g
                v2 *= b2
                v2 += (1.0 - b2) * g * g
                a -= lr * (v1 / c1) / (np.sqrt(v2 / c2) + eps)
        history[epoch] = total / n
    P = _Params(*[a.astype(np.float64) for a in params])
    return TrainResult([P.model(j, beta) for j in range(r)], history)


def train(inputs, targets, config: FnnConfig = FnnConfig()) -> FnnModel:
    """Train a single network on a response vector."""
    y = np.asarray(targets, dtype=float)
    if y.ndim != 1:
        raise DataError("train takes a single response vector; use train_many")
    return train_many(inputs, y.reshape(-1, 1), config).models[0]


def predict_many(models, inputs) -> np.ndarray:
    """Truncated outputs of several models as columns of an ``(n, r)`` array."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    if not models:
        return np.empty((x.shape[0], 0))
    P = _Params.stack(models)
    _, _, h = _forward_batch(P, _with_ones(x))
    return truncate(h, np.array([mo.beta_trunc for mo in models]))


class FNNRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper; ``y`` may hold several response columns."""

    def __init__(self, hidden_units=32, m_star=1, beta_trunc=None, epochs=500,
                 learning_rate=1e-3, batch_size=32, init_scale=None, random_state=0):
        self.hidden_units = hidden_units
        self.m_star = m_star
        self.beta_trunc = beta_trunc
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.init_scale = init_scale
        self.random_state = random_state

    def fit(self, X, y):
        y = np.asarray(y, dtype=float)
        self.single_output_ = y.ndim == 1
        cfg = FnnConfig(self.hidden_units, self.m_star, self.beta_trunc, self.epochs,
                        self.learning_rate, self.batch_size, self.init_scale, self.random_state)
        res = train_many(X, y.reshape(len(y), -1), cfg)
        self.models_ = res.models
        self.loss_history_ = res.loss_history
        self.n_features_in_ = self.models_[0].dims[2]
        return self

    def predict(self, X):
        check_is_fitted(self, "models_")
        out = predict_many(self.models_, check_data_matrix(X, min_samples=1))
        return out[:, 0] if self.single_output_ else out
