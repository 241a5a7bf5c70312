"""Sparse autoencoder with sigmoid encoder and decoder.

Objective for a batch ``x`` of ``N`` columns::

    J = 1/(2N) * sum ||r - x||^2
        + l2_weight/2 * (||W_enc||^2 + ||W_dec||^2)
        + sparsity_weight * sum_j KL(sparsity_target || mean_activation_j)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ParameterError, ShapeError
from .linalg import DTYPE, as_matrix, glorot_uniform, make_rng, sigmoid
from .optim import TrainHyper, minimize

RHO_CLAMP = 1e-9


@dataclass
class AutoencoderParams:
    W_enc: np.ndarray  # hidden x input
    b_enc: np.ndarray  # hidden x 1
    W_dec: np.ndarray  # input x hidden
    b_dec: np.ndarray  # input x 1

    def __post_init__(self):
        h, d = self.W_enc.shape
        expected = {"b_enc": (h, 1), "W_dec": (d, h), "b_dec": (d, 1)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape} "
                    f"for input {d} / hidden {h}"
                )

    @property
    def input_dim(self) -> int:
        return self.W_enc.shape[1]

    @property
    def hidden(self) -> int:
        return self.W_enc.shape[0]

    @classmethod
    def zeros(cls, input_dim, hidden):
        return cls(np.zeros((hidden, input_dim)), np.zeros((hidden, 1)),
                   np.zeros((input_dim, hidden)), np.zeros((input_dim, 1)))

    @classmethod
    def init(cls, input_dim, hidden, rng):
        """Glorot-uniform weights, zero biases."""
        w_enc = glorot_uniform(rng, hidden, input_dim)
        w_dec = glorot_uniform(rng, input_dim, hidden)
        return cls(w_enc, np.zeros((hidden, 1)), w_dec, np.zeros((input_dim, 1)))

    def as_dict(self):
        return {"W_enc": self.W_enc, "b_enc": self.b_enc,
                "W_dec": self.W_dec, "b_dec": self.b_dec}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.asarray(d[k], dtype=DTYPE) for k in ("W_enc", "b_enc", "W_dec", "b_dec")))


@dataclass
class AeHyper(TrainHyper):
    hidden: int = 100
    sparsity_target: float = 0.05
    sparsity_weight: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.epochs_max < 1:
            raise ParameterError(f"epochs_max must be >= 1, got {self.epochs_max}")
        if self.hidden < 1:
            raise ParameterError(f"hidden must be >= 1, got {self.hidden}")
        if not 0 < self.sparsity_target < 1:
            raise ParameterError(f"sparsity_target must lie in (0, 1), got {self.sparsity_target}")
        if self.sparsity_weight < 0:
            raise ParameterError(f"sparsity_weight must be >= 0, got {self.sparsity_weight}")


def _check_rows(x, rows, what):
    x = as_matrix(x)
    if x.shape[0] != rows:
        raise ShapeError(f"{what} expects {rows} rows, got input of shape {x.shape}")
    return x


def encode_linear(W, b, x):
    """Sigmoid layer ``sigmoid(W x + b)``; the encoder half of a stacked layer."""
    x = _check_rows(x, W.shape[1], "encoder")
    return sigmoid(W @ x + b)


def encode(p: AutoencoderParams, x) -> np.ndarray:
    return encode_linear(p.W_enc, p.b_enc, x)


def decode(p: AutoencoderParams, h) -> np.ndarray:
    h = _check_rows(h, p.hidden, "decoder")
    return sigmoid(p.W_dec @ h + p.b_dec)


def kl_bernoulli(rho, rho_hat):
    rho_hat = np.clip(rho_hat, RHO_CLAMP, 1.0 - RHO_CLAMP)
    return rho * np.log(rho / rho_hat) + (1.0 - rho) * np.log((1.0 - rho) / (1.0 - rho_hat))


def _forward(p, x, hyp):
    x = _check_rows(x, p.input_dim, "autoencoder")
    if x.shape[1] == 0:
        raise ShapeError("objective needs at least one sample")
    h = encode(p, x)
    r = decode(p, h)
    return x, h, r


def _objective_terms(p, x, h, r, hyp):
    n = x.shape[1]
    recon = 0.5 * np.sum((r - x) ** 2) / n
    l2 = 0.5 * hyp.l2_weight * (np.sum(p.W_enc ** 2) + np.sum(p.W_dec ** 2))
    sparse = 0.0
    if hyp.sparsity_weight:
        sparse = hyp.sparsity_weight * np.sum(kl_bernoulli(hyp.sparsity_target, h.mean(axis=1)))
    return recon + l2 + sparse


def ae_objective(p: AutoencoderParams, x, hyp: AeHyper) -> float:
    x, h, r = _forward(p, x, hyp)
    return float(_objective_terms(p, x, h, r, hyp))


def reconstruction_error(p: AutoencoderParams, x) -> float:
    """Mean over samples of ``0.5 * ||r - x||^2`` (the objective without regularizers)."""
    x = _check_rows(x, p.input_dim, "autoencoder")
    r = decode(p, encode(p, x))
    return float(0.5 * np.sum((r - x) ** 2) / x.shape[1])


def ae_loss_and_gradient(p: AutoencoderParams, x, hyp: AeHyper):
    """Objective value and its analytic gradient as an ``AutoencoderParams``."""
    x, h, r = _forward(p, x, hyp)
    n = x.shape[1]
    loss = _objective_terms(p, x, h, r, hyp)

    dz_dec = (r - x) / n * r * (1.0 - r)
    g_wdec = dz_dec @ h.T + hyp.l2_weight * p.W_dec
    g_bdec = dz_dec.sum(axis=1, keepdims=True)

    dh = p.W_dec.T @ dz_dec
    if hyp.sparsity_weight:
        rho, rho_hat = hyp.sparsity_target, h.mean(axis=1, keepdims=True)
        inside = (rho_hat > RHO_CLAMP) & (rho_hat < 1.0 - RHO_CLAMP)
        d_kl = np.where(inside, -rho / rho_hat + (1.0 - rho) / (1.0 - rho_hat), 0.0)
        dh = dh + hyp.sparsity_weight * d_kl / n
    dz_enc = dh * h * (1.0 - h)
    g_wenc = dz_enc @ x.T + hyp.l2_weight * p.W_enc
    g_benc = dz_enc.sum(axis=1, keepdims=True)
    return float(loss), AutoencoderParams(g_wenc, g_benc, g_wdec, g_bdec)


def ae_gradient(p: AutoencoderParams, x, hyp: AeHyper) -> AutoencoderParams:
    return ae_loss_and_gradient(p, x, hyp)[1]


def train_ae(x_train, x_val, hyp: AeHyper, rng, stage="autoencoder"):
    """Train from a Glorot initialization; returns ``(best params, TrainTrace)``."""
    x_train = as_matrix(x_train)
    d = x_train.shape[0]
    if x_val is not None:
        x_val = _check_rows(x_val, d, "validation batch")
        if x_val.shape[1] == 0:
            x_val = None
    init = AutoencoderParams.init(d, hyp.hidden, rng)

    def loss_grad(params, idx):
        loss, g = ae_loss_and_gradient(AutoencoderParams(**params), x_train[:, idx], hyp)
        return loss, g.as_dict()

    def objective(params):
        return ae_objective(AutoencoderParams(**params), x_train, hyp)

    val_obj = None
    if x_val is not None:
        def val_obj(params):
            return ae_objective(AutoencoderParams(**params), x_val, hyp)

    best, trace = minimize(init.as_dict(), loss_grad, x_train.shape[1], hyp, rng,
                           objective, val_obj, stage=stage)
    return AutoencoderParams(**best), trace


class SparseAutoencoder(TransformerMixin, BaseEstimator):
    """Scikit-learn transformer wrapping :func:`train_ae`.

    ``X`` is ``(n_samples, n_features)`` as usual for estimators; ``transform``
    returns the hidden code, ``inverse_transform`` decodes a code back.
    """

    def __init__(self, hidden=100, epochs_max=400, learning_rate=0.1, momentum=0.9,
                 l2_weight=1e-4, sparsity_target=0.05, sparsity_weight=1.0,
                 batch_size=64, random_state=0):
        self.hidden = hidden
        self.epochs_max = epochs_max
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.l2_weight = l2_weight
        self.sparsity_target = sparsity_target
        self.sparsity_weight = sparsity_weight
        self.batch_size = batch_size
        self.random_state = random_state

    def _hyper(self):
        return AeHyper(epochs_max=self.epochs_max, learning_rate=self.learning_rate,
                       momentum=self.momentum, l2_weight=self.l2_weight,
                       batch_size=self.batch_size, hidden=self.hidden,
                       sparsity_target=self.sparsity_target,
                       sparsity_weight=self.sparsity_weight)

    def fit(self, X, y=None, X_val=None):
        X = check_array(X, dtype=DTYPE)
        x_val = None
        if X_val is not None:
            x_val = check_array(X_val, dtype=DTYPE).T
        self.params_, self.trace_ = train_ae(X.T, x_val, self._hyper(),
                                             make_rng(self.random_state))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=DTYPE)
        return encode(self.params_, X.T).T

    def inverse_transform(self, H):
        check_is_fitted(self, "params_")
        H = check_array(H, dtype=DTYPE)
        return decode(self.params_, H.T).T

    def score(self, X, y=None):
        """Negative mean reconstruction error (higher is better)."""
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=DTYPE)
        return -reconstruction_error(self.params_, X.T)
