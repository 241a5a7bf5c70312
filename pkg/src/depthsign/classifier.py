"""Softmax output layer trained with cross-entropy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ShapeError
from .linalg import DTYPE, as_matrix, glorot_uniform, make_rng
from .optim import TrainHyper, minimize

_TINY = np.finfo(DTYPE).tiny


@dataclass
class SoftmaxParams:
    W: np.ndarray  # classes x features
    b: np.ndarray  # classes x 1

    def __post_init__(self):
        if self.b.shape != (self.W.shape[0], 1):
            raise ShapeError(f"bias shape {self.b.shape} does not match W {self.W.shape}")

    @property
    def classes(self) -> int:
        return self.W.shape[0]

    @property
    def features(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, features, classes, rng):
        return cls(glorot_uniform(rng, classes, features), np.zeros((classes, 1)))

    def as_dict(self):
        return {"W": self.W, "b": self.b}


SoftmaxHyper = TrainHyper


def softmax(z) -> np.ndarray:
    """Column-wise softmax, shifted by each column's max logit for stability.

    Entries are floored at the smallest normal float so they stay positive
    when a logit gap exceeds the exponent range.
    """
    z = as_matrix(z)
    e = np.exp(z - z.max(axis=0, keepdims=True))
    return np.maximum(e / e.sum(axis=0, keepdims=True), _TINY)


def log_softmax(z) -> np.ndarray:
    z = as_matrix(z)
    shifted = z - z.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def predict_labels(posteriors) -> np.ndarray:
    """Per-column argmax; ties go to the lowest class index."""
    return np.argmax(as_matrix(posteriors), axis=0)


def logits(p: SoftmaxParams, x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[0] != p.features:
        raise ShapeError(f"softmax layer expects {p.features} features, got input of shape {x.shape}")
    return p.W @ x + p.b


def _check_targets(p, x, t):
    t = as_matrix(t)
    if t.shape != (p.classes, as_matrix(x).shape[1]):
        raise ShapeError(f"targets of shape {t.shape} do not match {p.classes} classes "
                         f"x {as_matrix(x).shape[1]} samples")
    return t


def xent_objective(p: SoftmaxParams, x, t, l2_weight: float) -> float:
    t = _check_targets(p, x, t)
    n = t.shape[1]
    return float(-np.sum(t * log_softmax(logits(p, x))) / n
                 + 0.5 * l2_weight * np.sum(p.W ** 2))


def xent_loss_and_gradient(p: SoftmaxParams, x, t, l2_weight: float):
    x = as_matrix(x)
    t = _check_targets(p, x, t)
    n = t.shape[1]
    z = logits(p, x)
    loss = -np.sum(t * log_softmax(z)) / n + 0.5 * l2_weight * np.sum(p.W ** 2)
    dz = (softmax(z) - t) / n
    grad = SoftmaxParams(dz @ x.T + l2_weight * p.W, dz.sum(axis=1, keepdims=True))
    return float(loss), grad


def xent_gradient(p: SoftmaxParams, x, t, l2_weight: float) -> SoftmaxParams:
    return xent_loss_and_gradient(p, x, t, l2_weight)[1]


def train_softmax(x_train, t_train, x_val, t_val, hyp: TrainHyper, rng, stage="softmax"):
    x_train, t_train = as_matrix(x_train), as_matrix(t_train)
    init = SoftmaxParams.init(x_train.shape[0], t_train.shape[0], rng)
    _check_targets(init, x_train, t_train)
    if x_val is not None and as_matrix(x_val).shape[1] == 0:
        x_val = None

    def loss_grad(params, idx):
        loss, g = xent_loss_and_gradient(SoftmaxParams(**params), x_train[:, idx],
                                         t_train[:, idx], hyp.l2_weight)
        return loss, g.as_dict()

    def objective(params):
        return xent_objective(SoftmaxParams(**params), x_train, t_train, hyp.l2_weight)

    val_obj = None
    if x_val is not None:
        x_val, t_val = as_matrix(x_val), as_matrix(t_val)
        _check_targets(init, x_val, t_val)

        def val_obj(params):
            return xent_objective(SoftmaxParams(**params), x_val, t_val, hyp.l2_weight)

    best, trace = minimize(init.as_dict(), loss_grad, x_train.shape[1], hyp, rng,
                           objective, val_obj, stage=stage)
    return SoftmaxParams(**best), trace


class SoftmaxClassifier(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression trained by :func:`train_softmax`."""

    def __init__(self, epochs_max=400, learning_rate=0.1, momentum=0.9, l2_weight=1e-4,
                 batch_size=64, random_state=0):
        self.epochs_max = epochs_max
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.l2_weight = l2_weight
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_X_y(X, y, dtype=DTYPE)
        self.classes_ = unique_labels(y)
        t = _encode_targets(y, self.classes_)
        x_val = t_val = None
        if X_val is not None:
            x_val = check_array(X_val, dtype=DTYPE).T
            t_val = _encode_targets(y_val, self.classes_)
        hyp = TrainHyper(self.epochs_max, self.learning_rate, self.momentum,
                         self.l2_weight, self.batch_size)
        self.params_, self.trace_ = train_softmax(X.T, t, x_val, t_val, hyp,
                                                  make_rng(self.random_state))
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        return logits(self.params_, check_array(X, dtype=DTYPE).T).T

    def predict_proba(self, X):
        return softmax(self.decision_function(X).T).T

    def predict(self, X):
        return self.classes_[predict_labels(self.predict_proba(X).T)]


def _encode_targets(y, classes):
    y = np.asarray(y)
    idx = np.searchsorted(classes, y)
    if np.any(idx >= len(classes)) or np.any(classes[np.minimum(idx, len(classes) - 1)] != y):
        raise ValueError("labels not seen during fit")
    t = np.zeros((len(classes), y.size), dtype=DTYPE)
    t[idx, np.arange(y.size)] = 1.0
    return t
