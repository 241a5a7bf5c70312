"""Stacked sparse-autoencoder classifier: encoder halves feeding a softmax head."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .autoencoder import AeHyper, AutoencoderParams, encode, encode_linear, train_ae
from .classifier import (
    SoftmaxParams,
    _encode_targets,
    log_softmax,
    logits,
    predict_labels,
    softmax,
    train_softmax,
)
from .data import DEFAULT_FRACTIONS, one_hot
from .exceptions import DivergenceError, ParameterError, ShapeError
from .linalg import DTYPE, as_matrix, glorot_uniform, make_rng, sigmoid
from .optim import TrainHyper, minimize


@dataclass
class EncoderLayer:
    W: np.ndarray  # out x in
    b: np.ndarray  # out x 1

    @classmethod
    def from_autoencoder(cls, p: AutoencoderParams):
        return cls(p.W_enc.copy(), p.b_enc.copy())


@dataclass
class StackedNetwork:
    encoders: list
    head: SoftmaxParams

    def __post_init__(self):
        check_dim_chain(self)

    @property
    def layer_dims(self) -> list:
        dims = [self.encoders[0].W.shape[1]] if self.encoders else [self.head.features]
        dims += [e.W.shape[0] for e in self.encoders]
        return dims + [self.head.classes]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def as_dict(self):
        d = {}
        for i, e in enumerate(self.encoders):
            d[f"W{i}"], d[f"b{i}"] = e.W, e.b
        d["W_head"], d["b_head"] = self.head.W, self.head.b
        return d

    @classmethod
    def from_dict(cls, d, n_encoders):
        encoders = [EncoderLayer(d[f"W{i}"], d[f"b{i}"]) for i in range(n_encoders)]
        return cls(encoders, SoftmaxParams(d["W_head"], d["b_head"]))

    def copy(self):
        return StackedNetwork.from_dict({k: v.copy() for k, v in self.as_dict().items()},
                                        len(self.encoders))


def check_dim_chain(net: StackedNetwork) -> None:
    prev = None
    for i, e in enumerate(net.encoders):
        if e.b.shape != (e.W.shape[0], 1):
            raise ShapeError(f"encoder {i + 1}: bias {e.b.shape} does not match W {e.W.shape}")
        if prev is not None and e.W.shape[1] != prev:
            raise ShapeError(f"encoder {i + 1} expects {e.W.shape[1]} inputs, "
                             f"previous layer outputs {prev}")
        prev = e.W.shape[0]
    if prev is not None and net.head.features != prev:
        raise ShapeError(f"softmax head expects {net.head.features} features, "
                         f"last encoder outputs {prev}")


@dataclass
class PipelineConfig:
    """Hyperparameters for every stage of greedy training."""

    autoencoders: list = field(default_factory=lambda: [
        AeHyper(hidden=100, epochs_max=400), AeHyper(hidden=50, epochs_max=100)])
    softmax: TrainHyper = field(default_factory=lambda: TrainHyper(epochs_max=400))
    finetune: TrainHyper = field(default_factory=lambda: TrainHyper(epochs_max=0))
    fractions: tuple = DEFAULT_FRACTIONS

    @classmethod
    def full_scale(cls):
        """65536 -> 100 -> 50 -> 5 with epoch caps 400 / 100 / 400."""
        return cls()

    @classmethod
    def desk(cls):
        """Small configuration for 16x16 synthetic images: 256 -> 25 -> 10 -> 5."""
        return cls(autoencoders=[AeHyper(hidden=25, epochs_max=400),
                                 AeHyper(hidden=10, epochs_max=100)])


def init_network(input_dim, class_count, cfg: PipelineConfig, rng) -> StackedNetwork:
    """An untrained network with the configured layer sizes (Glorot weights)."""
    encoders, d = [], input_dim
    for hyp in cfg.autoencoders:
        encoders.append(EncoderLayer(glorot_uniform(rng, hyp.hidden, d), np.zeros((hyp.hidden, 1))))
        d = hyp.hidden
    return StackedNetwork(encoders, SoftmaxParams.init(d, class_count, rng))


def _stage_name(i):
    return f"ae{i + 1}"


def greedy_fit(x_train, t_train, x_val, t_val, cfg: PipelineConfig, rng):
    """Greedy layer-wise training on column batches.

    Each autoencoder trains on the codes of the one below; the softmax head
    trains on the top code. Returns ``(network, traces)`` with traces keyed by
    stage name (``ae1``, ``ae2``, ..., ``softmax``).
    """
    x_train, t_train = as_matrix(x_train), as_matrix(t_train)
    has_val = x_val is not None and as_matrix(x_val).shape[1] > 0
    h_train = x_train
    h_val = as_matrix(x_val) if has_val else None
    encoders, traces = [], {}
    for i, hyp in enumerate(cfg.autoencoders):
        stage = _stage_name(i)
        try:
            params, traces[stage] = train_ae(h_train, h_val, hyp, rng, stage=stage)
        except DivergenceError as exc:
            raise exc.with_stage(stage) from exc
        encoders.append(EncoderLayer.from_autoencoder(params))
        h_train = encode(params, h_train)
        if has_val:
            h_val = encode(params, h_val)
    try:
        head, traces["softmax"] = train_softmax(h_train, t_train, h_val,
                                                t_val if has_val else None,
                                                cfg.softmax, rng)
    except DivergenceError as exc:
        raise exc.with_stage("softmax") from exc
    net = StackedNetwork(encoders, head)
    if cfg.finetune.epochs_max > 0:
        net, traces["finetune"] = fine_tune_fit(net, x_train, t_train, x_val if has_val else None,
                                                t_val if has_val else None, cfg.finetune, rng)
    return net, traces


def greedy_train(ds, split, cfg: PipelineConfig, rng):
    """Greedy training on the train partition of ``ds``, selecting on validation."""
    if len(split.train) == 0:
        raise ParameterError("training partition is empty")
    labels = ds.labels
    x_train, t_train = ds.columns(split.train), one_hot(labels[split.train], ds.class_count)
    x_val, t_val = ds.columns(split.validation), one_hot(labels[split.validation], ds.class_count)
    return greedy_fit(x_train, t_train, x_val, t_val, cfg, rng)


def features(net: StackedNetwork, x) -> np.ndarray:
    """Top-level code after every encoder."""
    h = as_matrix(x)
    for i, e in enumerate(net.encoders):
        try:
            h = encode_linear(e.W, e.b, h)
        except ShapeError as exc:
            raise ShapeError(f"encoder {i + 1}: {exc}") from None
    return h


def predict(net: StackedNetwork, x):
    """Forward pass. Returns ``(posteriors, labels)`` with one column per sample."""
    h = features(net, x)
    try:
        post = softmax(logits(net.head, h))
    except ShapeError as exc:
        raise ShapeError(f"softmax head: {exc}") from None
    return post, predict_labels(post)


def stack_loss_and_gradient(net: StackedNetwork, x, t, l2_weight: float):
    """Cross-entropy through the whole stack plus L2 on every weight matrix.

    Returns ``(loss, gradient dict)`` keyed like :meth:`StackedNetwork.as_dict`.
    """
    x, t = as_matrix(x), as_matrix(t)
    n = x.shape[1]
    acts = [x]
    for e in net.encoders:
        acts.append(sigmoid(e.W @ acts[-1] + e.b))
    z = logits(net.head, acts[-1])
    if t.shape != z.shape:
        raise ShapeError(f"targets {t.shape} do not match logits {z.shape}")
    weights = [e.W for e in net.encoders] + [net.head.W]
    loss = -np.sum(t * log_softmax(z)) / n + 0.5 * l2_weight * sum(np.sum(w ** 2) for w in weights)

    grads = {}
    dz = (softmax(z) - t) / n
    grads["W_head"] = dz @ acts[-1].T + l2_weight * net.head.W
    grads["b_head"] = dz.sum(axis=1, keepdims=True)
    delta = net.head.W.T @ dz
    for i in reversed(range(len(net.encoders))):
        e, h = net.encoders[i], acts[i + 1]
        dpre = delta * h * (1.0 - h)
        grads[f"W{i}"] = dpre @ acts[i].T + l2_weight * e.W
        grads[f"b{i}"] = dpre.sum(axis=1, keepdims=True)
        delta = e.W.T @ dpre
    return float(loss), grads


def accuracy(net, x, t) -> float:
    _, labels = predict(net, x)
    return float(np.mean(labels == np.argmax(t, axis=0)))


def fine_tune_fit(net, x_train, t_train, x_val, t_val, hyp: TrainHyper, rng):
    """Joint backpropagation through all layers.

    Selection prefers higher validation accuracy, then lower validation
    objective, so the returned network is never worse on validation accuracy
    than the input network.
    """
    x_train, t_train = as_matrix(x_train), as_matrix(t_train)
    k = len(net.encoders)
    has_val = x_val is not None and as_matrix(x_val).shape[1] > 0
    x_sel, t_sel = (as_matrix(x_val), as_matrix(t_val)) if has_val else (x_train, t_train)

    def loss_grad(params, idx):
        return stack_loss_and_gradient(StackedNetwork.from_dict(params, k),
                                       x_train[:, idx], t_train[:, idx], hyp.l2_weight)

    def objective(params):
        return stack_loss_and_gradient(StackedNetwork.from_dict(params, k),
                                       x_train, t_train, hyp.l2_weight)[0]

    def val_obj(params):
        return stack_loss_and_gradient(StackedNetwork.from_dict(params, k),
                                       x_sel, t_sel, hyp.l2_weight)[0]

    def select_key(params, value):
        return (-accuracy(StackedNetwork.from_dict(params, k), x_sel, t_sel), value)

    try:
        best, trace = minimize(net.as_dict(), loss_grad, x_train.shape[1], hyp, rng,
                               objective, val_obj, stage="finetune", select_key=select_key)
    except DivergenceError as exc:
        raise exc.with_stage("finetune") from exc
    return StackedNetwork.from_dict(best, k), trace


def fine_tune(net, ds, split, cfg: PipelineConfig, rng):
    labels = ds.labels
    x_train, t_train = ds.columns(split.train), one_hot(labels[split.train], ds.class_count)
    x_val, t_val = ds.columns(split.validation), one_hot(labels[split.validation], ds.class_count)
    return fine_tune_fit(net, x_train, t_train, x_val, t_val, cfg.finetune, rng)


class StackedAutoencoderClassifier(ClassifierMixin, BaseEstimator):
    """Greedily pretrained sparse-autoencoder stack under a softmax head.

    ``hidden_layer_sizes`` and ``ae_epochs`` give one entry per autoencoder.
    Autoencoders share the learning-rate/momentum/regularization settings;
    ``finetune_epochs > 0`` adds joint backpropagation after pretraining.
    """

    def __init__(self, hidden_layer_sizes=(100, 50), ae_epochs=(400, 100),
                 softmax_epochs=400, learning_rate=0.1, momentum=0.9, batch_size=64,
                 l2_weight=1e-4, sparsity_target=0.05, sparsity_weight=1.0,
                 finetune_epochs=0, finetune_learning_rate=0.1, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.ae_epochs = ae_epochs
        self.softmax_epochs = softmax_epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.l2_weight = l2_weight
        self.sparsity_target = sparsity_target
        self.sparsity_weight = sparsity_weight
        self.finetune_epochs = finetune_epochs
        self.finetune_learning_rate = finetune_learning_rate
        self.random_state = random_state

    def _config(self) -> PipelineConfig:
        if len(self.hidden_layer_sizes) != len(self.ae_epochs):
            raise ParameterError("hidden_layer_sizes and ae_epochs differ in length")
        common = dict(learning_rate=self.learning_rate, momentum=self.momentum,
                      batch_size=self.batch_size, l2_weight=self.l2_weight)
        aes = [AeHyper(hidden=h, epochs_max=e, sparsity_target=self.sparsity_target,
                       sparsity_weight=self.sparsity_weight, **common)
               for h, e in zip(self.hidden_layer_sizes, self.ae_epochs)]
        return PipelineConfig(
            autoencoders=aes,
            softmax=TrainHyper(epochs_max=self.softmax_epochs, **common),
            finetune=TrainHyper(epochs_max=self.finetune_epochs,
                                learning_rate=self.finetune_learning_rate,
                                momentum=self.momentum, batch_size=self.batch_size,
                                l2_weight=self.l2_weight),
        )

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_X_y(X, y, dtype=DTYPE)
        self.classes_ = unique_labels(y)
        x_val = t_val = None
        if X_val is not None:
            x_val = check_array(X_val, dtype=DTYPE).T
            t_val = _encode_targets(y_val, self.classes_)
        self.network_, self.traces_ = greedy_fit(
            X.T, _encode_targets(y, self.classes_), x_val, t_val, self._config(),
            make_rng(self.random_state))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "network_")
        return features(self.network_, check_array(X, dtype=DTYPE).T).T

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        return predict(self.network_, check_array(X, dtype=DTYPE).T)[0].T

    def predict(self, X):
        check_is_fitted(self, "network_")
        return self.classes_[predict_labels(self.predict_proba(X).T)]
