"""Mini-batch gradient descent with momentum and best-validation selection."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DivergenceError, FormatError, ParameterError

TRACE_HEADER = ["epoch", "train_objective", "validation_objective"]


@dataclass
class TrainHyper:
    epochs_max: int = 400
    learning_rate: float = 0.1
    momentum: float = 0.9
    l2_weight: float = 1e-4
    batch_size: int = 64

    def __post_init__(self):
        if self.epochs_max < 0:
            raise ParameterError(f"epochs_max must be >= 0, got {self.epochs_max}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ParameterError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.l2_weight < 0:
            raise ParameterError(f"l2_weight must be >= 0, got {self.l2_weight}")


@dataclass
class TrainTrace:
    """Per-epoch objectives. The pre-training state is kept apart in ``initial``."""

    stage: str = ""
    rows: list = field(default_factory=list)  # (epoch, train, validation), epoch >= 1
    initial: tuple = (float("nan"), float("nan"))
    best_epoch: int = 0

    def __len__(self):
        return len(self.rows)

    @property
    def best_objective(self) -> float:
        if self.best_epoch == 0:
            return self.initial[1]
        return self.rows[self.best_epoch - 1][2]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            w.writerow([0, repr(self.initial[0]), repr(self.initial[1])])
            for epoch, tr, va in self.rows:
                w.writerow([epoch, repr(tr), repr(va)])

    @classmethod
    def from_csv(cls, path, stage: str = "") -> "TrainTrace":
        path = Path(path)
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
            if not rows or rows[0] != TRACE_HEADER:
                raise FormatError(f"{path}: trace header must be {','.join(TRACE_HEADER)}")
            body = [(int(r[0]), float(r[1]), float(r[2])) for r in rows[1:]]
        except (ValueError, IndexError):
            raise FormatError(f"{path}: malformed trace row") from None
        if not body or body[0][0] != 0 or [r[0] for r in body] != list(range(len(body))):
            raise FormatError(f"{path}: epochs must run 0, 1, 2, ...")
        trace = cls(stage or path.stem, body[1:], body[0][1:])
        vals = [r[2] for r in body]
        trace.best_epoch = int(np.argmin(vals)) if not np.all(np.isnan(vals)) else 0
        return trace


def minimize(params, loss_grad, n_samples, hyp, rng, objective, val_objective=None,
             stage="", select_key=None):
    """Run momentum SGD over ``params`` (dict of arrays) and keep the best snapshot.

    ``loss_grad(params, idx)`` returns the mini-batch loss and a gradient dict for
    sample indices ``idx``; ``objective`` and ``val_objective`` evaluate the full
    training and validation objectives. Selection uses the validation objective
    when given, otherwise the training objective. The untrained state competes
    too, so zero epochs return ``params`` unchanged.

    ``select_key(params, selection_value)``, if given, replaces the selection
    value as the quantity to minimize (any comparable, e.g. a tuple).
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _minimize(params, loss_grad, n_samples, hyp, rng, objective,
                         val_objective, stage, select_key)


def _minimize(params, loss_grad, n_samples, hyp, rng, objective, val_objective, stage,
              select_key):
    params = {k: np.array(v, copy=True) for k, v in params.items()}
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    select = val_objective if val_objective is not None else objective

    def evaluate(epoch):
        tr = float(objective(params))
        va = float(select(params)) if val_objective is not None else tr
        if not (np.isfinite(tr) and np.isfinite(va)):
            raise DivergenceError(epoch, hyp.learning_rate, stage or None)
        return tr, va

    def key(value):
        return value if select_key is None else select_key(params, value)

    trace = TrainTrace(stage=stage, initial=evaluate(0))
    best_key = key(trace.initial[1])
    best = {k: v.copy() for k, v in params.items()}
    lr, mu = hyp.learning_rate, hyp.momentum

    for epoch in range(1, hyp.epochs_max + 1):
        order = rng.permutation(n_samples)
        for start in range(0, n_samples, hyp.batch_size):
            loss, grads = loss_grad(params, order[start:start + hyp.batch_size])
            if not np.isfinite(loss):
                raise DivergenceError(epoch, lr, stage or None)
            for k, g in grads.items():
                v = velocity[k]
                v *= mu
                v -= lr * g
                params[k] += v
        tr, va = evaluate(epoch)
        trace.rows.append((epoch, tr, va))
        k = key(va)
        if k < best_key:
            best_key = k
            trace.best_epoch = epoch
            best = {k: v.copy() for k, v in params.items()}
    return best, trace
