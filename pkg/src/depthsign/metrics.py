"""Confusion matrices and the NRMSE / ACC / BER / F1 report.

Multiclass ACC, BER and F1 are one-vs-rest per class, then macro-averaged
(unweighted mean over classes).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import FormatError, ParameterError, ShapeError, UndefinedMetricError

METRICS = ("NRMSE", "ACC", "F1S", "BER")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, cols = predicted class

    @property
    def class_count(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(true_labels, pred_labels, class_count: int) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64).ravel()
    p = np.asarray(pred_labels, dtype=np.int64).ravel()
    if t.size != p.size:
        raise ParameterError(f"{t.size} true labels but {p.size} predictions")
    for name, lab in (("true", t), ("predicted", p)):
        if lab.size and (lab.min() < 0 or lab.max() >= class_count):
            raise ParameterError(f"{name} labels must lie in [0, {class_count})")
    counts = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def binarize(cm: ConfusionMatrix, positive_class: int) -> BinaryCounts:
    """One-vs-rest counts with ``positive_class`` as the positive label."""
    if not 0 <= positive_class < cm.class_count:
        raise ParameterError(f"class {positive_class} not in [0, {cm.class_count})")
    c = cm.counts
    tp = int(c[positive_class, positive_class])
    fn = int(c[positive_class].sum()) - tp
    fp = int(c[:, positive_class].sum()) - tp
    return BinaryCounts(tp, cm.total - tp - fn - fp, fp, fn)


def acc(bc: BinaryCounts) -> float:
    if bc.total == 0:
        raise UndefinedMetricError("ACC undefined for zero samples")
    return (bc.tp + bc.tn) / bc.total


def _rate(num, den):
    # 0/0 contributes 0; num > 0 with den == 0 cannot occur since num <= den
    return num / den if den else 0.0


def ber(bc: BinaryCounts) -> float:
    if bc.total == 0:
        raise UndefinedMetricError("BER undefined for zero samples")
    return 0.5 * (_rate(bc.fp, bc.tn + bc.fp) + _rate(bc.fn, bc.fn + bc.tp))


def f1(bc: BinaryCounts) -> float:
    if bc.tp + bc.fp + bc.fn == 0:
        raise UndefinedMetricError("F1 undefined when tp + fp + fn = 0")
    if bc.tp == 0:
        return 0.0
    precision = bc.tp / (bc.tp + bc.fp)
    recall = bc.tp / (bc.tp + bc.fn)
    return 2.0 * precision * recall / (precision + recall)


def nrmse(y, d) -> float:
    """RMSE of ``y - d`` over all entries, divided by the population std of ``d``."""
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if y.shape != d.shape:
        raise ShapeError(f"prediction shape {y.shape} != target shape {d.shape}")
    if d.size == 0:
        raise UndefinedMetricError("NRMSE undefined for empty targets")
    sigma = float(np.std(d))
    if sigma == 0.0:
        raise UndefinedMetricError("NRMSE undefined for constant targets (sigma = 0)")
    return float(np.sqrt(np.mean((y - d) ** 2)) / sigma)


def macro_acc(cm: ConfusionMatrix) -> float:
    return float(np.mean([acc(binarize(cm, c)) for c in range(cm.class_count)]))


def macro_ber(cm: ConfusionMatrix) -> float:
    return float(np.mean([ber(binarize(cm, c)) for c in range(cm.class_count)]))


def macro_f1(cm: ConfusionMatrix) -> float:
    """Mean F1 over classes that occur among true or predicted labels.

    A class with ``tp = fp = fn = 0`` has undefined F1 and is left out.
    """
    scores = []
    for c in range(cm.class_count):
        bc = binarize(cm, c)
        if bc.tp + bc.fp + bc.fn:
            scores.append(f1(bc))
    if not scores:
        raise UndefinedMetricError("F1 undefined: no class occurs")
    return float(np.mean(scores))


@dataclass
class EvalReport:
    """Metric x subject table. ``rows[metric]`` lists one value per subject."""

    subjects: list
    rows: dict

    def avg(self, metric: str) -> float:
        vals = self.rows[metric]
        return float(sum(vals) / len(vals))

    def row(self, subject):
        i = self.subjects.index(subject)
        return {m: self.rows[m][i] for m in METRICS}

    @property
    def header(self) -> list:
        return ["metric", *[f"su{s}" for s in self.subjects], "avg"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header)
            for m in METRICS:
                w.writerow([m, *[repr(float(v)) for v in self.rows[m]], repr(self.avg(m))])

    @classmethod
    def from_csv(cls, path) -> "EvalReport":
        path = Path(path)
        try:
            with open(path, newline="") as fh:
                table = list(csv.reader(fh))
            head = table[0]
            if head[0] != "metric" or head[-1] != "avg" or len(head) < 3 or \
                    not all(h.startswith("su") for h in head[1:-1]):
                raise FormatError(f"{path}: header must be metric,su<id>...,avg")
            subjects = [int(h[2:]) for h in head[1:-1]]
            rows = {}
            for line in table[1:]:
                if len(line) != len(head):
                    raise FormatError(f"{path}: row {line[:1]} has {len(line)} fields")
                rows[line[0]] = [float(v) for v in line[1:-1]]
        except (ValueError, IndexError):
            raise FormatError(f"{path}: malformed report") from None
        if set(rows) != set(METRICS):
            raise FormatError(f"{path}: expected metric rows {', '.join(METRICS)}")
        return cls(subjects, rows)

    def to_table(self) -> str:
        head = ["Metric", *[f"SU{s}" for s in self.subjects], "AVG"]
        lines = ["\t".join(head)]
        for m in METRICS:
            vals = [f"{v:.6f}" for v in self.rows[m]] + [f"{self.avg(m):.6f}"]
            lines.append("\t".join([m, *vals]))
        return "\n".join(lines)


def subject_metrics(cm: ConfusionMatrix, y, d) -> dict:
    return {"NRMSE": nrmse(y, d), "ACC": macro_acc(cm), "F1S": macro_f1(cm),
            "BER": macro_ber(cm)}


def report(per_subject, subjects=None) -> EvalReport:
    """Build the metric x subject table from ``(confusion, posteriors, targets)`` triples."""
    per_subject = list(per_subject)
    if not per_subject:
        raise ParameterError("report needs at least one subject")
    if subjects is None:
        subjects = list(range(1, len(per_subject) + 1))
    if len(subjects) != len(per_subject):
        raise ParameterError(f"{len(subjects)} subject ids for {len(per_subject)} results")
    rows = {m: [] for m in METRICS}
    for sid, (cm, y, d) in zip(subjects, per_subject):
        try:
            vals = subject_metrics(cm, y, d)
        except UndefinedMetricError as exc:
            raise UndefinedMetricError(f"subject {sid}: {exc}") from None
        for m in METRICS:
            rows[m].append(vals[m])
    return EvalReport(list(subjects), rows)
