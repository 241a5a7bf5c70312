"""Per-subject protocol: split, greedy training, evaluation, artifacts on disk."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import Dataset, Split, one_hot, split_dataset
from .linalg import make_rng
from .metrics import ConfusionMatrix, EvalReport, confusion, report
from .serialize import save_network
from .stack import StackedNetwork, greedy_train, init_network, predict

# sub-keys for make_rng(seed, subject, key)
SPLIT_STREAM, TRAIN_STREAM = 0, 1


@dataclass
class SubjectResult:
    subject: int
    network: StackedNetwork
    split: Split
    traces: dict
    confusion: ConfusionMatrix
    posteriors: np.ndarray
    targets: np.ndarray


def subject_split(ds: Dataset, subject: int, fractions, seed: int) -> Split:
    return split_dataset(ds, fractions, make_rng(seed, subject, SPLIT_STREAM))


def evaluate(net: StackedNetwork, ds: Dataset, indices):
    """Posteriors, one-hot targets and confusion matrix on ``ds[indices]``."""
    post, labels = predict(net, ds.columns(indices))
    truth = ds.labels[list(indices)]
    return confusion(truth, labels, ds.class_count), post, one_hot(truth, ds.class_count)


def bundle_config(cfg: RunConfig, ds: Dataset, subject: int) -> dict:
    snap = cfg.snapshot()
    snap.update(subject=subject, class_names=list(ds.class_names),
                image_width=ds.image_shape[0], image_height=ds.image_shape[1])
    return snap


def run_subject(ds: Dataset, subject: int, cfg: RunConfig) -> SubjectResult:
    """Greedy training on one subject's images; evaluation on its validation partition."""
    seed = cfg.resolved_seed()
    sub = ds.for_subject(subject)
    split = subject_split(sub, subject, cfg.fractions, seed)
    net, traces = greedy_train(sub, split, cfg.pipeline(), make_rng(seed, subject, TRAIN_STREAM))
    cm, post, targets = evaluate(net, sub, split.validation)
    return SubjectResult(subject, net, split, traces, cm, post, targets)


def untrained_subject(ds: Dataset, subject: int, cfg: RunConfig) -> StackedNetwork:
    seed = cfg.resolved_seed()
    return init_network(ds.input_dim, ds.class_count, cfg.pipeline(),
                        make_rng(seed, subject, TRAIN_STREAM))


def run_subjects(ds: Dataset, subjects, cfg: RunConfig) -> list:
    if cfg.parallel_subjects > 1 and len(subjects) > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallel_subjects) as pool:
            return list(pool.map(lambda s: run_subject(ds, s, cfg), subjects))
    return [run_subject(ds, s, cfg) for s in subjects]


def write_confusion(cm: ConfusionMatrix, path, class_names) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\pred", *class_names])
        for name, row in zip(class_names, cm.counts.tolist()):
            w.writerow([name, *row])


def write_subject_artifacts(result: SubjectResult, ds: Dataset, cfg: RunConfig, out: Path) -> Path:
    sdir = out / f"subject_{result.subject}"
    sdir.mkdir(parents=True, exist_ok=True)
    save_network(result.network, sdir / "model.dsnw", bundle_config(cfg, ds, result.subject))
    for stage, trace in result.traces.items():
        trace.to_csv(sdir / f"trace_{stage}.csv")
    write_confusion(result.confusion, sdir / "confusion_validation.csv", ds.class_names)
    return sdir


def results_report(results) -> EvalReport:
    return report([(r.confusion, r.posteriors, r.targets) for r in results],
                  [r.subject for r in results])


def write_report(rep: EvalReport, out: Path, partition: str) -> tuple:
    csv_path = out / f"report_{partition}.csv"
    txt_path = out / f"report_{partition}.txt"
    rep.to_csv(csv_path)
    txt_path.write_text(rep.to_table() + "\n", encoding="utf-8")
    return csv_path, txt_path
