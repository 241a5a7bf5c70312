"""``depthsign`` command line: gen-data, train, eval, predict, plot-data.

Exit codes: 0 success, 2 usage or validation error, 3 numerical divergence,
1 any other I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config_file
from .data import denormalize, load_dataset, load_image, synth_gestures, write_manifest, write_pgm
from .exceptions import (
    DivergenceError,
    FormatError,
    ManifestError,
    ParameterError,
    ShapeError,
    UndefinedMetricError,
)
from .experiment import (
    bundle_config,
    evaluate,
    results_report,
    run_subjects,
    subject_split,
    untrained_subject,
    write_report,
    write_subject_artifacts,
)
from .linalg import make_rng
from .metrics import METRICS, EvalReport, report
from .optim import TrainTrace
from .serialize import load_network, save_network
from .stack import predict

log = logging.getLogger("depthsign")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3
VALIDATION_ERRORS = (ParameterError, ManifestError, FormatError, ShapeError,
                     UndefinedMetricError, FileNotFoundError)
PARTITIONS = ("train", "validation", "test", "all")


class UsageError(Exception):
    pass


def _check_writable_dir(path: Path) -> None:
    """Fail before any write if ``path`` cannot be created or written."""
    probe = path
    while not probe.exists():
        if probe.parent == probe:
            break
        probe = probe.parent
    if not probe.is_dir():
        raise ParameterError(f"output path {probe} is not a directory")
    if not os.access(probe, os.W_OK | os.X_OK):
        raise ParameterError(f"output directory {path} is not writable")


# -- gen-data --------------------------------------------------------------

def cmd_gen_data(args) -> int:
    if args.side < 4:
        raise ParameterError(f"--side must be >= 4, got {args.side}")
    if args.classes < 1 or args.per_class < 1 or args.subjects < 1:
        raise ParameterError("--classes, --per-class and --subjects must be >= 1")
    if args.noise < 0:
        raise ParameterError("--noise must be >= 0")
    seed = RunConfig(seed=args.seed).resolved_seed()
    out = Path(args.out)
    _check_writable_dir(out)

    records = []
    for subject in range(1, args.subjects + 1):
        ds = synth_gestures(args.classes, args.per_class, args.side, args.noise,
                            make_rng(seed, subject), subject=subject)
        counters = {}
        for im in ds.images:
            k = counters.get(im.label, 0)
            counters[im.label] = k + 1
            rel = Path(f"s{subject}") / f"c{im.label}" / f"img_{k:04d}.pgm"
            (out / rel.parent).mkdir(parents=True, exist_ok=True)
            write_pgm(out / rel, im.width, im.height, denormalize(im.pixels))
            records.append((rel.as_posix(), im.label, subject))
    names = [f"sign{c}" for c in range(args.classes)]
    write_manifest(out / "manifest.tsv", records, names)
    print(f"wrote {len(records)} images and {out / 'manifest.tsv'}")
    return EXIT_OK


# -- train -----------------------------------------------------------------

def _flag_values(args) -> dict:
    return {k: getattr(args, k) for k in RunConfig.keys() if getattr(args, k, None) is not None}


def build_run_config(args) -> RunConfig:
    cfg = RunConfig.paper_defaults() if args.paper_defaults else RunConfig()
    if args.config:
        cfg = cfg.update(load_config_file(args.config))
    cfg = cfg.update(_flag_values(args))
    if not cfg.manifest:
        raise ParameterError("no manifest given (--manifest or 'manifest = ...' in config)")
    if not cfg.out:
        raise ParameterError("no output directory given (--out or 'out = ...' in config)")
    cfg.validate()
    return cfg


def cmd_train(args) -> int:
    cfg = build_run_config(args)
    ds = load_dataset(cfg.manifest)
    if len(ds) == 0:
        raise ParameterError(f"{cfg.manifest}: no images")
    subjects = cfg.subject_ids(ds.subjects)
    out = Path(cfg.out)
    _check_writable_dir(out)

    if args.init_only:
        out.mkdir(parents=True, exist_ok=True)
        for s in subjects:
            net = untrained_subject(ds, s, cfg)
            sdir = out / f"subject_{s}"
            sdir.mkdir(exist_ok=True)
            save_network(net, sdir / "model.dsnw", bundle_config(cfg, ds, s))
            print(f"subject {s}: initialized {' -> '.join(map(str, net.layer_dims))}")
        return EXIT_OK

    results = run_subjects(ds, subjects, cfg)
    out.mkdir(parents=True, exist_ok=True)
    for r in results:
        write_subject_artifacts(r, ds, cfg, out)
        log.info("subject %s: %s", r.subject, " -> ".join(map(str, r.network.layer_dims)))
    rep = results_report(results)
    write_report(rep, out, "validation")
    (out / "config.txt").write_text(
        "\n".join(f"{k} = {v}" for k, v in cfg.snapshot().items()) + "\n", encoding="utf-8")
    print(rep.to_table())
    return EXIT_OK


# -- eval ------------------------------------------------------------------

def cmd_eval(args) -> int:
    out = Path(args.out)
    _check_writable_dir(out)
    bundles = [load_network(p) + (p,) for p in args.model]
    ds = load_dataset(args.manifest)
    per_subject, subjects = [], []
    for net, snap, path in bundles:
        if net.input_dim != ds.input_dim:
            raise ShapeError(f"{path} expects input dim {net.input_dim} but "
                             f"{args.manifest} images have {ds.input_dim} "
                             f"({ds.image_shape[0]}x{ds.image_shape[1]})")
        if net.head.classes != ds.class_count:
            raise ShapeError(f"{path} has {net.head.classes} classes but the manifest has {ds.class_count}")
        subject = int(snap.get("subject", 0))
        sub = ds.for_subject(subject)
        if len(sub) == 0:
            raise ParameterError(f"subject {subject} of {path} has no images in {args.manifest}")
        fractions = tuple(float(f) for f in str(snap.get("split", "0.5,0.25,0.25")).split(","))
        split = subject_split(sub, subject, fractions, int(snap.get("seed", 0)))
        cm, post, targets = evaluate(net, sub, split.partition(args.partition))
        per_subject.append((cm, post, targets))
        subjects.append(subject)
    rep = report(per_subject, subjects)
    out.mkdir(parents=True, exist_ok=True)
    write_report(rep, out, args.partition)
    print(rep.to_table())
    return EXIT_OK


# -- predict ---------------------------------------------------------------

def cmd_predict(args) -> int:
    net, snap = load_network(args.model)
    images = [load_image(p) for p in args.images]
    expected = (snap.get("image_width"), snap.get("image_height"))
    for path, im in zip(args.images, images):
        if im.pixels.size != net.input_dim or (expected[0] and (im.width, im.height) != expected):
            dims = f"{expected[0]}x{expected[1]}" if expected[0] else f"{net.input_dim} pixels"
            raise ShapeError(f"{path}: image is {im.width}x{im.height}, model expects {dims}")
    if not images:
        return EXIT_OK
    x = np.stack([im.pixels for im in images], axis=1)
    post, labels = predict(net, x)
    names = snap.get("class_names") or [str(c) for c in range(net.head.classes)]
    for j, path in enumerate(args.images):
        probs = " ".join(repr(float(p)) for p in post[:, j])
        print(f"{path}\t{int(labels[j])}\t{names[labels[j]]}\t{probs}")
    return EXIT_OK


# -- plot-data -------------------------------------------------------------

def cmd_plotdata(args) -> int:
    out = Path(args.out)
    _check_writable_dir(out)
    rep = EvalReport.from_csv(args.report)
    traces = [TrainTrace.from_csv(p) for p in args.trace]
    out.mkdir(parents=True, exist_ok=True)
    for m in METRICS:
        with open(out / f"{m.lower()}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subject", m.lower()])
            for s, v in zip(rep.subjects, rep.rows[m]):
                w.writerow([f"su{s}", repr(float(v))])
    if traces:
        with open(out / "curves.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trace", "epoch", "train_objective", "validation_objective"])
            for path, t in zip(args.trace, traces):
                name = Path(path).parent.name + "/" + Path(path).stem
                w.writerow([name, 0, repr(t.initial[0]), repr(t.initial[1])])
                for e, tr, va in t.rows:
                    w.writerow([name, e, repr(tr), repr(va)])
    print(f"wrote plot data to {out}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(p):
    types = {"int": int, "float": float}
    for f in RunConfig.__dataclass_fields__.values():
        typ = types.get(str(f.type).split()[0], str)
        dashed = "--" + f.name.replace("_", "-")
        names = [dashed] if "_" not in f.name else [dashed, "--" + f.name]
        p.add_argument(*names, dest=f.name, type=typ, default=None,
                       help=f"(default {f.default})")


def build_parser():
    parser = _Parser(prog="depthsign", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic PGM corpus and manifest")
    g.add_argument("--out", required=True)
    g.add_argument("--classes", type=int, default=5)
    g.add_argument("--per-class", type=int, default=200)
    g.add_argument("--side", type=int, default=16)
    g.add_argument("--noise", type=float, default=0.05)
    g.add_argument("--subjects", type=int, default=1)
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="greedy training per subject")
    t.add_argument("--config", default=None, help="key = value config file")
    t.add_argument("--paper-defaults", action="store_true",
                   help="100/50 hidden units, epochs 400/100/400, split 0.5/0.25/0.25")
    t.add_argument("--init-only", action="store_true",
                   help="write untrained bundles without training")
    _add_config_flags(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="metric report for trained bundles")
    e.add_argument("--model", required=True, nargs="+")
    e.add_argument("--manifest", required=True)
    e.add_argument("--partition", choices=PARTITIONS, default="validation")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify PGM images")
    p.add_argument("--model", required=True)
    p.add_argument("images", nargs="*")
    p.set_defaults(func=cmd_predict)

    d = sub.add_parser("plot-data", help="per-metric CSVs from a report")
    d.add_argument("--report", required=True)
    d.add_argument("--trace", nargs="*", default=[])
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry_point():
    sys.exit(main())
