"""Flat run configuration: ``key = value`` files, presets and validation."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .autoencoder import AeHyper
from .exceptions import ParameterError
from .optim import TrainHyper
from .stack import PipelineConfig

SEED_ENV = "DEPTHSIGN_SEED"
DEFAULT_SEED = 0


@dataclass
class RunConfig:
    manifest: str = ""
    out: str = ""
    seed: int | None = None
    split: str = "0.5,0.25,0.25"
    subjects: str = "all"
    parallel_subjects: int = 1

    ae1_hidden: int = 25
    ae1_epochs: int = 400
    ae1_learning_rate: float = 0.1
    ae1_momentum: float = 0.9
    ae1_l2_weight: float = 1e-4
    ae1_sparsity_target: float = 0.05
    ae1_sparsity_weight: float = 1.0
    ae1_batch_size: int = 64

    ae2_hidden: int = 10
    ae2_epochs: int = 100
    ae2_learning_rate: float = 1.0
    ae2_momentum: float = 0.9
    ae2_l2_weight: float = 1e-4
    ae2_sparsity_target: float = 0.1
    ae2_sparsity_weight: float = 1.0
    ae2_batch_size: int = 64

    softmax_epochs: int = 400
    softmax_learning_rate: float = 1.0
    softmax_momentum: float = 0.9
    softmax_l2_weight: float = 1e-5
    softmax_batch_size: int = 64

    finetune_epochs: int = 0
    finetune_learning_rate: float = 0.1
    finetune_momentum: float = 0.9
    finetune_l2_weight: float = 1e-5
    finetune_batch_size: int = 64

    @classmethod
    def paper_defaults(cls, **overrides):
        """Layer sizes 100 / 50, epoch caps 400 / 100 / 400, split 50/25/25."""
        base = dict(ae1_hidden=100, ae1_epochs=400, ae2_hidden=50, ae2_epochs=100,
                    softmax_epochs=400, split="0.5,0.25,0.25")
        base.update(overrides)
        return cls(**base)

    @classmethod
    def keys(cls) -> list:
        return [f.name for f in fields(cls)]

    def update(self, values: dict) -> "RunConfig":
        """Return a copy with string or typed ``values`` coerced onto the fields."""
        types = {f.name: f.type for f in fields(self)}
        coerced = {}
        for key, raw in values.items():
            if key not in types:
                raise ParameterError(f"unknown config key {key!r}")
            coerced[key] = _coerce(key, types[key], raw)
        return dataclasses.replace(self, **coerced)

    @property
    def fractions(self) -> tuple:
        try:
            fr = tuple(float(v) for v in self.split.split(","))
        except ValueError:
            raise ParameterError(f"split must be three comma-separated numbers, got {self.split!r}") from None
        if len(fr) != 3 or any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ParameterError(f"split fractions must be three values >= 0 summing to 1, got {self.split!r}")
        return fr

    def resolved_seed(self) -> int:
        seed = self.seed
        if seed is None:
            env = os.environ.get(SEED_ENV)
            if env is not None and env.strip():
                try:
                    seed = int(env)
                except ValueError:
                    raise ParameterError(f"{SEED_ENV} must be an integer, got {env!r}") from None
            else:
                seed = DEFAULT_SEED
        if not 0 <= seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        return seed

    def subject_ids(self, available) -> list:
        available = sorted(set(int(s) for s in available))
        if self.subjects.strip().lower() == "all":
            return available
        try:
            chosen = sorted({int(s) for s in self.subjects.split(",") if s.strip()})
        except ValueError:
            raise ParameterError(f"subjects must be 'all' or comma-separated ids, got {self.subjects!r}") from None
        missing = [s for s in chosen if s not in available]
        if missing or not chosen:
            raise ParameterError(f"subjects {missing or self.subjects} not in dataset (available {available})")
        return chosen

    def pipeline(self) -> PipelineConfig:
        """Stage hyperparameters; raises ``ParameterError`` on invalid values."""
        def ae(prefix):
            g = lambda k: getattr(self, f"{prefix}_{k}")  # noqa: E731
            return AeHyper(hidden=g("hidden"), epochs_max=g("epochs"),
                           learning_rate=g("learning_rate"), momentum=g("momentum"),
                           l2_weight=g("l2_weight"), sparsity_target=g("sparsity_target"),
                           sparsity_weight=g("sparsity_weight"), batch_size=g("batch_size"))

        def plain(prefix):
            g = lambda k: getattr(self, f"{prefix}_{k}")  # noqa: E731
            return TrainHyper(epochs_max=g("epochs"), learning_rate=g("learning_rate"),
                              momentum=g("momentum"), l2_weight=g("l2_weight"),
                              batch_size=g("batch_size"))

        return PipelineConfig(autoencoders=[ae("ae1"), ae("ae2")], softmax=plain("softmax"),
                              finetune=plain("finetune"), fractions=self.fractions)

    def validate(self) -> None:
        self.pipeline()
        self.resolved_seed()
        if self.parallel_subjects < 1:
            raise ParameterError("parallel_subjects must be >= 1")
        if self.softmax_epochs < 1:
            raise ParameterError("softmax_epochs must be >= 1")

    def snapshot(self) -> dict:
        d = dataclasses.asdict(self)
        d["seed"] = self.resolved_seed()
        return d


def _coerce(key, typ, raw):
    if raw is None:
        return None
    typ = str(typ)
    try:
        if typ.startswith("int"):
            return int(raw)
        if typ == "float":
            return float(raw)
    except (TypeError, ValueError):
        raise ParameterError(f"config key {key!r}: cannot parse {raw!r} as {typ.split()[0]}") from None
    return str(raw)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in RunConfig.keys():
            raise ParameterError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def write_config_file(cfg: RunConfig, path) -> None:
    lines = ["# depthsign run configuration"]
    for k, v in cfg.snapshot().items():
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
