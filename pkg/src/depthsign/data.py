"""Depth-image datasets: PGM/manifest loading, stratified splits, synthetic corpora.

Manifest format, one record per line::

    relative/path.pgm<TAB>label<TAB>subject

Blank lines and lines starting with ``#`` are ignored, except an optional
``# classes: name0,name1,...`` directive that fixes the class count and the
names used in reports. Without it the class count is ``max(label) + 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import FormatError, ManifestError, ParameterError
from .linalg import DTYPE

MAXVAL = 255
DEFAULT_FRACTIONS = (0.50, 0.25, 0.25)
_CLASSES_RE = re.compile(r"^#\s*classes\s*:\s*(.*)$")


@dataclass(frozen=True)
class DepthImage:
    width: int
    height: int
    pixels: np.ndarray  # row-major, normalized to [0, 1]
    label: int
    subject: int = 0

    def __post_init__(self):
        if self.pixels.size != self.width * self.height:
            raise FormatError(
                f"{self.pixels.size} pixels for a {self.width}x{self.height} image"
            )


@dataclass
class Dataset:
    images: list
    class_count: int
    class_names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.class_names:
            self.class_names = [str(c) for c in range(self.class_count)]
        if len(self.class_names) != self.class_count:
            raise ManifestError(
                f"{len(self.class_names)} class names for {self.class_count} classes"
            )
        sizes = {(im.width, im.height) for im in self.images}
        if len(sizes) > 1:
            raise FormatError(f"images have mixed dimensions: {sorted(sizes)}")
        for im in self.images:
            if not 0 <= im.label < self.class_count:
                raise ManifestError(
                    f"label {im.label} out of range for {self.class_count} classes"
                )

    def __len__(self):
        return len(self.images)

    @property
    def input_dim(self) -> int:
        return self.images[0].pixels.size if self.images else 0

    @property
    def image_shape(self):
        if not self.images:
            return (0, 0)
        return (self.images[0].width, self.images[0].height)

    @property
    def labels(self) -> np.ndarray:
        return np.array([im.label for im in self.images], dtype=np.int64)

    @property
    def subjects(self) -> np.ndarray:
        return np.array([im.subject for im in self.images], dtype=np.int64)

    def columns(self, indices=None) -> np.ndarray:
        """Pixels of the selected images as a ``(width*height, N)`` matrix."""
        if indices is None:
            indices = range(len(self.images))
        indices = list(indices)
        out = np.empty((self.input_dim, len(indices)), dtype=DTYPE)
        for j, i in enumerate(indices):
            out[:, j] = self.images[i].pixels
        return out

    def subset(self, indices) -> "Dataset":
        return Dataset([self.images[i] for i in indices], self.class_count,
                       list(self.class_names))

    def for_subject(self, subject: int) -> "Dataset":
        return self.subset([i for i, im in enumerate(self.images) if im.subject == subject])


@dataclass(frozen=True)
class Split:
    train: list
    validation: list
    test: list
    fractions: tuple = DEFAULT_FRACTIONS

    def partition(self, name: str) -> list:
        if name == "all":
            return sorted(self.train + self.validation + self.test)
        try:
            return {"train": self.train, "validation": self.validation,
                    "test": self.test}[name]
        except KeyError:
            raise ParameterError(f"unknown partition {name!r}") from None


# -- PGM -------------------------------------------------------------------

def _pgm_tokens(buf: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 2
    while len(tokens) < count:
        if pos >= len(buf):
            raise FormatError("truncated PGM header")
        c = buf[pos:pos + 1]
        if c == b"#":
            nl = buf.find(b"\n", pos)
            pos = len(buf) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(buf) and not buf[pos:pos + 1].isspace():
                pos += 1
            tokens.append(buf[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path) -> tuple:
    """Decode a binary 8-bit PGM (P5). Returns ``(width, height, uint8 raster)``."""
    path = Path(path)
    buf = path.read_bytes()
    if buf[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    tokens, start = _pgm_tokens(buf, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header") from None
    if maxval != MAXVAL:
        raise FormatError(f"{path}: maxval {maxval} unsupported (expected {MAXVAL})")
    raster = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=start) \
        if len(buf) - start >= width * height else None
    if raster is None:
        raise FormatError(f"{path}: raster shorter than {width}x{height}")
    return width, height, raster.copy()


def write_pgm(path, width: int, height: int, raster) -> None:
    raster = np.asarray(raster, dtype=np.uint8).ravel()
    if raster.size != width * height:
        raise FormatError(f"{raster.size} pixels for a {width}x{height} image")
    header = f"P5\n{width} {height}\n{MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + raster.tobytes())


def normalize(raster) -> np.ndarray:
    return np.asarray(raster, dtype=DTYPE) / MAXVAL


def denormalize(pixels) -> np.ndarray:
    return np.rint(np.clip(np.asarray(pixels, dtype=DTYPE), 0.0, 1.0) * MAXVAL).astype(np.uint8)


def load_image(path, label: int = 0, subject: int = 0) -> DepthImage:
    width, height, raster = read_pgm(path)
    return DepthImage(width, height, normalize(raster), label, subject)


# -- manifest --------------------------------------------------------------

def read_manifest(manifest_path) -> tuple:
    """Parse a manifest into ``(records, class_names or None)``.

    Each record is ``(relative_path, label, subject)``.
    """
    manifest_path = Path(manifest_path)
    records, class_names = [], None
    with open(manifest_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                m = _CLASSES_RE.match(line)
                if m:
                    class_names = [s.strip() for s in m.group(1).split(",") if s.strip()]
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ManifestError(
                    f"{manifest_path}:{lineno}: expected path<TAB>label<TAB>subject"
                )
            try:
                label, subject = int(parts[1]), int(parts[2])
            except ValueError:
                raise ManifestError(f"{manifest_path}:{lineno}: non-integer label or subject") from None
            if label < 0:
                raise ManifestError(f"{manifest_path}:{lineno}: negative label {label}")
            records.append((parts[0], label, subject))
    return records, class_names


def write_manifest(manifest_path, records, class_names=None) -> None:
    lines = []
    if class_names:
        lines.append("# classes: " + ",".join(class_names))
    lines += [f"{p}\t{label}\t{subject}" for p, label, subject in records]
    Path(manifest_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(manifest_path, class_count: int | None = None) -> Dataset:
    """Load every image a manifest references, normalized to ``[0, 1]``."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    records, class_names = read_manifest(manifest_path)
    if class_count is None:
        if class_names:
            class_count = len(class_names)
        else:
            class_count = max((r[1] for r in records), default=-1) + 1
    for rel, label, _ in records:
        if label >= class_count:
            raise ManifestError(
                f"{manifest_path}: label {label} for {rel} >= class count {class_count}"
            )
    root = manifest_path.parent
    images = []
    for rel, label, subject in records:
        path = root / rel
        if not path.is_file():
            raise FileNotFoundError(f"image not found: {path}")
        images.append(load_image(path, label, subject))
    if class_names and len(class_names) != class_count:
        class_names = None
    return Dataset(images, class_count, class_names or [])


# -- splitting and targets -------------------------------------------------

def _check_fractions(fractions) -> tuple:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ParameterError(f"need three split fractions, got {len(fractions)}")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ParameterError(f"split fractions must be >= 0 and sum to 1, got {fractions}")
    return fractions


def split_dataset(ds, fractions=DEFAULT_FRACTIONS, rng=None) -> Split:
    """Stratified shuffled train/validation/test split.

    Per class, counts are the rounded cumulative fractions, so each partition
    is within one sample of its exact share.
    """
    fractions = _check_fractions(fractions)
    if rng is None:
        raise ParameterError("split_dataset needs an rng")
    labels = ds.labels if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.int64)
    train, val, test = [], [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n = idx.size
        cut1 = int(np.floor(fractions[0] * n + 0.5))
        cut2 = int(np.floor((fractions[0] + fractions[1]) * n + 0.5))
        cut2 = max(cut1, min(cut2, n))
        train += idx[:cut1].tolist()
        val += idx[cut1:cut2].tolist()
        test += idx[cut2:].tolist()
    return Split(sorted(train), sorted(val), sorted(test), fractions)


def one_hot(labels: Sequence[int], class_count: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ParameterError(f"labels must lie in [0, {class_count})")
    t = np.zeros((class_count, labels.size), dtype=DTYPE)
    t[labels, np.arange(labels.size)] = 1.0
    return t


# -- synthetic gestures ----------------------------------------------------

def gesture_pattern(label: int, class_count: int, side: int, subject: int = 0) -> np.ndarray:
    """Noise-free template: an oriented bar plus an off-centre blob, keyed by class."""
    yy, xx = np.mgrid[0:side, 0:side].astype(DTYPE)
    c = (side - 1) / 2.0
    theta = np.pi * label / class_count
    # signed distance from the line through the centre at angle theta
    dist = np.abs((xx - c) * np.sin(theta) - (yy - c) * np.cos(theta))
    half_width = side / 10.0 * (1.0 + 0.15 * (subject % 3))
    img = np.full((side, side), 0.1)
    img[dist <= half_width] = 0.8
    phi = 2.0 * np.pi * label / class_count
    bx, by = c + side / 3.0 * np.cos(phi), c + side / 3.0 * np.sin(phi)
    blob = (xx - bx) ** 2 + (yy - by) ** 2 <= (side / 8.0) ** 2
    img[blob] = 1.0
    return img


def synth_gestures(class_count: int, per_class: int, side: int, noise: float,
                   rng, subject: int = 0) -> Dataset:
    """Synthetic depth-image stand-in: class templates plus uniform noise in ``[-noise, noise]``."""
    if side < 4:
        raise ParameterError(f"side must be >= 4, got {side}")
    if class_count < 1 or per_class < 0:
        raise ParameterError("class_count must be >= 1 and per_class >= 0")
    if noise < 0:
        raise ParameterError(f"noise must be >= 0, got {noise}")
    images = []
    for label in range(class_count):
        template = gesture_pattern(label, class_count, side, subject).ravel()
        for _ in range(per_class):
            pixels = template + rng.uniform(-noise, noise, size=template.size) if noise > 0 \
                else template.copy()
            images.append(DepthImage(side, side, np.clip(pixels, 0.0, 1.0), label, subject))
    return Dataset(images, class_count)
