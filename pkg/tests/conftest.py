from pathlib import Path

import pytest

from depthsign.data import synth_gestures, write_manifest, write_pgm, denormalize
from depthsign.linalg import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


def write_corpus(root, ds, class_names=None):
    """Write ``ds`` as PGM files plus manifest under ``root``; returns the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    for i, im in enumerate(ds.images):
        rel = f"img_{i:05d}.pgm"
        write_pgm(root / rel, im.width, im.height, denormalize(im.pixels))
        records.append((rel, im.label, im.subject))
    manifest = root / "manifest.tsv"
    write_manifest(manifest, records, class_names)
    return manifest


@pytest.fixture(scope="session")
def desk_dataset():
    return synth_gestures(5, 200, 16, 0.05, make_rng(7))


@pytest.fixture
def tiny_corpus(tmp_path):
    ds = synth_gestures(3, 8, 8, 0.05, make_rng(5), subject=1)
    return write_corpus(tmp_path / "data", ds, ["a", "b", "c"])
