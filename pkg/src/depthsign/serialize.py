"""Binary containers for trained parameters, plus JSON exports.

Every container starts with a 4-byte magic and a little-endian ``uint32``
format version, followed by ``uint32`` dimensions and the parameter arrays as
little-endian float64 in row-major order:

``DSAE``  input, hidden, then W_enc, b_enc, W_dec, b_dec
``DSSM``  classes, features, then W, b
``DSNW``  layer count L, L layer dims, then (W, b) per encoder, head W, b,
          then a ``uint32`` byte length and a UTF-8 JSON config snapshot
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .autoencoder import AutoencoderParams
from .classifier import SoftmaxParams
from .exceptions import FormatError
from .stack import EncoderLayer, StackedNetwork

VERSION = 1
AE_MAGIC, SM_MAGIC, NET_MAGIC = b"DSAE", b"DSSM", b"DSNW"
_F64 = np.dtype("<f8")


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf, self.pos, self.what = buf, 0, what

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.what}: truncated container")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, count=1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals if count > 1 else vals[0]

    def floats(self, rows, cols):
        raw = self.take(8 * rows * cols)
        return np.frombuffer(raw, dtype=_F64).astype(np.float64).reshape(rows, cols)

    def header(self, magic):
        got = self.take(4)
        if got != magic:
            raise FormatError(f"{self.what}: bad magic {got!r}, expected {magic!r}")
        version = self.u32()
        if version != VERSION:
            raise FormatError(f"{self.what}: unsupported format version {version}")

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{self.what}: {len(self.buf) - self.pos} trailing bytes")


def _header(magic, *dims):
    return magic + struct.pack(f"<{1 + len(dims)}I", VERSION, *dims)


def _floats(*arrays):
    return b"".join(np.ascontiguousarray(a, dtype=_F64).tobytes() for a in arrays)


def autoencoder_to_bytes(p: AutoencoderParams) -> bytes:
    return _header(AE_MAGIC, p.input_dim, p.hidden) + _floats(p.W_enc, p.b_enc, p.W_dec, p.b_dec)


def autoencoder_from_bytes(buf: bytes, what="autoencoder") -> AutoencoderParams:
    r = _Reader(buf, what)
    r.header(AE_MAGIC)
    d, h = r.u32(2)
    p = AutoencoderParams(r.floats(h, d), r.floats(h, 1), r.floats(d, h), r.floats(d, 1))
    r.done()
    return p


def softmax_to_bytes(p: SoftmaxParams) -> bytes:
    return _header(SM_MAGIC, p.classes, p.features) + _floats(p.W, p.b)


def softmax_from_bytes(buf: bytes, what="softmax") -> SoftmaxParams:
    r = _Reader(buf, what)
    r.header(SM_MAGIC)
    c, f = r.u32(2)
    p = SoftmaxParams(r.floats(c, f), r.floats(c, 1))
    r.done()
    return p


def network_to_bytes(net: StackedNetwork, config: dict | None = None) -> bytes:
    dims = net.layer_dims
    body = [_header(NET_MAGIC, len(dims), *dims)]
    for e in net.encoders:
        body.append(_floats(e.W, e.b))
    body.append(_floats(net.head.W, net.head.b))
    snapshot = json.dumps(config or {}, sort_keys=True).encode("utf-8")
    body.append(struct.pack("<I", len(snapshot)) + snapshot)
    return b"".join(body)


def network_from_bytes(buf: bytes, what="model bundle"):
    """Decode a ``DSNW`` bundle into ``(StackedNetwork, config dict)``."""
    r = _Reader(buf, what)
    r.header(NET_MAGIC)
    n = r.u32()
    if n < 2:
        raise FormatError(f"{what}: need at least 2 layer dims, got {n}")
    dims = list(r.u32(n))
    encoders = []
    for d_in, d_out in zip(dims[:-2], dims[1:-1]):
        encoders.append(EncoderLayer(r.floats(d_out, d_in), r.floats(d_out, 1)))
    head = SoftmaxParams(r.floats(dims[-1], dims[-2]), r.floats(dims[-1], 1))
    size = r.u32()
    try:
        config = json.loads(r.take(size).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError(f"{what}: corrupt config snapshot") from None
    r.done()
    return StackedNetwork(encoders, head), config


def save_autoencoder(p, path):
    Path(path).write_bytes(autoencoder_to_bytes(p))


def load_autoencoder(path):
    return autoencoder_from_bytes(Path(path).read_bytes(), str(path))


def save_softmax(p, path):
    Path(path).write_bytes(softmax_to_bytes(p))


def load_softmax(path):
    return softmax_from_bytes(Path(path).read_bytes(), str(path))


def save_network(net, path, config=None):
    Path(path).write_bytes(network_to_bytes(net, config))


def load_network(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model bundle not found: {path}")
    return network_from_bytes(path.read_bytes(), str(path))


# -- human-readable exports ------------------------------------------------

def to_jsonable(obj) -> dict:
    if isinstance(obj, AutoencoderParams):
        return {"kind": "autoencoder", **{k: v.tolist() for k, v in obj.as_dict().items()}}
    if isinstance(obj, SoftmaxParams):
        return {"kind": "softmax", "W": obj.W.tolist(), "b": obj.b.tolist()}
    if isinstance(obj, StackedNetwork):
        return {"kind": "network", "layer_dims": obj.layer_dims,
                "encoders": [{"W": e.W.tolist(), "b": e.b.tolist()} for e in obj.encoders],
                "head": {"W": obj.head.W.tolist(), "b": obj.head.b.tolist()}}
    raise TypeError(f"cannot export {type(obj).__name__}")


def from_jsonable(d: dict):
    arr = lambda v: np.asarray(v, dtype=np.float64)  # noqa: E731
    kind = d.get("kind")
    if kind == "autoencoder":
        return AutoencoderParams.from_dict(d)
    if kind == "softmax":
        return SoftmaxParams(arr(d["W"]), arr(d["b"]))
    if kind == "network":
        encoders = [EncoderLayer(arr(e["W"]), arr(e["b"])) for e in d["encoders"]]
        return StackedNetwork(encoders, SoftmaxParams(arr(d["head"]["W"]), arr(d["head"]["b"])))
    raise FormatError(f"unknown export kind {kind!r}")


def export_json(obj, path):
    """Write parameters as JSON; floats round-trip exactly."""
    Path(path).write_text(json.dumps(to_jsonable(obj)), encoding="utf-8")


def import_json(path):
    return from_jsonable(json.loads(Path(path).read_text(encoding="utf-8")))
