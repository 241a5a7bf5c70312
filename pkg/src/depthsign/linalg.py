"""Dense float64 helpers and seeded random streams.

Batches follow the samples-as-columns convention: a batch of ``N`` inputs of
dimension ``d`` is a ``(d, N)`` array.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ParameterError, ShapeError

DTYPE = np.float64
# sigmoid output range: the open interval (0, 1) as representable in float64
_SIG_LO = np.finfo(DTYPE).tiny
_SIG_HI = 1.0 - np.finfo(DTYPE).epsneg


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D float64 array (1-D input becomes a column)."""
    m = np.asarray(a, dtype=DTYPE)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def elementwise(a, f) -> np.ndarray:
    """Map ``f`` over every entry. ``f`` may be a ufunc or a scalar callable."""
    a = as_matrix(a)
    if isinstance(f, np.ufunc):
        return f(a)
    out = np.empty_like(a)
    flat_in, flat_out = a.ravel(), out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = f(flat_in[i])
    return out


def transpose(a) -> np.ndarray:
    return as_matrix(a).T.copy()


def sigmoid(z):
    # exp(-|z|) never overflows; both branches are exact rearrangements.
    z = np.asarray(z, dtype=DTYPE)
    e = np.exp(-np.abs(z))
    s = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(s, _SIG_LO, _SIG_HI)


def make_rng(seed, *keys) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and optional sub-keys.

    Distinct ``keys`` give independent streams, so per-subject or per-stage
    draws do not depend on execution order.
    """
    if isinstance(seed, np.random.Generator):
        if keys:
            raise ParameterError("sub-keys require an integer seed")
        return seed
    if seed is None or int(seed) < 0 or int(seed) >= 2**64:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return np.random.Generator(np.random.Philox(ss))


def rand_uniform(rng: np.random.Generator, rows: int, cols: int, lo: float, hi: float) -> np.ndarray:
    if not lo < hi:
        raise ParameterError(f"rand_uniform needs lo < hi, got lo={lo}, hi={hi}")
    if rows < 0 or cols < 0:
        raise ParameterError(f"negative shape ({rows}, {cols})")
    return rng.uniform(lo, hi, size=(rows, cols)).astype(DTYPE, copy=False)


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rand_uniform(rng, fan_out, fan_in, -r, r)
