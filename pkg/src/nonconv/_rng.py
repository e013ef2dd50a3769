"""Counter-based deterministic randomness.

Every random quantity in the library flows through keys derived here, so a
run is a pure function of (seed, configuration): per-index draws use a
splitmix64 finalizer on (key, index), which lets independent workers sample
the same stream at arbitrary indices without shared state.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

_MASK = (1 << 64) - 1
_PHI = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """Scalar splitmix64 finalizer (stateless, platform-independent)."""
    z = (x + _PHI) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, *subkeys: int) -> int:
    """Derive a 64-bit stream key from a seed and a path of subkeys."""
    key = mix64(seed & _MASK)
    for s in subkeys:
        key = mix64(key ^ ((s & _MASK) * _PHI & _MASK))
    return key


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over a uint64 array."""
    z = (x + np.uint64(_PHI))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def index_draws(key: int, indices: np.ndarray, m: int) -> np.ndarray:
    """Per-index uniform digits in {0..m-1}, lazily addressable.

    The draw at a given index is independent of which other indices are
    requested and of request order.  Modulo bias is ~m/2^64, far below any
    statistical tolerance used here.
    """
    idx = np.ascontiguousarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = mix64_array(idx * np.uint64(_PHI) ^ np.uint64(key))
    return (h % np.uint64(m)).astype(np.int64)


def index_draw_scalar(key: int, index: int, m: int) -> int:
    return mix64(((index * _PHI) & _MASK) ^ key) % m


def bits_from_key(key: int, nbits: int) -> int:
    """nbits deterministic bits as an integer (block counter construction)."""
    out = 0
    produced = 0
    counter = 0
    while produced < nbits:
        out = (out << 64) | mix64(key ^ mix64(counter))
        produced += 64
        counter += 1
    excess = produced - nbits
    return out >> excess


def uniforms(key: int, count: int) -> np.ndarray:
    """count deterministic uniforms in [0, 1) from the keyed counter stream."""
    idx = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = mix64_array(idx * np.uint64(_PHI) ^ np.uint64(key))
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def subkeys(key: int, labels: Iterable[int]) -> list:
    return [stream_key(key, s) for s in labels]
