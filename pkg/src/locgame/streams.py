"""Counter-based uniform streams.

Draw ``k`` of a run seeded with ``s`` is a pure function of ``(s, k)``, so a
sample can be cut into chunks and evaluated in any order or process without
changing a single bit of the result.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_DRAW_MULT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, draws: np.ndarray) -> np.ndarray:
    """One 64-bit key per draw index, derived from the run seed."""
    base = mix64(np.array([(int(seed) & _MASK)], dtype=np.uint64) + _GOLDEN)
    idx = np.asarray(draws, dtype=np.uint64)
    return mix64(base ^ (idx * _DRAW_MULT))


def uniforms(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms on [0, 1) for draws ``start..stop-1``, ``width`` per draw."""
    keys = stream_keys(seed, np.arange(start, stop, dtype=np.uint64))
    out = np.empty((stop - start, width))
    for j in range(width):
        offset = np.uint64(((j + 1) * int(_GOLDEN)) & _MASK)
        bits = mix64(keys + offset) >> np.uint64(11)
        out[:, j] = bits.astype(np.float64) * (1.0 / (1 << 53))
    return out
