"""Counter-based uniforms: SplitMix64 finalizer over (seed, chain, step, slot).

Every uniform is a pure function of its coordinates, so a chain's stream is
independent of how chains are batched or which thread advances them.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_SALT_CHAIN = np.uint64(0xD1B54A32D192ED03)
_SALT_STEP = np.uint64(0x8CB92BA72F3D8DD7)


def _mix(x: np.ndarray) -> np.ndarray:
    x = x + _GOLDEN
    x = (x ^ (x >> _S30)) * _M1
    x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


def stream_keys(seed: int, chains: np.ndarray) -> np.ndarray:
    """One 64-bit key per chain index."""
    base = np.full(len(chains), seed & _MASK, dtype=np.uint64)
    return _mix(_mix(base) ^ (np.asarray(chains, dtype=np.uint64) * _SALT_CHAIN))


def uniforms(keys: np.ndarray, step: int, width: int) -> np.ndarray:
    """Array (len(keys), width) of doubles in [0, 1) for one step."""
    with np.errstate(over="ignore"):
        row = _mix(keys ^ np.uint64((step * int(_SALT_STEP)) & _MASK))
        slots = np.arange(width, dtype=np.uint64) * _GOLDEN
        x = _mix(row[:, None] ^ slots[None, :])
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
