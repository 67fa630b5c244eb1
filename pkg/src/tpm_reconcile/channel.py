"""Key generation and binary-symmetric-channel noise.

All randomness comes from :class:`SeededRng`, a thin wrapper over the
Philox4x64-10 counter-based generator with the 64-bit seed used directly
as the Philox key and the counter starting at zero. Outputs are derived
from the raw 64-bit words only, so a seed reproduces the same bits on
any platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed for trial ``trial`` of a sweep: ``base_seed XOR splitmix64(trial)``."""
    return (base_seed & _MASK64) ^ splitmix64(trial)


class SeededRng:
    """Reproducible bit source. Single owner; not thread safe."""

    def __init__(self, seed: int = 0):
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Philox(key=seed)

    def words(self, n: int) -> np.ndarray:
        return np.asarray(self._gen.random_raw(n), dtype=np.uint64)

    def bits(self, n: int) -> np.ndarray:
        """``n`` uniform bits, LSB-first out of successive 64-bit words."""
        raw = self.words(-(-n // 64)).astype("<u8")
        return np.unpackbits(raw.view(np.uint8), bitorder="little")[:n]

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) with 53 bits of resolution."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def signs(self, n: int) -> np.ndarray:
        return self.bits(n).astype(np.int64) * 2 - 1

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """``n`` integers in ``[low, high)``; per-value bias is at most ``span * 2**-53``."""
        span = high - low
        if span < 1:
            raise ValueError("empty range")
        return (self.uniform(n) * span).astype(np.int64) + low


def generate_key(length: int, rng: SeededRng) -> np.ndarray:
    if length < 1:
        raise ValueError(f"key length must be >= 1, got {length}")
    return rng.bits(length)


def corrupt(bits: np.ndarray, qber: float, rng: SeededRng) -> np.ndarray:
    """Flip each bit independently with probability ``qber``.

    One uniform is consumed per bit whatever the rate, so for a fixed seed
    the errors at a lower rate are a subset of those at a higher one.
    """
    if not 0.0 <= qber <= 1.0:
        raise ValueError(f"qber must lie in [0, 1], got {qber}")
    bits = np.asarray(bits, dtype=np.uint8)
    flips = rng.uniform(bits.size) < qber
    return bits ^ flips.astype(np.uint8)


def make_frame(length: int, qber: float, rng: SeededRng) -> tuple[np.ndarray, np.ndarray]:
    """Alice's raw key and Bob's noisy copy of it."""
    alice = generate_key(length, rng)
    return alice, corrupt(alice, qber, rng)
