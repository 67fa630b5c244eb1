"""Reversible mapping between key bit strings and TPM weight matrices.

The key is cut into ``b``-bit blocks, each read MSB-first as an unsigned
integer and shifted down by ``2**(b-1)``. Block ``k*N + j`` becomes weight
``[k][j]`` (row-major), so every weight lands in ``[-L, L-1]`` with
``L = 2**(b-1)``.

Bit strings are ``numpy.uint8`` arrays of 0/1. ``bits_from_str`` and
``bits_to_str`` convert to and from ASCII ``'0'``/``'1'``.
"""

from __future__ import annotations

import numpy as np

MAX_BLOCK_BITS = 21


def derive_halfwidth(b: int) -> int:
    """Weight half-width for ``b``-bit blocks: ``2**(b-1)``."""
    if not 1 <= b <= MAX_BLOCK_BITS:
        raise ValueError(f"block size must be in [1, {MAX_BLOCK_BITS}], got {b}")
    return 1 << (b - 1)


def block_bits_for(L: int) -> int:
    """Inverse of :func:`derive_halfwidth`; ``L`` must be a power of two."""
    if L < 1 or L & (L - 1):
        raise ValueError(f"L must be a power of two, got {L}")
    b = L.bit_length()
    derive_halfwidth(b)
    return b


def sequence_length(b: int, K: int, N: int) -> int:
    if min(b, K, N) < 1:
        raise ValueError("b, K and N must all be >= 1")
    return b * K * N


def as_bits(bits) -> np.ndarray:
    """Coerce a str / sequence / array of 0-1 symbols to a uint8 array."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError("bit string may only contain '0' and '1'")
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError("bit string must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit string may only contain 0 and 1")
    return arr.astype(np.uint8)


def bits_from_str(text: str) -> np.ndarray:
    return as_bits(text)


def bits_to_str(bits) -> str:
    return (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def _place_values(b: int) -> np.ndarray:
    return (1 << np.arange(b - 1, -1, -1)).astype(np.int64)


def encode(bits, b: int, K: int, N: int) -> np.ndarray:
    """Turn a ``b*K*N``-bit key into a ``(K, N)`` weight matrix."""
    arr = as_bits(bits)
    L = derive_halfwidth(b)
    expected = sequence_length(b, K, N)
    if arr.size != expected:
        raise ValueError(f"key has {arr.size} bits, expected b*K*N = {expected}")
    values = arr.reshape(K * N, b).astype(np.int64) @ _place_values(b)
    return (values - L).reshape(K, N)


def decode(weights: np.ndarray, b: int) -> np.ndarray:
    """Exact inverse of :func:`encode`."""
    L = derive_halfwidth(b)
    w = np.asarray(weights, dtype=np.int64)
    if w.size and (w.min() < -L or w.max() > L - 1):
        raise ValueError(f"weights outside the representable range [{-L}, {L - 1}]")
    shifted = (w.reshape(-1) + L)[:, None]
    return ((shifted >> np.arange(b - 1, -1, -1)) & 1).astype(np.uint8).reshape(-1)
