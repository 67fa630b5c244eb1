"""Tree Parity Machine: bounded integer weights, forward pass, learning rules.

Weights and inputs are plain ``numpy`` integer arrays of shape ``(K, N)``.
Weights live in the asymmetric range ``[-L, L-1]`` so that every weight
matrix can be written back to a bit string by the codec.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Keeps local fields far from int64 overflow for any realistic K*N.
MAX_HALFWIDTH = 2**20


class Rule(str, Enum):
    HEBBIAN = "hebbian"
    ANTI_HEBBIAN = "anti_hebbian"
    RANDOM_WALK = "random_walk"


@dataclass(frozen=True)
class TpmParams:
    """Network shape and learning rule agreed by both parties in advance."""

    K: int
    N: int
    L: int
    rule: Rule = Rule.HEBBIAN

    def __post_init__(self):
        for name in ("K", "N", "L"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.L > MAX_HALFWIDTH:
            raise ValueError(f"L must not exceed {MAX_HALFWIDTH}, got {self.L}")
        object.__setattr__(self, "rule", Rule(self.rule))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.K, self.N)


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Hidden-unit outputs (sigma) and the network output (tau)."""

    hidden: np.ndarray
    output: int


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def clip(value, L: int):
    """Saturate ``value`` (scalar or array) into ``[-L, L-1]``."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if isinstance(value, np.ndarray):
        return np.clip(value, -L, L - 1)
    return max(-L, min(L - 1, value))


def evaluate(weights: np.ndarray, x: np.ndarray) -> Evaluation:
    """Forward pass. A zero local field counts as -1."""
    _check_shapes(weights, x)
    fields = np.einsum("kn,kn->k", weights, x)
    hidden = np.where(fields > 0, 1, -1).astype(np.int64)
    # parity of the -1 count avoids a K-fold product
    output = -1 if np.count_nonzero(hidden < 0) % 2 else 1
    return Evaluation(hidden=hidden, output=output)


def train(weights: np.ndarray, x: np.ndarray, ev: Evaluation, params: TpmParams) -> np.ndarray:
    """Apply one learning step and return a new weight matrix.

    Only hidden units whose output agrees with the network output move.
    The caller is responsible for checking that both parties' outputs agreed.
    """
    _check_shapes(weights, x)
    if ev.hidden.shape != (weights.shape[0],):
        raise ValueError(f"evaluation has {ev.hidden.shape[0]} hidden units, weights have {weights.shape[0]}")
    active = (ev.hidden == ev.output)[:, None]
    if params.rule is Rule.HEBBIAN:
        step = x * ev.hidden[:, None]
    elif params.rule is Rule.ANTI_HEBBIAN:
        step = -x * ev.hidden[:, None]
    else:
        step = x
    return np.clip(weights + np.where(active, step, 0), -params.L, params.L - 1)


def weights_equal(a: np.ndarray, b: np.ndarray) -> bool:
    _check_shapes(a, b)
    return bool(np.array_equal(a, b))
