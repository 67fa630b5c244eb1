"""Efficiency metrics: frame error rate, entropy loss and per-point aggregates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence


def entropy_loss(i: int, L: int) -> float:
    """Leakage of ``i`` public output bits in units of ``(2L+1)``-ary symbols.

    ``log_{2L+1}(2**i)`` rewritten as ``i / log2(2L+1)``.
    """
    if i < 0:
        raise ValueError(f"iteration count must be >= 0, got {i}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    return i / math.log2(2 * L + 1)


def frame_error_rate(failed: int, total: int) -> float:
    if total < 1:
        raise ValueError("frame error rate needs at least one frame")
    if not 0 <= failed <= total:
        raise ValueError(f"failed count {failed} outside [0, {total}]")
    return failed / total


@dataclass(frozen=True)
class SweepPoint:
    """One row of a sweep table.

    Failed frames enter every mean with their capped iteration count.
    ``std_iterations`` is the population standard deviation.
    """

    independent_value: float
    trials: int
    fer: float
    mean_iterations: float
    mean_rounds: float
    mean_entropy_loss: float
    std_iterations: float

    def as_dict(self) -> dict:
        return asdict(self)


FIELDS = tuple(SweepPoint.__dataclass_fields__)


def aggregate(reports: Sequence, independent_value: float) -> SweepPoint:
    """Reduce reconciliation reports to one :class:`SweepPoint`.

    Integer sums and ``math.fsum`` keep the result independent of report order.
    """
    n = len(reports)
    if n == 0:
        raise ValueError("cannot aggregate an empty set of reports")
    iters = [r.total_iterations for r in reports]
    s1 = sum(iters)
    s2 = sum(i * i for i in iters)
    # exact integer variance numerator: n*sum(i^2) - (sum i)^2
    var = (n * s2 - s1 * s1) / (n * n)
    return SweepPoint(
        independent_value=independent_value,
        trials=n,
        fer=frame_error_rate(sum(not r.success for r in reports), n),
        mean_iterations=s1 / n,
        mean_rounds=sum(r.rounds for r in reports) / n,
        mean_entropy_loss=math.fsum(r.entropy_loss for r in reports) / n,
        std_iterations=math.sqrt(var),
    )
