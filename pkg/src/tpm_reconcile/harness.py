"""Monte-Carlo sweeps over QBER (fixed block size) and over the weight range L.

Trial ``t`` at every grid point is seeded with ``trial_seed(base_seed, t)``,
so results never depend on scheduling, and points share common random
numbers: for a fixed trial the same raw key and the same per-bit noise
draws are reused, which keeps trends across the grid low-variance.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

from . import __version__
from .channel import SeededRng, make_frame, trial_seed
from .codec import block_bits_for, derive_halfwidth
from .metrics import FIELDS, SweepPoint, aggregate
from .reconciliation import DEFAULT_MAX_ITERATIONS, SessionConfig, reconcile
from .tpm import Rule, TpmParams

QBER_SWEEP = "qber"
RANGE_SWEEP = "range"

DEFAULT_QBER_GRID = tuple(round(0.005 * k, 3) for k in range(1, 31))
DEFAULT_RANGE_GRID = (8, 16, 32, 64, 128, 256, 512)
THREADS_ENV = "TPM_RECONCILE_THREADS"


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    grid: tuple
    K: int = 10
    N: int = 15
    b: int = 4
    qber: float = 0.15
    trials: int = 1000
    seed: int = 0
    rule: Rule = Rule.HEBBIAN
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.kind not in (QBER_SWEEP, RANGE_SWEEP):
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if not self.grid:
            raise ValueError("sweep grid is empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.K, self.N) < 1:
            raise ValueError("K and N must be >= 1")
        if self.kind == QBER_SWEEP:
            derive_halfwidth(self.b)
            if any(not 0.0 <= q <= 1.0 for q in self.grid):
                raise ValueError("QBER grid values must lie in [0, 1]")
        else:
            if not 0.0 <= self.qber <= 1.0:
                raise ValueError("qber must lie in [0, 1]")
            for L in self.grid:
                if isinstance(L, float) and not L.is_integer():
                    raise ValueError(f"grid value {L} is not a power of two")
                if int(L) < 2:
                    raise ValueError(f"grid value {L} must be a power of two >= 2")
                block_bits_for(int(L))
            object.__setattr__(self, "grid", tuple(int(L) for L in self.grid))

    def echo(self) -> dict:
        d = {"kind": self.kind, "K": self.K, "N": self.N}
        if self.kind == QBER_SWEEP:
            d["b"] = self.b
        else:
            d["qber"] = self.qber
        d.update(
            grid=list(self.grid),
            trials=self.trials,
            seed=self.seed,
            rule=self.rule.value,
            max_iterations=self.max_iterations,
            version=__version__,
        )
        return d

    @classmethod
    def from_echo(cls, d: dict) -> "SweepSpec":
        kw = {k: v for k, v in d.items() if k != "version"}
        return cls(**kw)


@dataclass(frozen=True)
class SweepTable:
    spec: SweepSpec
    rows: tuple
    version: str = __version__


def _point_configs(spec: SweepSpec) -> list[tuple[float, float, SessionConfig]]:
    """(independent value, qber, session config) per grid point."""
    points = []
    for value in spec.grid:
        if spec.kind == QBER_SWEEP:
            b, qber = spec.b, value
        else:
            b, qber = block_bits_for(value), spec.qber
        params = TpmParams(spec.K, spec.N, derive_halfwidth(b), spec.rule)
        points.append((value, qber, SessionConfig(params, b, spec.max_iterations)))
    return points


def run_trial(config: SessionConfig, qber: float, base_seed: int, trial: int):
    rng = SeededRng(trial_seed(base_seed, trial))
    alice, bob = make_frame(config.key_length, qber, rng)
    return reconcile(alice, bob, config, rng)


def _run_point(args) -> SweepPoint:
    value, qber, config, base_seed, trials = args
    reports = [run_trial(config, qber, base_seed, t) for t in range(trials)]
    return aggregate(reports, value)


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: explicit argument, else ``TPM_RECONCILE_THREADS``, else 1. 0 means auto."""
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers < 0:
        raise ValueError("worker count must be >= 0")
    return workers or (os.cpu_count() or 1)


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepTable:
    jobs = [(v, q, c, spec.seed, spec.trials) for v, q, c in _point_configs(spec)]
    n = resolve_workers(workers)
    if n == 1 or len(jobs) == 1:
        rows = [_run_point(j) for j in jobs]
    else:
        # map() yields in submission order, so the merge is scheduling-independent
        with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
            rows = list(pool.map(_run_point, jobs))
    return SweepTable(spec=spec, rows=tuple(rows))


def run_qber_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepTable:
    if spec.kind != QBER_SWEEP:
        raise ValueError("run_qber_sweep needs a QBER sweep spec")
    return run_sweep(spec, workers)


def run_range_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepTable:
    if spec.kind != RANGE_SWEEP:
        raise ValueError("run_range_sweep needs a range sweep spec")
    return run_sweep(spec, workers)


def table_to_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for row in table.rows:
        writer.writerow([repr(getattr(row, f)) for f in FIELDS])
    return buf.getvalue()


def table_to_json(table: SweepTable) -> str:
    doc = {"spec": table.spec.echo(), "rows": [asdict(r) for r in table.rows]}
    return json.dumps(doc, indent=2) + "\n"


def table_from_json(text: str) -> SweepTable:
    doc = json.loads(text)
    spec = SweepSpec.from_echo(doc["spec"])
    rows = tuple(SweepPoint(**r) for r in doc["rows"])
    return SweepTable(spec=spec, rows=rows, version=doc["spec"].get("version", __version__))


def emit_table(table: SweepTable, fmt: str, destination: Union[str, Path, io.TextIOBase]) -> None:
    """Write ``table`` as ``"csv"`` or ``"json"`` to a path or open text stream."""
    if fmt == "csv":
        text = table_to_csv(table)
    elif fmt == "json":
        text = table_to_json(table)
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        destination.write(text)
