"""Passive eavesdropper replaying a public transcript with her own TPM.

Eve sees every challenge and both output bits. She starts from random
weights and uses the naive strategy: on each matched iteration she trains,
with the exact same update as the legitimate parties, whenever her own
output agrees with the public one.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import SeededRng
from .tpm import TpmParams, evaluate, train


@dataclass(frozen=True)
class EveReport:
    synchronized: bool
    overlap: float
    iterations_observed: int

    def to_dict(self) -> dict:
        return asdict(self)


def random_weights(params: TpmParams, rng: SeededRng) -> np.ndarray:
    return rng.integers(-params.L, params.L, params.K * params.N).reshape(params.shape)


def passive_attack(
    transcript: Sequence,
    params: TpmParams,
    eve_seed: int,
    target: np.ndarray,
    initial: Optional[np.ndarray] = None,
) -> EveReport:
    """Replay ``transcript`` and compare Eve's final weights with ``target``.

    ``target`` is Alice's final weight matrix. ``initial`` overrides Eve's
    random start (white-box testing only). A zero-iteration transcript is
    valid and leaves Eve at her initial draw.
    """
    if transcript is None:
        raise ValueError("no transcript: the session was run without record_transcript")
    target = np.asarray(target)
    if target.shape != params.shape:
        raise ValueError(f"target shape {target.shape} does not match {params.shape}")
    if initial is None:
        eve = random_weights(params, SeededRng(eve_seed))
    else:
        eve = np.array(initial, dtype=np.int64)
        if eve.shape != params.shape:
            raise ValueError(f"initial shape {eve.shape} does not match {params.shape}")
    for entry in transcript:
        if not entry.matched:
            continue
        ev = evaluate(eve, entry.input)
        if ev.output == entry.tau_alice:
            eve = train(eve, entry.input, ev, params)
    matches = np.count_nonzero(eve == target)
    return EveReport(
        synchronized=bool(matches == target.size),
        overlap=matches / target.size,
        iterations_observed=len(transcript),
    )
