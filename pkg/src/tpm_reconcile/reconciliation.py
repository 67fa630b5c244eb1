"""Two-party reconciliation: challenge, compare, train, repeat until identical.

Alice owns every random input vector. An *iteration* is one challenge plus
the two output bits; a *round* is the run of iterations ending in the first
matching pair (which triggers training on both sides). In simulation mode
the end-of-round identity test is an out-of-band weight comparison and its
cost is not counted as leakage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import SeededRng
from .codec import bits_to_str, decode, derive_halfwidth, encode, sequence_length
from .metrics import entropy_loss
from .tpm import Evaluation, TpmParams, evaluate, train, weights_equal

DEFAULT_MAX_ITERATIONS = 300


@dataclass(frozen=True)
class SessionConfig:
    params: TpmParams
    b: int
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    record_transcript: bool = False

    def __post_init__(self):
        if derive_halfwidth(self.b) != self.params.L:
            raise ValueError(f"block size {self.b} implies L={derive_halfwidth(self.b)}, params say L={self.params.L}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    @property
    def key_length(self) -> int:
        return sequence_length(self.b, self.params.K, self.params.N)


@dataclass(frozen=True, eq=False)
class TranscriptEntry:
    round_index: int
    iteration_index: int
    input: np.ndarray
    tau_alice: int
    tau_bob: int
    matched: bool
    trained: bool

    def __eq__(self, other):
        if not isinstance(other, TranscriptEntry):
            return NotImplemented
        return (
            (self.round_index, self.iteration_index, self.tau_alice, self.tau_bob, self.matched, self.trained)
            == (other.round_index, other.iteration_index, other.tau_alice, other.tau_bob, other.matched, other.trained)
            and np.array_equal(self.input, other.input)
        )

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "iteration_index": self.iteration_index,
            "input": self.input.tolist(),
            "tau_alice": self.tau_alice,
            "tau_bob": self.tau_bob,
            "matched": self.matched,
            "trained": self.trained,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TranscriptEntry":
        x = np.asarray(d["input"], dtype=np.int64)
        if x.ndim != 2 or not np.isin(x, (-1, 1)).all():
            raise ValueError("transcript input must be a 2-D array of -1/+1")
        return cls(
            round_index=int(d["round_index"]),
            iteration_index=int(d["iteration_index"]),
            input=x,
            tau_alice=int(d["tau_alice"]),
            tau_bob=int(d["tau_bob"]),
            matched=bool(d["matched"]),
            trained=bool(d["trained"]),
        )


@dataclass(frozen=True)
class ReconciliationReport:
    """Outcome of one frame.

    ``alice_bits``/``bob_bits`` are ASCII '0'/'1' strings. A networked peer
    only knows its own key, so it leaves the other side's field ``None``
    unless the session succeeded.
    """

    success: bool
    rounds: int
    total_iterations: int
    entropy_loss: float
    alice_bits: Optional[str]
    bob_bits: Optional[str]
    transcript: Optional[tuple] = None

    def to_dict(self, include_transcript: bool = True) -> dict:
        d = {
            "success": self.success,
            "rounds": self.rounds,
            "total_iterations": self.total_iterations,
            "entropy_loss": self.entropy_loss,
            "alice_bits": self.alice_bits,
            "bob_bits": self.bob_bits,
        }
        if include_transcript and self.transcript is not None:
            d["transcript"] = [e.to_dict() for e in self.transcript]
        return d


class Party:
    """One side's mutable TPM state during a session."""

    def __init__(self, key, config: SessionConfig):
        p = config.params
        self.config = config
        self.weights = encode(key, config.b, p.K, p.N)

    @property
    def params(self) -> TpmParams:
        return self.config.params

    def evaluate(self, x: np.ndarray) -> Evaluation:
        return evaluate(self.weights, x)

    def train(self, x: np.ndarray, ev: Evaluation) -> None:
        self.weights = train(self.weights, x, ev, self.params)

    def bits(self) -> str:
        return bits_to_str(decode(self.weights, self.config.b))


def init_session(alice_key, bob_key, config: SessionConfig) -> tuple[Party, Party]:
    n = config.key_length
    for who, key in (("alice", alice_key), ("bob", bob_key)):
        if len(key) != n:
            raise ValueError(f"{who}'s key has {len(key)} bits, expected b*K*N = {n}")
    return Party(alice_key, config), Party(bob_key, config)


def draw_input(params: TpmParams, rng: SeededRng) -> np.ndarray:
    return rng.signs(params.K * params.N).reshape(params.K, params.N)


def run_iteration(alice: Party, bob: Party, rng: SeededRng, round_index: int, iteration_index: int) -> TranscriptEntry:
    x = draw_input(alice.params, rng)
    ev_a = alice.evaluate(x)
    ev_b = bob.evaluate(x)
    matched = ev_a.output == ev_b.output
    if matched:
        alice.train(x, ev_a)
        bob.train(x, ev_b)
    return TranscriptEntry(round_index, iteration_index, x, ev_a.output, ev_b.output, matched, matched)


def run_round(
    alice: Party, bob: Party, rng: SeededRng, budget: int, round_index: int, first_iteration: int
) -> list[TranscriptEntry]:
    """Iterate until the outputs match once or ``budget`` iterations are spent."""
    if budget < 1:
        raise ValueError("round budget must be >= 1")
    entries = []
    for offset in range(budget):
        entry = run_iteration(alice, bob, rng, round_index, first_iteration + offset)
        entries.append(entry)
        if entry.trained:
            break
    return entries


def reconcile(alice_key, bob_key, config: SessionConfig, rng: SeededRng) -> ReconciliationReport:
    alice, bob = init_session(alice_key, bob_key, config)
    transcript = [] if config.record_transcript else None
    iterations = rounds = 0
    success = weights_equal(alice.weights, bob.weights)
    while not success and iterations < config.max_iterations:
        rounds += 1
        entries = run_round(alice, bob, rng, config.max_iterations - iterations, rounds, iterations + 1)
        iterations += len(entries)
        if transcript is not None:
            transcript.extend(entries)
        if entries[-1].trained:
            success = weights_equal(alice.weights, bob.weights)
    a_bits, b_bits = alice.bits(), bob.bits()
    return ReconciliationReport(
        success=success,
        rounds=rounds,
        total_iterations=iterations,
        entropy_loss=entropy_loss(iterations, config.params.L),
        alice_bits=a_bits,
        bob_bits=b_bits,
        transcript=tuple(transcript) if transcript is not None else None,
    )
