"""Alice and Bob as separate endpoints over a TCP byte stream.

The exchange is strictly half-duplex and mirrors :func:`reconcile` step for
step, so a networked session reproduces the in-process report exactly::

    alice -> HELLO        bob -> HELLO
    alice -> SYNC_PROBE   bob -> SYNC_ACK          (round 0: already equal?)
    repeat until equal or the iteration cap:
        alice -> CHALLENGE   bob -> RESPONSE       (until outputs match)
        alice -> SYNC_PROBE  bob -> SYNC_ACK       (after each trained round)
    alice -> DONE
"""

from __future__ import annotations

import logging
import socket
import time
from typing import Callable, Optional

from .channel import SeededRng
from .metrics import entropy_loss
from .reconciliation import Party, ReconciliationReport, SessionConfig, TranscriptEntry, draw_input
from .wire import (
    HEADER,
    Challenge,
    Done,
    Hello,
    Message,
    ProtocolError,
    Response,
    SyncAck,
    SyncProbe,
    decode_payload,
    parse_header,
    serialize,
    weight_digest,
)

log = logging.getLogger(__name__)

MAX_WIRE_HALFWIDTH = 1 << 15


class TransportError(Exception):
    """Connection could not be made or was lost mid-session."""


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit() or not 0 <= int(port) < 65536:
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host.strip("[]") or "127.0.0.1", int(port)


class Channel:
    """Framed message I/O over a connected socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, msg: Message) -> None:
        try:
            self.sock.sendall(serialize(msg))
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def _read_exact(self, n: int) -> bytes:
        chunks, remaining = [], n
        while remaining:
            try:
                chunk = self.sock.recv(remaining)
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            if not chunk:
                raise TransportError("peer closed the connection")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def recv(self) -> Message:
        tag, length = parse_header(self._read_exact(HEADER.size))
        return decode_payload(tag, self._read_exact(length))

    def expect(self, kind: type):
        msg = self.recv()
        if not isinstance(msg, kind):
            raise ProtocolError(f"expected {kind.__name__}, got {type(msg).__name__}")
        return msg

    def close(self) -> None:
        self.sock.close()


def connect(endpoint: str, timeout: float = 30.0) -> Channel:
    """Connect, retrying until ``timeout`` while the listener comes up."""
    addr = parse_endpoint(endpoint)
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection(addr, timeout=timeout)
            break
        except OSError as exc:
            if time.monotonic() >= deadline:
                raise TransportError(f"could not connect to {endpoint}: {exc}") from exc
            time.sleep(0.05)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return Channel(sock)


def accept(endpoint: str, timeout: float = 30.0, on_listening: Optional[Callable] = None) -> Channel:
    """Listen on ``endpoint`` and accept exactly one peer.

    ``on_listening`` receives the bound ``(host, port)``; useful with port 0.
    """
    host, port = parse_endpoint(endpoint)
    try:
        with socket.create_server((host, port)) as server:
            server.settimeout(timeout)
            if on_listening is not None:
                on_listening(server.getsockname()[:2])
            sock, _ = server.accept()
    except OSError as exc:
        raise TransportError(f"could not accept on {endpoint}: {exc}") from exc
    sock.settimeout(timeout)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return Channel(sock)


def _hello(role: str, config: SessionConfig, session_id: int) -> Hello:
    p = config.params
    return Hello(role, p.K, p.N, p.L, config.b, p.rule, config.max_iterations, session_id)


def _check_hello(mine: Hello, theirs: Hello) -> None:
    if theirs.role == mine.role:
        raise ProtocolError(f"both peers claim role {mine.role}")
    if theirs.agreement() != mine.agreement():
        raise ProtocolError(f"parameter mismatch: local {mine.agreement()} vs remote {theirs.agreement()}")


def _report(config: SessionConfig, own_role: str, own_bits: str, success: bool, rounds: int, iterations: int, transcript):
    other = own_bits if success else None
    alice_bits, bob_bits = (own_bits, other) if own_role == "alice" else (other, own_bits)
    return ReconciliationReport(
        success=success,
        rounds=rounds,
        total_iterations=iterations,
        entropy_loss=entropy_loss(iterations, config.params.L),
        alice_bits=alice_bits,
        bob_bits=bob_bits,
        transcript=tuple(transcript) if transcript is not None else None,
    )


def run_alice(ch: Channel, config: SessionConfig, key, rng: SeededRng, session_id: int = 0) -> ReconciliationReport:
    mine = _hello("alice", config, session_id)
    ch.send(mine)
    _check_hello(mine, ch.expect(Hello))

    alice = Party(key, config)
    transcript = [] if config.record_transcript else None

    def probe(round_index: int) -> bool:
        ch.send(SyncProbe(round_index, weight_digest(alice.weights)))
        ack = ch.expect(SyncAck)
        if ack.round_index != round_index:
            raise ProtocolError(f"SYNC_ACK for round {ack.round_index}, expected {round_index}")
        return ack.equal

    iterations = rounds = 0
    success = probe(0)
    while not success and iterations < config.max_iterations:
        rounds += 1
        matched = False
        while not matched and iterations < config.max_iterations:
            iterations += 1
            x = draw_input(config.params, rng)
            ev = alice.evaluate(x)
            ch.send(Challenge(iterations, ev.output, x))
            resp = ch.expect(Response)
            if resp.iteration_index != iterations:
                raise ProtocolError(f"RESPONSE for iteration {resp.iteration_index}, expected {iterations}")
            matched = resp.tau_bob == ev.output
            if matched:
                alice.train(x, ev)
            if transcript is not None:
                transcript.append(TranscriptEntry(rounds, iterations, x, ev.output, resp.tau_bob, matched, matched))
        if matched:
            success = probe(rounds)
    ch.send(Done(success, iterations, rounds))
    log.info("alice done: success=%s rounds=%d iterations=%d", success, rounds, iterations)
    return _report(config, "alice", alice.bits(), success, rounds, iterations, transcript)


def run_bob(ch: Channel, config: SessionConfig, key, session_id: int = 0) -> ReconciliationReport:
    mine = _hello("bob", config, session_id)
    theirs = ch.expect(Hello)
    ch.send(mine)
    _check_hello(mine, theirs)

    bob = Party(key, config)
    transcript = [] if config.record_transcript else None
    iterations = rounds = 0
    last_trained = True
    last_equal = False
    while True:
        msg = ch.recv()
        if isinstance(msg, SyncProbe):
            last_equal = msg.weight_digest == weight_digest(bob.weights)
            ch.send(SyncAck(msg.round_index, last_equal))
        elif isinstance(msg, Challenge):
            if msg.iteration_index != iterations + 1 or msg.iteration_index > config.max_iterations:
                raise ProtocolError(f"unexpected CHALLENGE index {msg.iteration_index}")
            if msg.input.shape != config.params.shape:
                raise ProtocolError(f"CHALLENGE input shape {msg.input.shape} != {config.params.shape}")
            iterations += 1
            if last_trained:
                rounds += 1
            ev = bob.evaluate(msg.input)
            ch.send(Response(iterations, ev.output))
            last_trained = ev.output == msg.tau_alice
            if last_trained:
                bob.train(msg.input, ev)
            if transcript is not None:
                transcript.append(
                    TranscriptEntry(rounds, iterations, msg.input, msg.tau_alice, ev.output, last_trained, last_trained)
                )
        elif isinstance(msg, Done):
            if (msg.total_iterations, msg.rounds) != (iterations, rounds) or msg.success != last_equal:
                raise ProtocolError(
                    f"DONE {msg} disagrees with local state (iterations={iterations}, rounds={rounds}, equal={last_equal})"
                )
            break
        else:
            raise ProtocolError(f"unexpected {type(msg).__name__} from alice")
    log.info("bob done: success=%s rounds=%d iterations=%d", last_equal, rounds, iterations)
    return _report(config, "bob", bob.bits(), last_equal, rounds, iterations, transcript)


def run_peer(
    role: str,
    endpoint: str,
    config: SessionConfig,
    key,
    rng: Optional[SeededRng] = None,
    *,
    listen: bool = False,
    session_id: int = 0,
    timeout: float = 30.0,
    on_listening: Optional[Callable] = None,
) -> ReconciliationReport:
    """Run one side of a networked session and return its report.

    Alice needs ``rng`` for the challenges; Bob draws no randomness.
    """
    if role not in ("alice", "bob"):
        raise ValueError(f"role must be 'alice' or 'bob', got {role!r}")
    if role == "alice" and rng is None:
        raise ValueError("alice needs an rng to draw challenges")
    if config.params.L > MAX_WIRE_HALFWIDTH:
        raise ValueError(f"wire mode supports L <= {MAX_WIRE_HALFWIDTH}")
    if len(key) != config.key_length:
        raise ValueError(f"key has {len(key)} bits, expected {config.key_length}")
    ch = accept(endpoint, timeout, on_listening) if listen else connect(endpoint, timeout)
    try:
        if role == "alice":
            return run_alice(ch, config, key, rng, session_id)
        return run_bob(ch, config, key, session_id)
    finally:
        ch.close()
