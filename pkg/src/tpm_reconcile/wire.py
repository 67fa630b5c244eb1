"""Binary framing for the classical channel.

Every frame is::

    magic   4 bytes  b"TPM1" (0x54 0x50 0x4D 0x31)
    tag     1 byte   message type
    length  4 bytes  payload length, little-endian uint32
    payload          message body, integers little-endian

Payload layouts (``struct`` notation, all ``<``):

    HELLO       H version, B role, I K, I N, I L, B b, B rule, I max_iterations, Q session_id
    CHALLENGE   I iteration_index, b tau_alice, H rows, H cols, packed input
    RESPONSE    I iteration_index, b tau_bob
    SYNC_PROBE  I round_index, 32s weight_digest
    SYNC_ACK    I round_index, B equal
    DONE        B success, I total_iterations, I rounds

The CHALLENGE input is packed one bit per entry (1 means +1), row-major,
MSB-first within each byte, zero-padded to a byte boundary.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Union

import numpy as np

from .tpm import Rule

MAGIC = b"TPM1"
PROTOCOL_VERSION = 1
MAX_PAYLOAD = 1 << 24
HEADER = struct.Struct("<4sBI")

TAG_HELLO = 1
TAG_CHALLENGE = 2
TAG_RESPONSE = 3
TAG_SYNC_PROBE = 4
TAG_SYNC_ACK = 5
TAG_DONE = 6

ROLES = ("alice", "bob")
RULES = (Rule.HEBBIAN, Rule.ANTI_HEBBIAN, Rule.RANDOM_WALK)

_HELLO = struct.Struct("<HBIIIBBIQ")
_CHALLENGE_HEAD = struct.Struct("<IbHH")
_RESPONSE = struct.Struct("<Ib")
_SYNC_PROBE = struct.Struct("<I32s")
_SYNC_ACK = struct.Struct("<IB")
_DONE = struct.Struct("<BII")


class ProtocolError(Exception):
    """Malformed frame or a peer that broke the message contract."""


@dataclass(frozen=True)
class Hello:
    role: str
    K: int
    N: int
    L: int
    b: int
    rule: Rule
    max_iterations: int
    session_id: int = 0
    protocol_version: int = PROTOCOL_VERSION

    def agreement(self) -> tuple:
        """The fields both peers must share."""
        return (self.protocol_version, self.K, self.N, self.L, self.b, Rule(self.rule), self.max_iterations, self.session_id)


@dataclass(frozen=True, eq=False)
class Challenge:
    iteration_index: int
    tau_alice: int
    input: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Challenge):
            return NotImplemented
        return (
            self.iteration_index == other.iteration_index
            and self.tau_alice == other.tau_alice
            and np.array_equal(self.input, other.input)
        )


@dataclass(frozen=True)
class Response:
    iteration_index: int
    tau_bob: int


@dataclass(frozen=True)
class SyncProbe:
    round_index: int
    weight_digest: bytes


@dataclass(frozen=True)
class SyncAck:
    round_index: int
    equal: bool


@dataclass(frozen=True)
class Done:
    success: bool
    total_iterations: int
    rounds: int


Message = Union[Hello, Challenge, Response, SyncProbe, SyncAck, Done]


def weight_digest(weights: np.ndarray) -> bytes:
    """SHA-256 over the weights as row-major little-endian int16."""
    w = np.asarray(weights)
    if w.size and (w.min() < -(1 << 15) or w.max() >= 1 << 15):
        raise ValueError("weights do not fit in int16")
    return hashlib.sha256(w.astype("<i2").tobytes(order="C")).digest()


def pack_input(x: np.ndarray) -> bytes:
    return np.packbits((np.asarray(x).reshape(-1) > 0).astype(np.uint8)).tobytes()


def unpack_input(data: bytes, rows: int, cols: int) -> np.ndarray:
    n = rows * cols
    if len(data) != -(-n // 8):
        raise ProtocolError(f"packed input has {len(data)} bytes, expected {-(-n // 8)} for {rows}x{cols}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n]
    return (bits.astype(np.int64) * 2 - 1).reshape(rows, cols)


def _tau(value: int) -> int:
    if value not in (-1, 1):
        raise ValueError(f"output bit must be -1 or +1, got {value}")
    return value


def _payload(msg: Message) -> tuple[int, bytes]:
    if isinstance(msg, Hello):
        return TAG_HELLO, _HELLO.pack(
            msg.protocol_version, ROLES.index(msg.role), msg.K, msg.N, msg.L,
            msg.b, RULES.index(Rule(msg.rule)), msg.max_iterations, msg.session_id,
        )
    if isinstance(msg, Challenge):
        rows, cols = np.shape(msg.input)
        if not np.isin(msg.input, (-1, 1)).all():
            raise ValueError("challenge input entries must be -1 or +1")
        head = _CHALLENGE_HEAD.pack(msg.iteration_index, _tau(msg.tau_alice), rows, cols)
        return TAG_CHALLENGE, head + pack_input(msg.input)
    if isinstance(msg, Response):
        return TAG_RESPONSE, _RESPONSE.pack(msg.iteration_index, _tau(msg.tau_bob))
    if isinstance(msg, SyncProbe):
        if len(msg.weight_digest) != 32:
            raise ValueError("weight digest must be 32 bytes")
        return TAG_SYNC_PROBE, _SYNC_PROBE.pack(msg.round_index, msg.weight_digest)
    if isinstance(msg, SyncAck):
        return TAG_SYNC_ACK, _SYNC_ACK.pack(msg.round_index, int(msg.equal))
    if isinstance(msg, Done):
        return TAG_DONE, _DONE.pack(int(msg.success), msg.total_iterations, msg.rounds)
    raise TypeError(f"not a protocol message: {msg!r}")


def serialize(msg: Message) -> bytes:
    try:
        tag, payload = _payload(msg)
    except struct.error as exc:
        raise ValueError(f"field out of range in {type(msg).__name__}: {exc}") from None
    if len(payload) > MAX_PAYLOAD:
        raise ValueError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(MAGIC, tag, len(payload)) + payload


def parse_header(header: bytes) -> tuple[int, int]:
    """Validate a 9-byte header and return ``(tag, payload_length)``."""
    if len(header) != HEADER.size:
        raise ProtocolError("truncated frame header")
    magic, tag, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds {MAX_PAYLOAD}")
    return tag, length


def _exact(fmt: struct.Struct, payload: bytes, name: str) -> tuple:
    if len(payload) != fmt.size:
        raise ProtocolError(f"{name} payload has {len(payload)} bytes, expected {fmt.size}")
    return fmt.unpack(payload)


def _flag(value: int, name: str) -> bool:
    if value not in (0, 1):
        raise ProtocolError(f"{name} flag must be 0 or 1, got {value}")
    return bool(value)


def decode_payload(tag: int, payload: bytes) -> Message:
    if tag == TAG_HELLO:
        ver, role, K, N, L, b, rule, max_it, sid = _exact(_HELLO, payload, "HELLO")
        if role >= len(ROLES) or rule >= len(RULES):
            raise ProtocolError("HELLO carries an unknown role or rule code")
        return Hello(ROLES[role], K, N, L, b, RULES[rule], max_it, sid, ver)
    if tag == TAG_CHALLENGE:
        if len(payload) < _CHALLENGE_HEAD.size:
            raise ProtocolError("truncated CHALLENGE payload")
        idx, tau, rows, cols = _CHALLENGE_HEAD.unpack_from(payload)
        if tau not in (-1, 1):
            raise ProtocolError(f"invalid tau {tau}")
        return Challenge(idx, tau, unpack_input(payload[_CHALLENGE_HEAD.size:], rows, cols))
    if tag == TAG_RESPONSE:
        idx, tau = _exact(_RESPONSE, payload, "RESPONSE")
        if tau not in (-1, 1):
            raise ProtocolError(f"invalid tau {tau}")
        return Response(idx, tau)
    if tag == TAG_SYNC_PROBE:
        return SyncProbe(*_exact(_SYNC_PROBE, payload, "SYNC_PROBE"))
    if tag == TAG_SYNC_ACK:
        idx, equal = _exact(_SYNC_ACK, payload, "SYNC_ACK")
        return SyncAck(idx, _flag(equal, "equal"))
    if tag == TAG_DONE:
        success, total, rounds = _exact(_DONE, payload, "DONE")
        return Done(_flag(success, "success"), total, rounds)
    raise ProtocolError(f"unknown message tag {tag}")


def deserialize(frame: bytes) -> Message:
    tag, length = parse_header(frame[: HEADER.size])
    payload = frame[HEADER.size:]
    if len(payload) != length:
        raise ProtocolError(f"frame declares {length} payload bytes, carries {len(payload)}")
    return decode_payload(tag, payload)
