"""Binary message layouts and length-prefixed framing.

Every message travels as ``kind (1) || length (4, big-endian) || payload``.
Payload layouts (sizes in bytes):

======================  =====================================================
DMA auth request        c1 (104) | c2 (64) | c3 (64) | H3 (64)          = 296
DMA auth reply          c4 (8) | c5 (8) | c6 (64) | c7 (64)              = 144
PHA auth request        member (64) | X_OBU (64)                         = 128
PHA forward (CP->CSPA)  timestamp (6) | member (64) | X_OBU (64)         = 134
PHA auth response       status (1) | SK envelope (33 + 32)               = 66
DMA charging request    timestamp (6) | req (1) | PS (104) | MAC (64)    = 175
PHA charging request    timestamp (6) | req (1) | X_OBU (64) | MAC (64)  = 135
DMA ack                 ack (1) | timestamp (6) | PS (104) | MAC (64)    = 175
PHA reply (CSPA->OBU)   timestamp (6) | X_OBU (64) | MAC (64)            = 134
bill record             timestamp (6) | plate (8) | X_OBU (64) | cost (4)
                        [| PS (104), DMA only]                       = 82 / 186
======================  =====================================================

Charging requests are encrypted under the session key with a
length-preserving cipher, so the sizes above are also the on-air sizes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator

from .crypto import DIGEST_SIZE, POINT_SIZE

TIMESTAMP_SIZE = 6
PLATE_ID_SIZE = 8
NONCE_SIZE = 8
PSEUDONYM_SIZE = 104
CHARGING_REQ = 0x01
ACK = 0x06

_HEADER = struct.Struct(">BI")


class WireError(ValueError):
    pass


class MessageKind(IntEnum):
    DMA_AUTH_REQUEST = 1
    DMA_AUTH_REPLY = 2
    PHA_AUTH_REQUEST = 3
    PHA_FORWARD = 4
    PHA_AUTH_RESPONSE = 5
    CHARGING_REQUEST = 6
    CHARGING_ACK = 7
    BILL_RECORD = 8


def frame(kind: MessageKind, payload: bytes) -> bytes:
    return _HEADER.pack(int(kind), len(payload)) + payload


def unframe(data: bytes) -> tuple[MessageKind, bytes, bytes]:
    """Split one frame off ``data``; returns (kind, payload, rest)."""
    if len(data) < _HEADER.size:
        raise WireError("truncated frame header")
    kind, length = _HEADER.unpack_from(data)
    end = _HEADER.size + length
    if len(data) < end:
        raise WireError(f"truncated frame: want {length} payload bytes")
    try:
        kind = MessageKind(kind)
    except ValueError:
        raise WireError(f"unknown message kind {kind}") from None
    return kind, data[_HEADER.size:end], data[end:]


def iter_frames(data: bytes) -> Iterator[tuple[MessageKind, bytes]]:
    while data:
        kind, payload, data = unframe(data)
        yield kind, payload


def encode_timestamp(ms: int) -> bytes:
    if not 0 <= ms < 1 << 48:
        raise WireError("timestamp out of 48-bit range")
    return ms.to_bytes(TIMESTAMP_SIZE, "big")


def decode_timestamp(data: bytes) -> int:
    return int.from_bytes(data[:TIMESTAMP_SIZE], "big")


def _split(data: bytes, *sizes: int) -> list[bytes]:
    if len(data) != sum(sizes):
        raise WireError(f"expected {sum(sizes)} bytes, got {len(data)}")
    out, pos = [], 0
    for size in sizes:
        out.append(data[pos:pos + size])
        pos += size
    return out


@dataclass(frozen=True)
class DmaAuthRequest:
    c1: bytes
    c2: bytes
    c3: bytes
    h3: bytes

    SIZES = (PSEUDONYM_SIZE, DIGEST_SIZE, DIGEST_SIZE, DIGEST_SIZE)

    def to_bytes(self) -> bytes:
        return self.c1 + self.c2 + self.c3 + self.h3

    @classmethod
    def from_bytes(cls, data: bytes) -> DmaAuthRequest:
        return cls(*_split(data, *cls.SIZES))


@dataclass(frozen=True)
class DmaAuthReply:
    c4: bytes
    c5: bytes
    c6: bytes
    c7: bytes

    SIZES = (NONCE_SIZE, NONCE_SIZE, DIGEST_SIZE, DIGEST_SIZE)

    def to_bytes(self) -> bytes:
        return self.c4 + self.c5 + self.c6 + self.c7

    @classmethod
    def from_bytes(cls, data: bytes) -> DmaAuthReply:
        return cls(*_split(data, *cls.SIZES))


@dataclass(frozen=True)
class PhaAuthRequest:
    member: bytes
    x_obu: bytes

    def to_bytes(self) -> bytes:
        return self.member + self.x_obu

    @classmethod
    def from_bytes(cls, data: bytes) -> PhaAuthRequest:
        return cls(*_split(data, DIGEST_SIZE, DIGEST_SIZE))


@dataclass(frozen=True)
class PhaForward:
    timestamp: int
    member: bytes
    x_obu: bytes

    def to_bytes(self) -> bytes:
        return encode_timestamp(self.timestamp) + self.member + self.x_obu

    @classmethod
    def from_bytes(cls, data: bytes) -> PhaForward:
        ts, member, x_obu = _split(data, TIMESTAMP_SIZE, DIGEST_SIZE, DIGEST_SIZE)
        return cls(decode_timestamp(ts), member, x_obu)


@dataclass(frozen=True)
class PhaAuthResponse:
    ok: bool
    envelope: bytes  # {SK}_{K_OBU+}, empty on failure

    def to_bytes(self) -> bytes:
        return bytes([1 if self.ok else 0]) + self.envelope

    @classmethod
    def from_bytes(cls, data: bytes) -> PhaAuthResponse:
        if not data:
            raise WireError("empty auth response")
        return cls(data[0] == 1, data[1:])


@dataclass(frozen=True)
class BillRecord:
    timestamp: int
    plate_id: bytes
    x_obu: bytes
    cost: int
    pseudonym: bytes | None = None

    def to_bytes(self) -> bytes:
        out = (
            encode_timestamp(self.timestamp)
            + self.plate_id
            + self.x_obu
            + self.cost.to_bytes(4, "big")
        )
        return out + (self.pseudonym or b"")

    @classmethod
    def from_bytes(cls, data: bytes) -> BillRecord:
        fixed = TIMESTAMP_SIZE + PLATE_ID_SIZE + DIGEST_SIZE + 4
        if len(data) not in (fixed, fixed + PSEUDONYM_SIZE):
            raise WireError(f"bad bill record length {len(data)}")
        ts, plate, x_obu, cost = _split(data[:fixed], TIMESTAMP_SIZE, PLATE_ID_SIZE, DIGEST_SIZE, 4)
        return cls(decode_timestamp(ts), plate, x_obu, int.from_bytes(cost, "big"), data[fixed:] or None)


# sizes the overhead model is checked against
PHA_ENVELOPE_SIZE = POINT_SIZE + 32
DMA_CHARGING_REQUEST_BASE = TIMESTAMP_SIZE + 1 + DIGEST_SIZE
PHA_CHARGING_REQUEST_SIZE = TIMESTAMP_SIZE + 1 + DIGEST_SIZE + DIGEST_SIZE
