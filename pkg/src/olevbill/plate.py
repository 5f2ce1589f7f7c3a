"""Charging plate: DMA verification and reply, PHA relay, per-plate energy
delivery and billing.

Each plate owns two op counters. ``auth_counts`` covers verification and
the acknowledgement fields c4..c6; ``session_counts`` covers c7 and the
session key. Both are reset at the start of each vehicle session, so after
a handshake they hold that handshake's numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import crypto
from .crypto import CryptoError, OpCounts, counting
from .cspa import BillEntry, Cspa
from .dmv import Pseudonym
from .errors import AuthFailure
from .wire import (
    ACK,
    CHARGING_REQ,
    DMA_CHARGING_REQUEST_BASE,
    NONCE_SIZE,
    PLATE_ID_SIZE,
    PSEUDONYM_SIZE,
    TIMESTAMP_SIZE,
    DmaAuthReply,
    DmaAuthRequest,
    PhaAuthResponse,
    PhaForward,
    decode_timestamp,
)

MAX_TRIES = 3


class Behavior(str, Enum):
    COOPERATE = "C"
    DEVIATE = "D"


@dataclass
class PlateSession:
    x_obu: bytes
    pseudonym: bytes | None
    session_key: bytes | None
    last_ts: int = -1
    tokens: list[bytes] = field(default_factory=list)  # h_{K_V}(.) kept for later audit


@dataclass
class PlateState:
    index: int
    dmv_public: object
    msk: bytes = b""
    roster: frozenset[bytes] = frozenset()
    unit_cost: int = 1
    behavior: Behavior = Behavior.COOPERATE
    deviate_mode: str | None = None
    link_up: bool = True
    attempts: int = 0
    session: PlateSession | None = None
    auth_counts: OpCounts = field(default_factory=OpCounts)
    session_counts: OpCounts = field(default_factory=OpCounts)
    seen_members: dict[bytes, bytes] = field(default_factory=dict)

    @property
    def plate_id(self) -> bytes:
        return self.index.to_bytes(PLATE_ID_SIZE, "big")

    def begin_session(self) -> None:
        self.attempts = 0
        self.session = None
        self.auth_counts = OpCounts()
        self.session_counts = OpCounts()


@dataclass(frozen=True)
class VerifiedRequest:
    pseudonym: Pseudonym
    ps_bytes: bytes
    x_obu: bytes
    h1: bytes
    ps_digest: bytes  # h(PS), reused for c5/c7


def verify_dma_request(plate: PlateState, req: DmaAuthRequest) -> VerifiedRequest:
    if plate.attempts >= MAX_TRIES:
        raise AuthFailure("tries_exhausted", "authentication halted for this session")
    plate.attempts += 1
    if len(req.c1) != PSEUDONYM_SIZE:
        raise AuthFailure("malformed", "c1 has the wrong length")
    with counting(plate.auth_counts):
        h1 = crypto.xor_bytes(req.h3, plate.msk)
        h2 = crypto.digest(h1)
        ps_bytes = crypto.xor_mask(crypto.digest(h2), req.c1)
        ps_digest = crypto.digest(ps_bytes)
        x_obu = crypto.xor_bytes(req.c2, ps_digest)
        if req.c3 != crypto.digest(ps_digest + req.c2 + req.h3):
            raise AuthFailure("c3_mismatch")
    if x_obu not in plate.roster:
        raise AuthFailure("unknown_x_obu")
    ps = Pseudonym.from_bytes(ps_bytes)
    if not ps.verify(plate.dmv_public):
        raise AuthFailure("bad_signature", "pseudonym not signed by the DMV")
    return VerifiedRequest(ps, ps_bytes, x_obu, h1, ps_digest)


def build_dma_reply(plate: PlateState, verified: VerifiedRequest, r_c: bytes) -> tuple[DmaAuthReply, bytes]:
    """c4..c7 and SK = h(PS || r_c)."""
    if len(r_c) != NONCE_SIZE:
        raise ValueError(f"r_c must be {NONCE_SIZE} bytes")
    with counting(plate.auth_counts):
        c4 = crypto.xor_bytes(plate.plate_id, r_c)
        ps_digest2 = crypto.digest(verified.ps_digest)
        c5 = crypto.xor_mask(ps_digest2, r_c)
        c6 = crypto.digest(r_c + c4 + c5)
    with counting(plate.session_counts):
        c7 = crypto.xor_bytes(verified.h1, ps_digest2)
        session_key = crypto.digest(verified.ps_bytes + r_c)
    plate.session = PlateSession(verified.x_obu, verified.ps_bytes, session_key)
    return DmaAuthReply(c4, c5, c6, c7), session_key


def handle_charging_request_dma(plate: PlateState, frame: bytes, now_ms: int, window_ms: int) -> bytes:
    """Decrypt and check a DMA charging request; returns the plaintext ack."""
    session = plate.session
    if session is None or session.session_key is None:
        raise AuthFailure("not_registered", "no session key on this plate")
    if len(frame) != DMA_CHARGING_REQUEST_BASE + PSEUDONYM_SIZE:
        raise AuthFailure("malformed", f"charging request is {len(frame)} bytes")
    try:
        plain = crypto.session_decrypt(session.session_key, frame)
    except CryptoError as exc:
        raise AuthFailure("malformed", str(exc)) from exc
    ts = decode_timestamp(plain)
    req = plain[TIMESTAMP_SIZE]
    ps = plain[TIMESTAMP_SIZE + 1:TIMESTAMP_SIZE + 1 + PSEUDONYM_SIZE]
    mac = plain[TIMESTAMP_SIZE + 1 + PSEUDONYM_SIZE:]
    if req != CHARGING_REQ or ps != session.pseudonym:
        raise AuthFailure("malformed", "request does not decrypt to the session pseudonym")
    if ts <= session.last_ts or abs(now_ms - ts) > window_ms:
        raise AuthFailure("stale_timestamp")
    session.last_ts = ts
    session.tokens.append(mac)
    return bytes([ACK]) + plain[:TIMESTAMP_SIZE] + ps + mac


def relay_pha(plate: PlateState, member: bytes, x_obu: bytes, timestamp: int, cspa: Cspa) -> PhaAuthResponse:
    """Forward a chain member to the CSPA and hand its answer back."""
    if not plate.link_up:
        raise AuthFailure("link_down", "CSPA unreachable")
    fwd = PhaForward(timestamp, member, x_obu)
    envelope = cspa.verify_and_rotate(fwd.x_obu, fwd.member, fwd.timestamp)
    plate.seen_members[x_obu] = member
    plate.session = PlateSession(x_obu, None, None)
    return PhaAuthResponse(True, envelope)


def replay_seen_member(plate: PlateState, x_obu: bytes, timestamp: int, cspa: Cspa) -> PhaAuthResponse:
    """Deviant plate: resend a member it already relayed, hoping for another session."""
    member = plate.seen_members.get(x_obu)
    if member is None:
        raise AuthFailure("not_registered", "no member recorded for this vehicle")
    return PhaAuthResponse(True, cspa.verify_and_rotate(x_obu, member, timestamp))


def relay_pha_charging(plate: PlateState, cspa: Cspa, x_obu: bytes, frame: bytes, now_ms: int, window_ms: int) -> bytes:
    if not plate.link_up:
        raise AuthFailure("link_down", "CSPA unreachable")
    return cspa.handle_pha_charging(x_obu, frame, now_ms, window_ms)


def transfer_and_bill(
    plate: PlateState,
    x_obu: bytes,
    pseudonym: bytes | None,
    time_available: float,
    charge_time: float,
    timestamp: int,
) -> BillEntry | None:
    """Deliver one energy quantum and emit the bill, or nothing if time ran out."""
    if plate.session is None:
        raise AuthFailure("not_registered", "no authenticated session on this plate")
    if time_available < charge_time:
        return None
    cost = plate.unit_cost
    if plate.behavior is Behavior.DEVIATE and plate.deviate_mode == "overbill":
        cost *= 2
    return BillEntry(timestamp, x_obu, pseudonym, plate.index, cost)
