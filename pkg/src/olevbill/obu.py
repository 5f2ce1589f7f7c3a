"""Vehicle side of both protocols: DMA request/finalize, PHA chain cursor,
charging requests and the local bill log."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import crypto
from .crypto import OpCounts, counting
from .cspa import BillEntry
from .dmv import Pseudonym, TrmState
from .errors import AuthFailure
from .wire import CHARGING_REQ, DmaAuthReply, DmaAuthRequest, encode_timestamp


class ObuError(ValueError):
    pass


@dataclass
class ObuSession:
    protocol: str  # "DMA" or "PHA"
    plate: int
    pseudonym: Pseudonym | None = None
    ps_bytes: bytes = b""
    ps_digest: bytes = b""  # h(PS), computed once while building the request
    h2: bytes = b""
    h3: bytes = b""
    session_key: bytes | None = None
    h1: bytes | None = None
    auth_counts: OpCounts = field(default_factory=OpCounts)
    session_counts: OpCounts = field(default_factory=OpCounts)


@dataclass
class ObuBillLog:
    entries: list[BillEntry] = field(default_factory=list)
    total: int = 0

    def to_jsonl(self) -> str:
        return "".join(_jsonl(e.as_json()) for e in self.entries)


def _jsonl(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def build_dma_request(
    trm: TrmState, h2: bytes, h3: bytes, ps: Pseudonym, plate: int = -1
) -> tuple[DmaAuthRequest, ObuSession]:
    """c1 = h(H2) xor PS, c2 = h(PS) xor X_OBU, c3 = h(h(PS) || c2 || H3)."""
    session = ObuSession("DMA", plate, ps, ps.to_bytes(), h2=h2, h3=h3)
    with counting(session.auth_counts):
        c1 = crypto.xor_mask(crypto.digest(h2), session.ps_bytes)
        session.ps_digest = crypto.digest(session.ps_bytes)
        c2 = crypto.xor_bytes(session.ps_digest, trm.x_obu)
        c3 = crypto.digest(session.ps_digest + c2 + h3)
    return DmaAuthRequest(c1, c2, c3, h3), session


def finalize_dma(session: ObuSession, reply: DmaAuthReply) -> bytes:
    """Authenticate the plate via c6, then derive SK and recover H1."""
    with counting(session.session_counts):
        ps_digest2 = crypto.digest(session.ps_digest)
        r_c = crypto.xor_mask(ps_digest2, reply.c5)
        if reply.c6 != crypto.digest(r_c + reply.c4 + reply.c5):
            raise AuthFailure("c6_mismatch", "plate failed to authenticate")
        session.session_key = crypto.digest(session.ps_bytes + r_c)
        session.h1 = crypto.xor_bytes(reply.c7, ps_digest2)
    return session.session_key


@dataclass
class HashChain:
    """h^0(PS) .. h^n(PS), precomputed at issue time; cursor k means h^k is the
    last value the CSPA has accepted."""

    pseudonym: bytes
    members: list[bytes]
    cursor: int

    @classmethod
    def issue(cls, ps: Pseudonym, n: int) -> HashChain:
        seed = ps.to_bytes()
        members = [seed]
        for _ in range(n):
            members.append(crypto.digest(members[-1]))
        return cls(seed, members, n)

    @property
    def n(self) -> int:
        return len(self.members) - 1

    @property
    def head(self) -> bytes:
        return self.members[self.n]

    @property
    def remaining(self) -> int:
        return max(self.cursor - 1, 0)

    def confirm(self) -> None:
        self.cursor -= 1


def next_chain_member(chain: HashChain) -> bytes:
    """h^{k-1}(PS) for cursor k; never hands out h^0, the pseudonym itself."""
    if chain.cursor <= 1:
        raise AuthFailure("chain_exhausted", "register a new chain")
    return chain.members[chain.cursor - 1]


def build_charging_request(
    trm: TrmState, session: ObuSession, timestamp_ms: int, consent: bool = True
) -> bytes | None:
    """Encrypted charging request, or None without driver consent.

    DMA: ts | req | PS | h_{K_V}(ts | req | PS)         (71 + |PS| bytes)
    PHA: ts | req | X_OBU | h_{K_V}(ts | req | X_OBU)   (135 bytes)
    """
    if not consent:
        return None
    if session.session_key is None:
        raise ObuError("no session key; authenticate first")
    body = encode_timestamp(timestamp_ms) + bytes([CHARGING_REQ])
    body += session.ps_bytes if session.protocol == "DMA" else trm.x_obu
    return crypto.session_encrypt(session.session_key, body + trm.mac(body))


def log_bill(log: ObuBillLog, entry: BillEntry) -> ObuBillLog:
    log.entries.append(entry)
    log.total += entry.cost
    return log
