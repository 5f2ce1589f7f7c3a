"""Charging service authority: MSK epochs, DMA registration, hash-chain
registry for PHA, session-key issuance and the billing ledger."""

from __future__ import annotations

import hmac
from dataclasses import dataclass, field

from . import crypto
from .crypto import DIGEST_SIZE, KEY_SIZE, CryptoError
from .dmv import ObuCertificate
from .errors import AuthFailure
from .wire import CHARGING_REQ, PHA_CHARGING_REQUEST_SIZE, TIMESTAMP_SIZE, decode_timestamp


class CspaError(ValueError):
    pass


@dataclass(frozen=True)
class MskEpoch:
    index: int
    msk: bytes = field(repr=False)
    start: float
    end: float

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


def init_msk(s: bytes, l: int, epoch_duration: float, start: float = 0.0) -> list[MskEpoch]:
    """Epochs 1..l with MSK_i = h^i(s), each valid for ``epoch_duration`` seconds."""
    if l < 1:
        raise CspaError("need at least one MSK epoch")
    if epoch_duration <= 0:
        raise CspaError("epoch duration must be positive")
    epochs, msk = [], s
    for i in range(1, l + 1):
        msk = crypto.digest(msk)
        lo = start + (i - 1) * epoch_duration
        epochs.append(MskEpoch(i, msk, lo, lo + epoch_duration))
    return epochs


def epoch_at(epochs: list[MskEpoch], t: float) -> MskEpoch:
    for epoch in epochs:
        if epoch.contains(t):
            return epoch
    raise CspaError(f"no MSK epoch covers t={t}")


@dataclass(frozen=True)
class DmaRegistration:
    x_obu: bytes
    h1: bytes
    h2: bytes
    h3: bytes
    epoch: int


@dataclass
class ChainRegistration:
    x_obu: bytes
    head: bytes
    remaining: int
    certificate: ObuCertificate
    session_key: bytes | None = None
    consumed: set[bytes] = field(default_factory=set)
    last_request_ts: int = -1


@dataclass(frozen=True)
class BillEntry:
    timestamp: int  # ms
    x_obu: bytes
    pseudonym: bytes | None
    plate: int
    cost: int

    def as_json(self) -> dict:
        out = {"ts": self.timestamp, "x_obu_hex": self.x_obu.hex(), "plate": self.plate, "cost": self.cost}
        if self.pseudonym is not None:
            out["ps_hex"] = self.pseudonym.hex()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> BillEntry:
        ps = obj.get("ps_hex")
        return cls(
            int(obj["ts"]), bytes.fromhex(obj["x_obu_hex"]), bytes.fromhex(ps) if ps else None,
            int(obj["plate"]), int(obj["cost"]),
        )


@dataclass(frozen=True)
class MisbehaviorFlag:
    party: str  # "plate" or "obu"
    ident: str
    reason: str
    timestamp: int


@dataclass
class BillingLedger:
    unit_cost: int = 1
    entries: list[BillEntry] = field(default_factory=list)
    totals: dict[bytes, int] = field(default_factory=dict)
    rejected: list[BillEntry] = field(default_factory=list)

    def append(self, entry: BillEntry) -> None:
        self.entries.append(entry)
        self.totals[entry.x_obu] = self.totals.get(entry.x_obu, 0) + entry.cost

    def recomputed_totals(self) -> dict[bytes, int]:
        totals: dict[bytes, int] = {}
        for e in self.entries:
            totals[e.x_obu] = totals.get(e.x_obu, 0) + e.cost
        return totals


class Cspa:
    """Single logical event handler; every request is serialized through it."""

    def __init__(self, s: bytes, epochs: list[MskEpoch], dmv_public, rng, unit_cost: int = 1):
        if unit_cost < 1:
            raise CspaError("unit cost must be a positive integer")
        self._s = s
        self.epochs = epochs
        self.dmv_public = dmv_public
        self.rng = rng
        self.ledger = BillingLedger(unit_cost)
        self.flags: list[MisbehaviorFlag] = []
        self._passwords: dict[bytes, bytes] = {}
        self._h1: dict[bytes, bytes] = {}
        self.registrations: dict[tuple[bytes, int], DmaRegistration] = {}
        self.chains: dict[bytes, ChainRegistration] = {}
        self.session_log: list[tuple[int, bytes]] = []  # (time ms, x_obu); keys stay in ``chains``

    # -- accounts ---------------------------------------------------------

    def enroll(self, x_obu: bytes, password: bytes) -> None:
        """DMV -> CSPA: X_OBU, together with the OBU's initial password."""
        self._passwords[x_obu] = crypto.digest(password)

    def roster(self) -> frozenset[bytes]:
        return frozenset(reg.x_obu for reg in self.registrations.values())

    def epoch_at(self, t: float) -> MskEpoch:
        return epoch_at(self.epochs, t)

    # -- DMA registration -------------------------------------------------

    def register_dma(self, pwd: bytes, x_obu: bytes, epoch: MskEpoch) -> tuple[bytes, bytes]:
        """Returns (H2, H3); CSPA keeps H1. Repeat calls in one epoch are idempotent."""
        stored = self._passwords.get(x_obu)
        if stored is None or not hmac.compare_digest(stored, crypto.digest(pwd)):
            raise AuthFailure("bad_password", "PWD_OBU rejected")
        key = (x_obu, epoch.index)
        reg = self.registrations.get(key)
        if reg is None:
            h1 = self._h1.get(x_obu)
            if h1 is None:
                h1 = self._h1[x_obu] = crypto.digest(self._s + x_obu)
            h2 = crypto.digest(h1)
            h3 = crypto.xor_bytes(epoch.msk, h1)
            reg = self.registrations[key] = DmaRegistration(x_obu, h1, h2, h3, epoch.index)
        return reg.h2, reg.h3

    def h1_for(self, x_obu: bytes) -> bytes | None:
        return self._h1.get(x_obu)

    # -- PHA --------------------------------------------------------------

    def register_chain(self, x_obu: bytes, head: bytes, cert: ObuCertificate, n: int) -> ChainRegistration:
        if len(head) != DIGEST_SIZE:
            raise CspaError(f"chain head must be {DIGEST_SIZE} bytes")
        if cert.x_obu != x_obu or not cert.verify(self.dmv_public):
            raise AuthFailure("bad_certificate", "Cert_OBU does not verify for this X_OBU")
        if n < 2:
            raise CspaError("a chain of length n gives n-1 authentications; need n >= 2")
        reg = ChainRegistration(x_obu, head, n - 1, cert)
        self.chains[x_obu] = reg
        return reg

    def verify_and_rotate(self, x_obu: bytes, member: bytes, timestamp: int) -> bytes:
        """Check h(member) == head, rotate the head, return {SK}_{K_OBU+}."""
        reg = self.chains.get(x_obu)
        if reg is None:
            raise AuthFailure("not_registered", "no hash chain registered for this X_OBU")
        if member in reg.consumed or member == reg.head:
            raise AuthFailure("replay", "chain member already consumed")
        if reg.remaining <= 0:
            raise AuthFailure("chain_exhausted")
        if crypto.digest(member) != reg.head:
            raise AuthFailure("hash_mismatch")
        reg.consumed.add(reg.head)
        reg.consumed.add(member)
        reg.head = member
        reg.remaining -= 1
        if reg.session_key is None:
            # one key per vehicle and chain, shared by every plate
            reg.session_key = self.rng.randbytes(KEY_SIZE)
        self.session_log.append((timestamp, x_obu))
        r = crypto.random_scalar(self.rng)
        obu_public = crypto.decode_point(reg.certificate.obu_public)
        return crypto.elgamal_encrypt(obu_public, reg.session_key, r).to_bytes()

    def handle_pha_charging(self, x_obu: bytes, frame: bytes, now_ms: int, window_ms: int) -> bytes:
        """Decrypt a PHA charging request; reply timestamp || X_OBU || MAC."""
        reg = self.chains.get(x_obu)
        if reg is None or reg.session_key is None:
            raise AuthFailure("not_registered", "no session for this X_OBU")
        if len(frame) != PHA_CHARGING_REQUEST_SIZE:
            raise AuthFailure("malformed", f"charging request is {len(frame)} bytes")
        try:
            plain = crypto.session_decrypt(reg.session_key, frame)
        except CryptoError as exc:
            raise AuthFailure("malformed", str(exc)) from exc
        ts = decode_timestamp(plain)
        req = plain[TIMESTAMP_SIZE]
        sent_x_obu = plain[TIMESTAMP_SIZE + 1:TIMESTAMP_SIZE + 1 + DIGEST_SIZE]
        mac = plain[TIMESTAMP_SIZE + 1 + DIGEST_SIZE:]
        if req != CHARGING_REQ or sent_x_obu != x_obu:
            raise AuthFailure("malformed", "charging request does not decrypt to this vehicle")
        if ts <= reg.last_request_ts or abs(now_ms - ts) > window_ms:
            raise AuthFailure("stale_timestamp")
        reg.last_request_ts = ts
        return plain[:TIMESTAMP_SIZE] + x_obu + mac

    # -- billing ----------------------------------------------------------

    def record_bill(self, entry: BillEntry, plate_label: str | None = None) -> bool:
        """Append a unit-cost entry. Anything else is rejected and the plate flagged."""
        if entry.cost != self.ledger.unit_cost:
            self.ledger.rejected.append(entry)
            self.flags.append(
                MisbehaviorFlag("plate", plate_label or str(entry.plate), "non_unit_cost", entry.timestamp)
            )
            return False
        self.ledger.append(entry)
        return True

    def scan_pseudonym_reuse(self, section_plates: int) -> list[bytes]:
        """Pseudonyms whose bills are not one run of consecutive plates in one section.

        Rejected bills count too: the vehicle was still at that plate.
        """
        runs: dict[bytes, list[int]] = {}
        for e in sorted(self.ledger.entries + self.ledger.rejected, key=lambda e: (e.timestamp, e.plate)):
            if e.pseudonym is not None:
                runs.setdefault(e.pseudonym, []).append(e.plate)
        reused = []
        for ps, plates in runs.items():
            consecutive = all(b == a + 1 for a, b in zip(plates, plates[1:]))
            one_section = len({p // section_plates for p in plates}) == 1
            if not (consecutive and one_section):
                reused.append(ps)
        return reused
