"""The DMV: system setup, TRM provisioning, pseudonym issuance and key escrow."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import crypto
from .crypto import (
    KEY_SIZE,
    ElGamalCiphertext,
    SecretShare,
    SigningKeypair,
    ThresholdError,
)
from .wire import PSEUDONYM_SIZE, WireError

ID_SIZE = 8
_U64 = (1 << 64) - 1

# the escrowed ElGamal pair (delta1, delta2) over K_sym || K_V
TrapdoorCiphertext = ElGamalCiphertext


class DmvError(ValueError):
    pass


class PoolExhausted(DmvError):
    pass


class InconsistentPseudonym(DmvError):
    """Decrypted pseudonym fields do not have the issued layout."""


@dataclass(frozen=True)
class SystemParams:
    master_public: object  # PK+ = xP
    dmv_signing: SigningKeypair
    j: int
    t: int

    @property
    def dmv_public(self):
        return self.dmv_signing.public


@dataclass(frozen=True)
class Pseudonym:
    enc_alpha: bytes  # (alpha)_{K_sym}, 16 bytes
    masked_id: bytes  # (alpha xor ID)_{K_V}, 16 bytes
    index: int  # n_i
    signature: bytes  # DMV signature over the three fields above

    def body(self) -> bytes:
        return self.enc_alpha + self.masked_id + self.index.to_bytes(8, "big")

    def to_bytes(self) -> bytes:
        return self.body() + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> Pseudonym:
        if len(data) != PSEUDONYM_SIZE:
            raise WireError(f"pseudonym must be {PSEUDONYM_SIZE} bytes, got {len(data)}")
        return cls(data[:16], data[16:32], int.from_bytes(data[32:40], "big"), data[40:])

    def verify(self, dmv_public) -> bool:
        return crypto.verify(dmv_public, self.body(), self.signature)


@dataclass(frozen=True)
class ObuCertificate:
    """Anonymous certificate binding X_OBU to the OBU's public key."""

    x_obu: bytes
    obu_public: bytes
    signature: bytes

    def body(self) -> bytes:
        return b"OBU-CERT" + self.x_obu + self.obu_public

    def verify(self, dmv_public) -> bool:
        return crypto.verify(dmv_public, self.body(), self.signature)


@dataclass(frozen=True)
class EscrowPackage:
    x_obu: bytes
    trapdoor: TrapdoorCiphertext
    pool: tuple[bytes, ...]  # anonymous copies of the issued pseudonyms


@dataclass
class TrmState:
    master_public: object
    dmv_public: object
    c_v: int
    inc_v: int
    k_sym: bytes
    k_v: bytes
    obu_keypair: SigningKeypair
    password: bytes
    pool: list[Pseudonym] = field(default_factory=list)
    x_obu: bytes = b""
    certificate: ObuCertificate | None = None
    cursor: int = 0
    registrations_stale: bool = False

    @property
    def remaining(self) -> int:
        return len(self.pool) - self.cursor

    def next_pseudonym(self) -> Pseudonym:
        if self.cursor >= len(self.pool):
            raise PoolExhausted("pseudonym pool exhausted")
        ps = self.pool[self.cursor]
        self.cursor += 1
        return ps

    def mac(self, data: bytes) -> bytes:
        """h_{K_V}(data)."""
        return crypto.keyed_digest(self.k_v, data)

    def open_envelope(self, envelope: bytes) -> bytes:
        """Recover a session key sent as {SK}_{K_OBU+}."""
        return crypto.elgamal_decrypt(self.obu_keypair.private, ElGamalCiphertext.from_bytes(envelope))


def pool_digest(pool) -> bytes:
    """X_OBU = h(PS^1 || ... || PS^n)."""
    return crypto.digest(b"".join(ps.to_bytes() for ps in pool))


def open_pseudonym(k_sym: bytes, k_v: bytes, ps: Pseudonym) -> tuple[int, bytes]:
    """Decrypt a pseudonym to (alpha, vehicle ID)."""
    alpha_block = crypto.sym_decrypt(k_sym, ps.enc_alpha)
    masked_block = crypto.sym_decrypt(k_v, ps.masked_id)
    if alpha_block[:8] != bytes(8) or masked_block[:8] != bytes(8):
        raise InconsistentPseudonym("padding check failed; wrong keys or forged fields")
    alpha = alpha_block[8:]
    return int.from_bytes(alpha, "big"), bytes(a ^ b for a, b in zip(masked_block[8:], alpha))


def init_system(j: int, t: int, rng) -> tuple[SystemParams, list[SecretShare]]:
    """Fresh master secret x, PK+ = xP, and j threshold shares of x.

    x itself is not returned; the shares are the only way back to it.
    """
    if j < 1 or not 1 <= t <= j:
        raise ThresholdError(f"need 1 <= t <= j, got t={t}, j={j}")
    x = crypto.random_scalar(rng)
    shares = crypto.share_secret(x, j, t, rng)
    params = SystemParams(crypto.scalar_mul(x), SigningKeypair.generate(rng), j, t)
    return params, shares


@dataclass
class VehicleRecord:
    vehicle_id: bytes
    indices: list[int]
    x_obus: list[bytes]


class Dmv:
    """Holds the DMV signing key and the ID <-> pool database."""

    def __init__(self, params: SystemParams, escrow_sink: Callable[[EscrowPackage], None] | None = None):
        self.params = params
        self.escrow_sink = escrow_sink
        self.database: dict[bytes, VehicleRecord] = {}
        self._by_x_obu: dict[bytes, bytes] = {}

    def provision_trm(self, vehicle_id: bytes, n: int, rng) -> TrmState:
        if len(vehicle_id) != ID_SIZE:
            raise DmvError(f"vehicle ID must be {ID_SIZE} bytes")
        if n < 1:
            raise DmvError("pool size must be at least 1")
        if vehicle_id in self.database:
            raise DmvError(f"vehicle {vehicle_id.hex()} already provisioned")
        trm = TrmState(
            master_public=self.params.master_public,
            dmv_public=self.params.dmv_public,
            c_v=rng.getrandbits(64),
            inc_v=rng.getrandbits(64),
            k_sym=rng.randbytes(KEY_SIZE),
            k_v=rng.randbytes(KEY_SIZE),
            obu_keypair=SigningKeypair.generate(rng),
            password=rng.randbytes(16),
        )
        indices = list(range(1, n + 1))
        self.database[vehicle_id] = VehicleRecord(vehicle_id, [], [])
        self._extend_pool(trm, vehicle_id, indices)
        return trm

    def generate_pseudonyms(self, trm: TrmState, indices: list[int], vehicle_id: bytes) -> list[Pseudonym]:
        if len(set(indices)) != len(indices):
            raise DmvError("pseudonym indices must be distinct")
        ident = int.from_bytes(vehicle_id, "big")
        out = []
        for n_i in indices:
            alpha = (trm.c_v + n_i * trm.inc_v) & _U64
            enc_alpha = crypto.sym_encrypt(trm.k_sym, alpha.to_bytes(16, "big"))
            masked_id = crypto.sym_encrypt(trm.k_v, (alpha ^ ident).to_bytes(16, "big"))
            unsigned = Pseudonym(enc_alpha, masked_id, n_i, b"")
            sig = crypto.sign(self.params.dmv_signing.private, unsigned.body())
            out.append(Pseudonym(enc_alpha, masked_id, n_i, sig))
        return out

    def escrow_keys(self, trm: TrmState, rng) -> EscrowPackage:
        r = crypto.random_scalar(rng)
        trapdoor = crypto.elgamal_encrypt(self.params.master_public, trm.k_sym + trm.k_v, r)
        package = EscrowPackage(trm.x_obu, trapdoor, tuple(ps.to_bytes() for ps in trm.pool))
        if self.escrow_sink is not None:
            self.escrow_sink(package)
        return package

    def refill_pool(self, trm: TrmState, n_more: int, rng) -> TrmState:
        """Append fresh pseudonyms, re-derive X_OBU and re-escrow.

        Any CSPA registration tied to the old X_OBU is stale afterwards.
        """
        if n_more <= 0:
            return trm
        vehicle_id = self._by_x_obu[trm.x_obu]
        start = max(ps.index for ps in trm.pool) + 1
        self._extend_pool(trm, vehicle_id, list(range(start, start + n_more)))
        self.escrow_keys(trm, rng)
        trm.registrations_stale = True
        return trm

    def vehicle_for(self, x_obu: bytes) -> bytes | None:
        return self._by_x_obu.get(x_obu)

    def issue_certificate(self, trm: TrmState) -> ObuCertificate:
        unsigned = ObuCertificate(trm.x_obu, trm.obu_keypair.public_bytes, b"")
        return ObuCertificate(
            unsigned.x_obu, unsigned.obu_public, crypto.sign(self.params.dmv_signing.private, unsigned.body())
        )

    def _extend_pool(self, trm: TrmState, vehicle_id: bytes, indices: list[int]) -> None:
        trm.pool.extend(self.generate_pseudonyms(trm, indices, vehicle_id))
        trm.x_obu = pool_digest(trm.pool)
        trm.certificate = self.issue_certificate(trm)
        record = self.database[vehicle_id]
        record.indices.extend(indices)
        record.x_obus.append(trm.x_obu)
        self._by_x_obu[trm.x_obu] = vehicle_id
