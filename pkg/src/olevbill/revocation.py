"""Revocation authorities: share custody, warrant-gated reconstruction of the
master secret, and pseudonym-to-vehicle de-anonymization."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto
from .crypto import SecretShare
from .dmv import EscrowPackage, InconsistentPseudonym, Pseudonym, TrapdoorCiphertext, open_pseudonym


class RevocationError(ValueError):
    pass


class WarrantRequired(RevocationError):
    pass


class InvalidPseudonym(RevocationError):
    pass


class UnknownPseudonym(RevocationError):
    pass


@dataclass(frozen=True)
class Warrant:
    case_id: str
    target: bytes  # pseudonym bytes under investigation
    authority: str = "court"


@dataclass
class RaNode:
    index: int
    share: SecretShare = field(repr=False)
    escrow: dict[bytes, EscrowPackage] = field(default_factory=dict, repr=False)
    alive: bool = True

    def store(self, package: EscrowPackage) -> None:
        existing = self.escrow.get(package.x_obu)
        if existing is not None and existing != package:
            raise RevocationError("escrow entries are immutable once stored")
        self.escrow[package.x_obu] = package


@dataclass(frozen=True)
class Transcript:
    case_id: str
    share_indices: tuple[int, ...]


@dataclass(frozen=True)
class RevocationRecord:
    case: str
    pseudonym_hex: str
    recovered_id_hex: str
    shares_used: list[int]

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "pseudonym_hex": self.pseudonym_hex,
            "recovered_id_hex": self.recovered_id_hex,
            "shares_used": list(self.shares_used),
        }


def elect_leader(ras: list[RaNode]) -> RaNode:
    """Lowest index among live nodes."""
    live = [ra for ra in ras if ra.alive]
    if not live:
        raise RevocationError("no live revocation authority to lead")
    return min(live, key=lambda ra: ra.index)


def collude_reconstruct(ras: list[RaNode], t: int, warrant: Warrant | None, audit_log: list | None = None) -> int:
    if warrant is None:
        raise WarrantRequired("reconstruction of the master secret needs a warrant")
    live = [ra for ra in ras if ra.alive]
    elect_leader(live)
    x = crypto.reconstruct_secret([ra.share for ra in live], t)
    if audit_log is not None:
        audit_log.append(Transcript(warrant.case_id, tuple(ra.index for ra in live[:t])))
    return x


def deanonymize(
    x: int, trapdoor: TrapdoorCiphertext, ps: Pseudonym, dmv_public, pool: tuple[bytes, ...] | None = None
) -> bytes:
    """Recover the vehicle ID behind ``ps`` from the escrowed keys."""
    if not ps.verify(dmv_public):
        raise InvalidPseudonym("pseudonym signature does not verify")
    keys = crypto.elgamal_decrypt(x, trapdoor)
    if len(keys) != 2 * crypto.KEY_SIZE:
        raise InconsistentPseudonym("trapdoor does not carry two symmetric keys")
    _, vehicle_id = open_pseudonym(keys[: crypto.KEY_SIZE], keys[crypto.KEY_SIZE:], ps)
    if pool is not None and ps.to_bytes() not in pool:
        raise InconsistentPseudonym("pseudonym is not part of the escrowed pool")
    return vehicle_id


class RevocationAuthorities:
    """The RA collective as one object; collusion is a synchronous call."""

    def __init__(self, nodes: list[RaNode], t: int):
        self.nodes = nodes
        self.t = t
        self.audit_log: list[Transcript] = []

    @classmethod
    def from_shares(cls, shares: list[SecretShare], t: int) -> RevocationAuthorities:
        return cls([RaNode(s.index, s) for s in shares], t)

    def deposit(self, package: EscrowPackage) -> None:
        for node in self.nodes:
            node.store(package)

    def locate(self, ps_bytes: bytes) -> EscrowPackage:
        """Find the escrow entry whose pool copy contains ``ps_bytes``."""
        leader = elect_leader(self.nodes)
        for package in leader.escrow.values():
            if ps_bytes in package.pool:
                return package
        raise UnknownPseudonym("pseudonym not found in any escrowed pool")

    def revoke(self, ps_bytes: bytes, warrant: Warrant | None, dmv_public, participants: list[int] | None = None):
        if warrant is None:
            raise WarrantRequired("revocation needs a warrant")
        if warrant.target != ps_bytes:
            raise RevocationError("warrant does not cover this pseudonym")
        ps = Pseudonym.from_bytes(ps_bytes)
        if not ps.verify(dmv_public):
            raise InvalidPseudonym("pseudonym signature does not verify")
        nodes = self.nodes if participants is None else [n for n in self.nodes if n.index in participants]
        package = self.locate(ps_bytes)
        x = collude_reconstruct(nodes, self.t, warrant, self.audit_log)
        vehicle_id = deanonymize(x, package.trapdoor, ps, dmv_public, package.pool)
        return RevocationRecord(
            warrant.case_id, ps_bytes.hex(), vehicle_id.hex(), list(self.audit_log[-1].share_indices)
        )
