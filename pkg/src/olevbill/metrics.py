"""Anonymity entropy and the overhead model: operation counts, compute
time, revocation time, message sizes and plate-length feasibility.

All timing flows through :class:`CostModel`; nothing here reads a clock.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .crypto import DIGEST_SIZE, OpCounts
from .wire import (
    DMA_CHARGING_REQUEST_BASE,
    NONCE_SIZE,
    PHA_CHARGING_REQUEST_SIZE,
    PHA_ENVELOPE_SIZE,
    PSEUDONYM_SIZE,
    TIMESTAMP_SIZE,
)

__all__ = [
    "AnonymitySet",
    "CostModel",
    "Feasibility",
    "OpCounts",
    "auth_compute_time",
    "entropy",
    "expected_dma_counts",
    "max_entropy",
    "message_size",
    "plate_feasibility",
    "revocation_time",
]


@dataclass(frozen=True)
class AnonymitySet:
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(self.probabilities) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def uniform(cls, n: int) -> AnonymitySet:
        return cls(tuple([1.0 / n] * n))


def entropy(anonymity: AnonymitySet) -> float:
    """Shannon entropy in bits; zero-probability members contribute nothing."""
    return -math.fsum(p * math.log2(p) for p in anonymity.probabilities if p > 0)


def max_entropy(n: int) -> float:
    if n < 1:
        raise ValueError("anonymity set must have at least one member")
    return math.log2(n)


def expected_dma_counts(role: str) -> OpCounts:
    """Per-handshake authentication cost: OBU 3H+2EO, plate 6H+5EO."""
    table = {"OBU": OpCounts(hash=3, xor=2), "CP": OpCounts(hash=6, xor=5)}
    try:
        return table[role]
    except KeyError:
        raise ValueError(f"unknown role {role!r}") from None


def expected_pha_counts(role: str) -> OpCounts:
    table = {"OBU": OpCounts(dec=1), "CP": OpCounts(), "CSPA": OpCounts(hash=1, enc=1)}
    try:
        return table[role]
    except KeyError:
        raise ValueError(f"unknown role {role!r}") from None


@dataclass(frozen=True)
class CostModel:
    t_hash_us: float = 0.76
    t_mul_ms: float = 0.78
    t_gamma_ms: float = 0.01
    t_dec_ms: float = 0.01
    t_enc_ms: float = 0.01
    dsrc_ms: float = 1.0
    wired_ms: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative")


def auth_compute_time(counts: OpCounts, model: CostModel) -> float:
    """Seconds of computation; XOR is treated as free."""
    return counts.hash * model.t_hash_us * 1e-6 + (counts.enc * model.t_enc_ms + counts.dec * model.t_dec_ms) * 1e-3


def revocation_time(model: CostModel) -> float:
    """Milliseconds: two table lookups, point mults, hashes and decryptions."""
    return 2 * model.t_gamma_ms + 2 * model.t_mul_ms + 2 * model.t_hash_us * 1e-3 + 2 * model.t_dec_ms


_SIZES = {
    ("DMA", "auth_request"): lambda u: u + 3 * DIGEST_SIZE,
    ("DMA", "auth_reply"): lambda u: 2 * NONCE_SIZE + 2 * DIGEST_SIZE,
    ("DMA", "charging_request"): lambda u: DMA_CHARGING_REQUEST_BASE + u,
    ("PHA", "auth_request"): lambda u: 2 * DIGEST_SIZE,
    ("PHA", "forward"): lambda u: TIMESTAMP_SIZE + 2 * DIGEST_SIZE,
    ("PHA", "auth_response"): lambda u: 1 + PHA_ENVELOPE_SIZE,
    ("PHA", "charging_request"): lambda u: PHA_CHARGING_REQUEST_SIZE,
}


def message_size(protocol: str, kind: str, u: int = PSEUDONYM_SIZE) -> int:
    """Payload bytes of one message; DMA charging request is 71 + u."""
    try:
        return _SIZES[(protocol, kind)](u)
    except KeyError:
        raise ValueError(f"unknown message {protocol}/{kind}") from None


@dataclass(frozen=True)
class Feasibility:
    time_on_plate: float  # s
    auth_budget: float  # s
    auth_time: float  # s
    feasible: bool
    energy_time_remaining: float  # s

    def as_json(self) -> dict:
        return asdict(self)


def protocol_auth_time(protocol: str, model: CostModel) -> float:
    """End-to-end authentication latency in seconds."""
    if protocol == "DMA":
        compute = sum(auth_compute_time(expected_dma_counts(r), model) for r in ("OBU", "CP"))
        return compute + 2 * model.dsrc_ms * 1e-3
    if protocol == "PHA":
        compute = sum(auth_compute_time(expected_pha_counts(r), model) for r in ("OBU", "CP", "CSPA"))
        return compute + 2 * (model.dsrc_ms + model.wired_ms) * 1e-3
    raise ValueError(f"unknown protocol {protocol!r}")


def plate_feasibility(length: float, speed: float, f: float, protocol: str, model: CostModel) -> Feasibility:
    if speed <= 0:
        raise ValueError("speed must be positive")
    if length <= 0:
        raise ValueError("plate length must be positive")
    if not 0 < f < 1:
        raise ValueError("auth zone fraction must be in (0, 1)")
    on_plate = length / speed
    budget = f * on_plate
    auth = protocol_auth_time(protocol, model)
    return Feasibility(on_plate, budget, auth, auth <= budget, max(on_plate - auth, 0.0))
