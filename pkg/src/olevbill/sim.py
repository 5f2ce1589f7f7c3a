"""Deterministic discrete-event simulation of a charging road.

Vehicles enter plates in sequence at constant speed. A heap orders plate
entries by simulated time; each entry runs consent, authentication,
charging request, energy transfer and billing for that vehicle and plate.
Nothing reads a wall clock, and every random draw comes from one seeded
``random.Random``, so a (config, seed) pair always yields the same report
bytes.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field

from . import crypto
from .config import ConfigError, ScenarioConfig
from .crypto import ElGamalCiphertext, OpCounts, SecretShare, counting
from .cspa import BillEntry, Cspa, MisbehaviorFlag, init_msk
from .dmv import Dmv, EscrowPackage, PoolExhausted, Pseudonym, TrmState, init_system
from .errors import AuthFailure
from .game import ROW, COL, empirical_payoff, observed_profile, payoff
from .metrics import (
    AnonymitySet,
    CostModel,
    auth_compute_time,
    entropy,
    max_entropy,
    message_size,
    plate_feasibility,
    protocol_auth_time,
    revocation_time,
)
from .obu import (
    HashChain,
    ObuBillLog,
    ObuSession,
    build_charging_request,
    build_dma_request,
    finalize_dma,
    log_bill,
    next_chain_member,
)
from .plate import (
    Behavior,
    PlateState,
    build_dma_reply,
    handle_charging_request_dma,
    relay_pha,
    relay_pha_charging,
    replay_seen_member,
    transfer_and_bill,
    verify_dma_request,
)
from .revocation import RaNode, RevocationAuthorities, Warrant
from .wire import NONCE_SIZE, BillRecord, MessageKind, PhaAuthRequest, frame

EVENT_KINDS = frozenset({"enter_plate", "auth_ok", "auth_fail", "charge", "bill", "flag", "revoke"})


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class SimEvent:
    time: float  # simulated seconds
    seq: int
    actor: str
    kind: str
    payload: dict

    def as_json(self) -> dict:
        return {"t": self.time, "seq": self.seq, "actor": self.actor, "kind": self.kind, "payload": self.payload}


@dataclass
class Vehicle:
    index: int
    vehicle_id: bytes
    trm: TrmState
    speed: float
    threshold: float
    battery: float
    start: float
    mode: str = "none"
    log: ObuBillLog = field(default_factory=ObuBillLog)
    energy_units: int = 0
    attempts: int = 0
    auth_ok: int = 0
    auth_fail: int = 0
    registration: tuple[int, bytes, bytes, bytes] | None = None  # (epoch, x_obu, H2, H3)
    chain: HashChain | None = None
    chain_x_obu: bytes = b""
    chains_registered: int = 0
    phase_ps: Pseudonym | None = None
    pseudonyms_used: int = 0
    last_plate: int | None = None
    x_obus: list[bytes] = field(default_factory=list)


def _hexframe(kind: MessageKind, payload: bytes) -> str:
    return frame(kind, payload).hex()


class World:
    """Every actor of one scenario, wired together and ready to run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        cr, fl = config.crypto, config.fleet
        self.rng = random.Random(config.seed)
        horizon = (fl.count - 1) * fl.headway_s + config.road.num_plates * config.road.plate_length_m / min(
            fl.speeds_mps
        )
        if horizon + 1.0 >= cr.msk_epochs * cr.epoch_s:
            raise ConfigError("crypto.msk_epochs: MSK epochs end before the run does")
        self.params, shares = init_system(cr.j, cr.t, self.rng)
        self.ras = RevocationAuthorities.from_shares(shares, cr.t)
        self.escrow: list[EscrowPackage] = []
        self.dmv = Dmv(self.params, escrow_sink=self._escrow)
        epochs = init_msk(self.rng.randbytes(crypto.DIGEST_SIZE), cr.msk_epochs, cr.epoch_s)
        self.cspa = Cspa(
            self.rng.randbytes(crypto.DIGEST_SIZE), epochs, self.params.dmv_public,
            random.Random(self.rng.getrandbits(64)), config.costs.unit_cost,
        )
        self.cost_model = CostModel(dsrc_ms=config.latencies.dsrc_ms, wired_ms=config.latencies.wired_ms)
        self.plates = [
            PlateState(k, self.params.dmv_public, unit_cost=config.costs.unit_cost)
            for k in range(config.road.num_plates)
        ]
        self.vehicles: list[Vehicle] = []
        for i in range(fl.count):
            vehicle_id = self.rng.randbytes(8)
            while vehicle_id in self.dmv.database:
                vehicle_id = self.rng.randbytes(8)
            trm = self.dmv.provision_trm(vehicle_id, fl.pool_size, self.rng)
            self.dmv.escrow_keys(trm, self.rng)
            self.cspa.enroll(trm.x_obu, trm.password)
            self.vehicles.append(
                Vehicle(
                    i, vehicle_id, trm,
                    speed=fl.speeds_mps[i % len(fl.speeds_mps)],
                    threshold=fl.battery_thresholds[i % len(fl.battery_thresholds)],
                    battery=fl.initial_battery,
                    start=i * fl.headway_s,
                    x_obus=[trm.x_obu],
                )
            )
        self.events: list[SimEvent] = []
        self.flags: list[MisbehaviorFlag] = []
        self.handshakes: dict[str, list[OpCounts]] = {"OBU": [], "CP": [], "CSPA": []}
        self.frame_sizes: dict[str, set[int]] = {}
        self.plate_replays_rejected = 0
        for idx, mode in sorted(config.misbehavior.plates.items()):
            inject_misbehavior(self, "plate", idx, mode)
        for idx, mode in sorted(config.misbehavior.obus.items()):
            inject_misbehavior(self, "obu", idx, mode)

    def _escrow(self, package: EscrowPackage) -> None:
        self.escrow.append(package)
        self.ras.deposit(package)

    def log(self, time: float, actor: str, kind: str, payload: dict) -> None:
        assert kind in EVENT_KINDS
        self.events.append(SimEvent(time, len(self.events), actor, kind, payload))

    def flag(self, time: float, party: str, ident: str, reason: str) -> None:
        self.flags.append(MisbehaviorFlag(party, ident, reason, int(round(time * 1000))))
        self.log(time, "cspa", "flag", {"party": party, "ident": ident, "reason": reason})

    def size(self, name: str, data: bytes) -> None:
        self.frame_sizes.setdefault(name, set()).add(len(data))


def inject_misbehavior(world: World, party: str, index: int, mode: str) -> World:
    """Switch one plate or OBU to Deviate ("none" switches it back)."""
    if party == "plate":
        if not 0 <= index < len(world.plates):
            raise SimError(f"unknown plate {index}")
        if mode not in ("none", "overbill", "replay_member"):
            raise SimError(f"unknown plate mode {mode!r}")
        plate = world.plates[index]
        plate.behavior = Behavior.COOPERATE if mode == "none" else Behavior.DEVIATE
        plate.deviate_mode = None if mode == "none" else mode
    elif party == "obu":
        if not 0 <= index < len(world.vehicles):
            raise SimError(f"unknown vehicle {index}")
        if mode not in ("none", "suppress_log", "replay_member", "reuse_pseudonym"):
            raise SimError(f"unknown OBU mode {mode!r}")
        world.vehicles[index].mode = mode
    else:
        raise SimError(f"unknown party {party!r}")
    return world


# -- per-plate protocol steps -------------------------------------------------


def _fresh_pseudonym(world: World, v: Vehicle) -> Pseudonym:
    try:
        ps = v.trm.next_pseudonym()
    except PoolExhausted:
        world.dmv.refill_pool(v.trm, world.config.fleet.pool_size, world.rng)
        world.cspa.enroll(v.trm.x_obu, v.trm.password)
        v.x_obus.append(v.trm.x_obu)
        ps = v.trm.next_pseudonym()
    v.pseudonyms_used += 1
    return ps


def _sync_plate(world: World, plate: PlateState, t: float) -> None:
    plate.msk = world.cspa.epoch_at(t).msk
    plate.roster = world.cspa.roster()


def _auth_dma(world: World, v: Vehicle, plate: PlateState, t: float, new_phase: bool) -> dict:
    if new_phase or v.phase_ps is None:
        if not (v.mode == "reuse_pseudonym" and v.phase_ps is not None):
            v.phase_ps = _fresh_pseudonym(world, v)
    epoch = world.cspa.epoch_at(t)
    reg = v.registration
    if reg is None or reg[0] != epoch.index or reg[1] != v.trm.x_obu or v.trm.registrations_stale:
        h2, h3 = world.cspa.register_dma(v.trm.password, v.trm.x_obu, epoch)
        v.registration = (epoch.index, v.trm.x_obu, h2, h3)
        v.trm.registrations_stale = False
    _, _, h2, h3 = v.registration
    _sync_plate(world, plate, t)
    plate.begin_session()
    req, session = build_dma_request(v.trm, h2, h3, v.phase_ps, plate.index)
    verified = verify_dma_request(plate, req)
    reply, sk_cp = build_dma_reply(plate, verified, world.rng.randbytes(NONCE_SIZE))
    sk_obu = finalize_dma(session, reply)
    if sk_obu != sk_cp:
        raise AuthFailure("c6_mismatch", "session keys differ")
    world.handshakes["OBU"].append(session.auth_counts)
    world.handshakes["CP"].append(plate.auth_counts)
    world.size("auth_request", req.to_bytes())
    world.size("auth_reply", reply.to_bytes())
    return {
        "session": session,
        "pseudonym": session.ps_bytes,
        "frames": [
            _hexframe(MessageKind.DMA_AUTH_REQUEST, req.to_bytes()),
            _hexframe(MessageKind.DMA_AUTH_REPLY, reply.to_bytes()),
        ],
    }


def _ensure_chain(world: World, v: Vehicle) -> HashChain:
    chain = v.chain
    if chain is None or chain.remaining == 0 or v.chain_x_obu != v.trm.x_obu or v.trm.registrations_stale:
        ps = _fresh_pseudonym(world, v)
        chain = HashChain.issue(ps, world.config.crypto.chain_length)
        world.cspa.register_chain(v.trm.x_obu, chain.head, v.trm.certificate, chain.n)
        v.chain, v.chain_x_obu = chain, v.trm.x_obu
        v.trm.registrations_stale = False
        v.chains_registered += 1
    return chain


def _auth_pha(world: World, v: Vehicle, plate: PlateState, t: float) -> dict:
    chain = _ensure_chain(world, v)
    x_obu = v.trm.x_obu
    ts = int(round(t * 1000))
    plate.begin_session()
    if v.mode == "replay_member" and chain.cursor < chain.n:
        # resend the member the CSPA accepted last time
        try:
            relay_pha(plate, chain.members[chain.cursor], x_obu, ts, world.cspa)
        except AuthFailure as exc:
            v.auth_fail += 1
            world.log(t, f"obu:{v.index}", "auth_fail", {"plate": plate.index, "cause": exc.cause, "replayed": True})
            world.flag(t, "obu", f"vehicle:{v.index}", "member_replay")
        plate.begin_session()
    member = next_chain_member(chain)
    cspa_counts = OpCounts()
    with counting(cspa_counts):
        response = relay_pha(plate, member, x_obu, ts, world.cspa)
    chain.confirm()
    session = ObuSession("PHA", plate.index)
    with counting(session.auth_counts):
        session.session_key = v.trm.open_envelope(response.envelope)
    world.handshakes["OBU"].append(session.auth_counts)
    world.handshakes["CP"].append(plate.auth_counts)
    world.handshakes["CSPA"].append(cspa_counts)
    request = PhaAuthRequest(member, x_obu).to_bytes()
    world.size("auth_request", request)
    world.size("auth_response", response.to_bytes())
    if plate.deviate_mode == "replay_member":
        try:
            replay_seen_member(plate, x_obu, ts, world.cspa)
        except AuthFailure as exc:
            world.plate_replays_rejected += 1
            world.log(t, f"cp:{plate.index}", "auth_fail", {"plate": plate.index, "cause": exc.cause, "replayed": True})
            world.flag(t, "plate", f"plate:{plate.index}", "member_replay")
    return {
        "session": session,
        "pseudonym": None,
        "frames": [
            _hexframe(MessageKind.PHA_AUTH_REQUEST, request),
            _hexframe(MessageKind.PHA_AUTH_RESPONSE, response.to_bytes()),
        ],
        "chain_remaining": chain.remaining,
    }


def _visit(world: World, v: Vehicle, k: int, t: float) -> None:
    cfg = world.config
    plate = world.plates[k]
    actor = f"obu:{v.index}"
    consent = v.battery < v.threshold
    world.log(t, actor, "enter_plate", {"plate": k, "consent": consent, "battery": v.battery})
    if not consent:
        v.last_plate = None
        return
    v.attempts += 1
    new_phase = v.last_plate != k - 1 or k % cfg.section_plates == 0
    on_plate = cfg.road.plate_length_m / v.speed
    auth_time = protocol_auth_time(cfg.protocol, world.cost_model)
    t_auth = t + auth_time
    try:
        if auth_time > cfg.road.auth_zone_fraction * on_plate:
            raise AuthFailure("timeout", "authentication does not fit in the plate's auth zone")
        if cfg.protocol == "DMA":
            result = _auth_dma(world, v, plate, t, new_phase)
        else:
            result = _auth_pha(world, v, plate, t)
        session = result["session"]
        payload = {key: val for key, val in result.items() if key not in ("session", "pseudonym")}
        world.log(t_auth, actor, "auth_ok", {**payload, "plate": k})
        window = cfg.latencies.freshness_window_ms or 2 * on_plate * 1000
        ts = int(round(t_auth * 1000))
        now = int(round((t_auth + cfg.latencies.dsrc_ms / 1000) * 1000))
        request = build_charging_request(v.trm, session, ts, consent)
        world.size("charging_request", request)
        if cfg.protocol == "DMA":
            handle_charging_request_dma(plate, request, now, window)
        else:
            relay_pha_charging(plate, world.cspa, v.trm.x_obu, request, now, window)
    except AuthFailure as exc:
        v.auth_fail += 1
        v.last_plate = None
        world.log(t_auth, actor, "auth_fail", {"plate": k, "cause": exc.cause, "detail": exc.detail})
        return
    v.auth_ok += 1

    t_charge = t_auth + cfg.latencies.dsrc_ms / 1000 + cfg.road.charge_time_ms / 1000
    available = on_plate - auth_time - cfg.latencies.dsrc_ms / 1000
    entry = transfer_and_bill(
        plate, v.trm.x_obu, result["pseudonym"], available, cfg.road.charge_time_ms / 1000,
        int(round(t_charge * 1000)),
    )
    if entry is None:
        v.last_plate = None
        world.log(t_charge, f"cp:{k}", "charge", {"plate": k, "delivered": False})
        return
    v.energy_units += 1
    v.battery = min(v.battery + cfg.costs.energy_per_plate, cfg.fleet.battery_capacity)
    v.last_plate = k
    world.log(t_charge, f"cp:{k}", "charge", {"plate": k, "delivered": True, "energy": cfg.costs.energy_per_plate})

    record = BillRecord(entry.timestamp, plate.plate_id, entry.x_obu, entry.cost, entry.pseudonym)
    accepted = world.cspa.record_bill(entry, f"plate:{k}")
    world.log(t_charge, "cspa", "bill", {
        "plate": k, "accepted": accepted, "frame": _hexframe(MessageKind.BILL_RECORD, record.to_bytes()),
    })
    if not accepted:
        world.log(t_charge, "cspa", "flag", {"party": "plate", "ident": f"plate:{k}", "reason": "non_unit_cost"})
    # the OBU logs what it was told a plate costs, not what the plate claimed
    if v.mode == "suppress_log" and v.energy_units % 2 == 0:
        return
    log_bill(v.log, BillEntry(entry.timestamp, entry.x_obu, entry.pseudonym, k, cfg.costs.unit_cost))


# -- audit --------------------------------------------------------------------


def reconcile(obu_logs: dict[int, list[BillEntry]], ledger: list[BillEntry], x_obus: dict[int, list[bytes]]) -> dict:
    """Per-vehicle comparison of the OBU's log with the CSPA ledger.

    delta = obu_total - cspa_total: positive means the OBU holds bills the
    CSPA cannot back (provider-side fault), negative means the OBU's log is
    short (vehicle-side fault).
    """
    owner = {x: i for i, xs in x_obus.items() for x in xs}
    cspa_totals = {i: 0 for i in x_obus}
    for e in ledger:
        i = owner.get(e.x_obu)
        if i is not None:
            cspa_totals[i] += e.cost
    discrepancies = []
    for i in sorted(x_obus):
        obu_total = sum(e.cost for e in obu_logs.get(i, []))
        if obu_total != cspa_totals[i]:
            discrepancies.append(
                {"vehicle": i, "obu_total": obu_total, "cspa_total": cspa_totals[i], "delta": obu_total - cspa_totals[i]}
            )
    return {"match": not discrepancies, "discrepancies": discrepancies}


# -- report -------------------------------------------------------------------


def _count_summary(samples: list[OpCounts], model: CostModel) -> list[dict]:
    distinct: dict[tuple, int] = {}
    for c in samples:
        key = tuple(sorted(c.as_dict().items()))
        distinct[key] = distinct.get(key, 0) + 1
    return [
        {"counts": dict(key), "handshakes": n, "compute_time_us": auth_compute_time(OpCounts(**dict(key)), model) * 1e6}
        for key, n in sorted(distinct.items())
    ]


def _metrics(world: World) -> dict:
    cfg = world.config
    active = sum(1 for v in world.vehicles if v.energy_units > 0)
    u = max(active, 1)
    counts = {role: _count_summary(samples, world.cost_model) for role, samples in world.handshakes.items() if samples}
    return {
        "anonymity_set_size": active,
        "entropy_bits": entropy(AnonymitySet.uniform(u)) if active else 0.0,
        "max_entropy_bits": max_entropy(u) if active else 0.0,
        "counts_by_role": counts,
        "auth_time_us": {
            role: [s["compute_time_us"] for s in summary] for role, summary in counts.items()
        },
        "msg_sizes": {
            "observed": {name: sorted(sizes) for name, sizes in sorted(world.frame_sizes.items())},
            "charging_request_expected": message_size(cfg.protocol, "charging_request"),
        },
        "revocation_time_ms": revocation_time(world.cost_model),
        "feasibility": {
            str(speed): plate_feasibility(
                cfg.road.plate_length_m, speed, cfg.road.auth_zone_fraction, cfg.protocol, world.cost_model
            ).as_json()
            for speed in sorted(set(cfg.fleet.speeds_mps))
        },
    }


def event_log_digest(events: list[dict]) -> str:
    canonical = json.dumps(events, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _report(world: World) -> dict:
    cfg = world.config
    cspa = world.cspa
    ledger = cspa.ledger
    recon = reconcile(
        {v.index: v.log.entries for v in world.vehicles}, ledger.entries, {v.index: v.x_obus for v in world.vehicles}
    )
    end = max((e.time for e in world.events), default=0.0)
    for d in recon["discrepancies"]:
        if d["delta"] > 0:
            world.flag(end, "plate", f"vehicle:{d['vehicle']}", "positive_delta")
        else:
            world.flag(end, "obu", f"vehicle:{d['vehicle']}", "negative_delta")
    if cfg.protocol == "DMA":
        owner = {x: v.index for v in world.vehicles for x in v.x_obus}
        reused = set(cspa.scan_pseudonym_reuse(cfg.section_plates))
        flagged = sorted({owner[e.x_obu] for e in ledger.entries if e.pseudonym in reused})
        for i in flagged:
            world.flag(end, "obu", f"vehicle:{i}", "pseudonym_reuse")
    flags = [
        {"party": f.party, "ident": f.ident, "reason": f.reason, "ts": f.timestamp} for f in cspa.flags + world.flags
    ]
    behavior = {
        "charges_attempted": sum(v.attempts for v in world.vehicles),
        "charges_delivered": sum(v.energy_units for v in world.vehicles),
        "obu_deviation_detected": any(f["party"] == "obu" for f in flags),
        "plate_deviation_detected": any(f["party"] == "plate" for f in flags),
        "plate_replays_rejected": world.plate_replays_rejected,
    }
    report = {
        "protocol": cfg.protocol,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "vehicles": [
            {
                "index": v.index,
                "vehicle_id_hex": v.vehicle_id.hex(),
                "x_obus": [x.hex() for x in v.x_obus],
                "energy_units": v.energy_units,
                "battery": v.battery,
                "bill_total": v.log.total,
                "cspa_total": sum(ledger.totals.get(x, 0) for x in v.x_obus),
                "auth_successes": v.auth_ok,
                "auth_failures": v.auth_fail,
                "charges_attempted": v.attempts,
                "pseudonyms_used": v.pseudonyms_used,
                "chains_registered": v.chains_registered,
            }
            for v in world.vehicles
        ],
        "ledger": {
            "entries": [e.as_json() for e in ledger.entries],
            "rejected": [e.as_json() for e in ledger.rejected],
            "totals": {x.hex(): n for x, n in sorted(ledger.totals.items())},
        },
        "obu_logs": {str(v.index): [e.as_json() for e in v.log.entries] for v in world.vehicles},
        "reconciliation": recon,
        "flags": flags,
        "behavior": behavior,
        "metrics": _metrics(world),
    }
    if behavior["charges_attempted"]:
        row, col = observed_profile(report)
        report["game"] = {
            "cell": row.value + col.value,
            "payoffs": {
                "row": payoff(empirical_payoff(report, ROW)),
                "col": payoff(empirical_payoff(report, COL)),
            },
        }
    else:
        report["game"] = None
    events = [e.as_json() for e in sorted(world.events, key=lambda e: (e.time, e.seq))]
    report["events"] = events
    report["event_log_digest"] = event_log_digest(events)
    return report


def run_world(world: World) -> dict:
    cfg = world.config
    heap = [(v.start, v.index, 0) for v in world.vehicles]
    heapq.heapify(heap)
    while heap:
        t, i, k = heapq.heappop(heap)
        v = world.vehicles[i]
        _visit(world, v, k, t)
        if k + 1 < cfg.road.num_plates:
            heapq.heappush(heap, (t + cfg.road.plate_length_m / v.speed, i, k + 1))
    return _report(world)


def run_scenario(config: ScenarioConfig) -> dict:
    return run_world(World(config))


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()


# -- revocation ---------------------------------------------------------------


@dataclass
class RevocationWorld:
    """What revocation needs: RA custody, the DMV key and DMV records."""

    ras: RevocationAuthorities
    dmv_public: object
    records: dict[bytes, list[bytes]]  # vehicle ID -> every X_OBU it held

    @classmethod
    def from_world(cls, world: World) -> RevocationWorld:
        return cls(
            world.ras, world.params.dmv_public,
            {vid: list(rec.x_obus) for vid, rec in world.dmv.database.items()},
        )

    def to_json(self) -> dict:
        leader = self.ras.nodes[0]
        return {
            "t": self.ras.t,
            "dmv_public_hex": crypto.encode_point(self.dmv_public).hex(),
            "ras": [{"index": n.index, "share_hex": crypto.encode_scalar(n.share.value).hex()} for n in self.ras.nodes],
            "escrow": [
                {
                    "x_obu_hex": p.x_obu.hex(),
                    "trapdoor_hex": p.trapdoor.to_bytes().hex(),
                    "pool_hex": [ps.hex() for ps in p.pool],
                }
                for p in leader.escrow.values()
            ],
            "dmv_records": {vid.hex(): [x.hex() for x in xs] for vid, xs in sorted(self.records.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> RevocationWorld:
        try:
            nodes = [
                RaNode(r["index"], SecretShare(r["index"], crypto.decode_scalar(bytes.fromhex(r["share_hex"]))))
                for r in data["ras"]
            ]
            ras = RevocationAuthorities(nodes, int(data["t"]))
            for p in data["escrow"]:
                ras.deposit(
                    EscrowPackage(
                        bytes.fromhex(p["x_obu_hex"]),
                        ElGamalCiphertext.from_bytes(bytes.fromhex(p["trapdoor_hex"])),
                        tuple(bytes.fromhex(h) for h in p["pool_hex"]),
                    )
                )
            records = {bytes.fromhex(k): [bytes.fromhex(x) for x in v] for k, v in data["dmv_records"].items()}
            dmv_public = crypto.decode_point(bytes.fromhex(data["dmv_public_hex"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SimError(f"malformed world file: {exc}") from exc
        return cls(ras, dmv_public, records)


def run_revocation(
    world: RevocationWorld | World, ps_bytes: bytes, warrant: Warrant | None, participants: list[int] | None = None
) -> dict:
    """De-anonymize one pseudonym and cross-check the answer with DMV records."""
    if isinstance(world, World):
        sim_world, world = world, RevocationWorld.from_world(world)
    else:
        sim_world = None
    record = world.ras.revoke(ps_bytes, warrant, world.dmv_public, participants)
    vehicle_id = bytes.fromhex(record.recovered_id_hex)
    package = world.ras.locate(ps_bytes)
    out = record.as_dict()
    out["dmv_match"] = package.x_obu in world.records.get(vehicle_id, [])
    if sim_world is not None:
        end = max((e.time for e in sim_world.events), default=0.0)
        sim_world.log(end, "ra", "revoke", out)
    return out
