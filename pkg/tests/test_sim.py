import pytest

from olevbill.config import ConfigError, parse_config
from olevbill.crypto import ThresholdError
from olevbill.cspa import BillEntry
from olevbill.errors import CAUSES
from olevbill.revocation import InvalidPseudonym, Warrant, WarrantRequired
from olevbill.sim import (
    EVENT_KINDS,
    RevocationWorld,
    SimError,
    World,
    inject_misbehavior,
    reconcile,
    report_bytes,
    run_revocation,
    run_scenario,
    run_world,
)


def _cfg(**kw):
    data = {"road": {"num_plates": 10}, "fleet": {"count": 1}}
    for key, val in kw.items():
        section, _, name = key.partition("__")
        if name:
            data.setdefault(section, {})[name] = val
        else:
            data[section] = val
    return parse_config(data)


@pytest.fixture(scope="module")
def honest_dma():
    return run_scenario(_cfg())


def test_single_vehicle_dma(honest_dma):
    r = honest_dma
    assert len(r["ledger"]["entries"]) == 10
    assert all(e["cost"] == 1 for e in r["ledger"]["entries"])
    assert r["reconciliation"] == {"match": True, "discrepancies": []}
    assert r["vehicles"][0]["bill_total"] == r["vehicles"][0]["cspa_total"] == 10
    assert r["game"]["cell"] == "CC"
    assert r["metrics"]["msg_sizes"]["observed"]["charging_request"] == [175]


def test_event_log_well_formed(honest_dma):
    events = honest_dma["events"]
    times = [e["t"] for e in events]
    assert times == sorted(times)
    assert {e["kind"] for e in events} <= EVENT_KINDS
    for e in events:
        if e["kind"] == "auth_fail":
            assert e["payload"]["cause"] in CAUSES


def test_fresh_pseudonym_per_plate_rotation():
    r = run_scenario(_cfg(fleet__rotation="plate"))
    ps = [e["ps_hex"] for e in r["ledger"]["entries"]]
    assert len(set(ps)) == len(ps) == 10


def test_pha_chain_reregistration():
    r = run_scenario(_cfg(protocol="PHA", crypto__chain_length=8))
    v = r["vehicles"][0]
    assert v["auth_successes"] == 10
    assert v["chains_registered"] == 2
    assert r["reconciliation"]["match"]
    assert r["metrics"]["msg_sizes"]["observed"]["charging_request"] == [135]


def test_pool_refill():
    r = run_scenario(_cfg(fleet__rotation="plate", fleet__pool_size=4))
    v = r["vehicles"][0]
    assert v["pseudonyms_used"] == 10
    assert len(v["x_obus"]) == 3
    assert r["reconciliation"]["match"]


def test_determinism():
    cfg = {"seed": 11, "road": {"num_plates": 6}, "fleet": {"count": 3, "speeds_mps": [20, 35]}}
    a = report_bytes(run_scenario(parse_config(cfg)))
    b = report_bytes(run_scenario(parse_config(cfg)))
    assert a == b
    cfg["seed"] = 12
    assert report_bytes(run_scenario(parse_config(cfg))) != a


def test_conservation():
    cfg = parse_config({"road": {"num_plates": 8}, "fleet": {"count": 4, "speeds_mps": [10, 25, 40]}})
    r = run_scenario(cfg)
    delivered = sum(v["energy_units"] for v in r["vehicles"])
    assert delivered == len(r["ledger"]["entries"]) == r["behavior"]["charges_delivered"]
    assert sum(r["ledger"]["totals"].values()) == delivered


def test_consent_stops_charging():
    r = run_scenario(_cfg(fleet__battery_thresholds=[25.0]))
    assert r["vehicles"][0]["energy_units"] == 5
    assert r["vehicles"][0]["battery"] == 25.0


def test_too_fast_times_out():
    r = run_scenario(_cfg(fleet__speeds_mps=[400.0], latencies={"dsrc_ms": 1.0, "wired_ms": 1.0}))
    fails = [e for e in r["events"] if e["kind"] == "auth_fail"]
    assert len(fails) == 10 and all(e["payload"]["cause"] == "timeout" for e in fails)
    assert r["ledger"]["entries"] == []


@pytest.mark.parametrize(
    "protocol,misbehavior,cell",
    [
        ("DMA", {"plates": {"3": "overbill"}}, "CD"),
        ("DMA", {"obus": {"0": "suppress_log"}}, "DC"),
        ("DMA", {"obus": {"0": "reuse_pseudonym"}}, "DC"),
        ("PHA", {"plates": {"3": "replay_member"}}, "CD"),
        ("PHA", {"obus": {"0": "replay_member"}}, "DC"),
        ("DMA", {"plates": {"3": "overbill"}, "obus": {"0": "suppress_log"}}, "DD"),
    ],
)
def test_misbehavior_cells(protocol, misbehavior, cell):
    r = run_scenario(_cfg(protocol=protocol, fleet__rotation="plate", misbehavior=misbehavior))
    assert r["game"]["cell"] == cell


def test_overbill_flags_affected_vehicle_only():
    cfg = parse_config({
        "road": {"num_plates": 10},
        "fleet": {"count": 3, "battery_thresholds": [100.0, 100.0, 20.0]},
        "misbehavior": {"plates": {"4": "overbill"}},
    })
    r = run_scenario(cfg)
    flagged = {d["vehicle"] for d in r["reconciliation"]["discrepancies"]}
    assert flagged == {0, 1}
    assert all(d["delta"] > 0 for d in r["reconciliation"]["discrepancies"])


def test_noop_mode_is_honest(honest_dma):
    r = run_scenario(_cfg(misbehavior={"plates": {"2": "none"}}))
    assert report_bytes(r) == report_bytes(honest_dma)


def test_inject_misbehavior_errors():
    world = World(_cfg())
    with pytest.raises(SimError):
        inject_misbehavior(world, "plate", 10, "overbill")
    with pytest.raises(SimError):
        inject_misbehavior(world, "obu", 0, "teleport")
    with pytest.raises(SimError):
        inject_misbehavior(world, "ra", 0, "none")
    inject_misbehavior(world, "plate", 1, "overbill")
    assert not run_world(world)["reconciliation"]["match"]


def test_epochs_must_cover_run():
    with pytest.raises(ConfigError):
        World(_cfg(crypto__msk_epochs=1, crypto__epoch_s=0.5))


def test_reconcile_sign():
    x = b"x" * 64
    ledger = [BillEntry(1, x, None, 0, 1)]
    logs = {0: [BillEntry(1, x, None, 0, 1), BillEntry(2, x, None, 1, 1)]}
    out = reconcile(logs, ledger, {0: [x]})
    assert out["discrepancies"] == [{"vehicle": 0, "obu_total": 2, "cspa_total": 1, "delta": 1}]
    assert reconcile({0: []}, ledger, {0: [x]})["discrepancies"][0]["delta"] == -1


@pytest.fixture(scope="module")
def revocation_case():
    world = World(_cfg(crypto__j=5, crypto__t=3))
    report = run_world(world)
    ps = bytes.fromhex(report["ledger"]["entries"][0]["ps_hex"])
    return world, ps


def test_revocation_from_transcript(revocation_case):
    world, ps = revocation_case
    out = run_revocation(world, ps, Warrant("case-1", ps))
    assert out["dmv_match"]
    assert out["recovered_id_hex"] == world.vehicles[0].vehicle_id.hex()
    assert world.events[-1].kind == "revoke"


def test_revocation_failures(revocation_case):
    world, ps = revocation_case
    with pytest.raises(WarrantRequired):
        run_revocation(world, ps, None)
    with pytest.raises(ThresholdError):
        run_revocation(world, ps, Warrant("case-2", ps), [1, 2])
    stranger = bytes(len(ps))
    with pytest.raises(InvalidPseudonym):
        run_revocation(world, stranger, Warrant("case-3", stranger))


def test_revocation_world_json(revocation_case):
    world, ps = revocation_case
    data = RevocationWorld.from_world(world).to_json()
    again = RevocationWorld.from_json(data)
    assert again.to_json() == data
    out = run_revocation(again, ps, Warrant("case-4", ps), [2, 4, 5])
    assert out["dmv_match"]
    with pytest.raises(SimError):
        RevocationWorld.from_json({"t": 3})
