"""DMA and PHA handshakes between OBU, plate and CSPA."""

import random

import pytest

from olevbill import crypto
from olevbill.crypto import OpCounts
from olevbill.cspa import BillEntry
from olevbill.errors import CAUSES, AuthFailure
from olevbill.metrics import expected_dma_counts
from olevbill.obu import (
    HashChain,
    ObuBillLog,
    ObuError,
    ObuSession,
    build_charging_request,
    build_dma_request,
    finalize_dma,
    log_bill,
    next_chain_member,
)
from olevbill.plate import (
    MAX_TRIES,
    Behavior,
    build_dma_reply,
    handle_charging_request_dma,
    relay_pha,
    relay_pha_charging,
    replay_seen_member,
    transfer_and_bill,
    verify_dma_request,
)
from olevbill.wire import DmaAuthReply, DmaAuthRequest


def _handshake(setup, trm, plate, ps=None, r_c=b"\x11" * 8):
    h2, h3 = setup.register(trm)
    setup.sync(plate)
    plate.begin_session()
    req, session = build_dma_request(trm, h2, h3, ps or trm.next_pseudonym(), plate.index)
    verified = verify_dma_request(plate, req)
    reply, sk_cp = build_dma_reply(plate, verified, r_c)
    return req, session, verified, reply, sk_cp


def test_dma_handshake(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    req, session, verified, reply, sk_cp = _handshake(setup, trm, plate)
    assert verified.ps_bytes == session.ps_bytes
    assert verified.x_obu == trm.x_obu
    sk = finalize_dma(session, reply)
    assert sk == sk_cp == crypto.digest(session.ps_bytes + b"\x11" * 8)
    assert session.h1 == setup.cspa.h1_for(trm.x_obu)
    assert crypto.xor_bytes(reply.c4, b"\x11" * 8) == plate.plate_id


def test_dma_op_counts(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    _, session, _, reply, _ = _handshake(setup, trm, plate)
    finalize_dma(session, reply)
    assert session.auth_counts == expected_dma_counts("OBU") == OpCounts(hash=3, xor=2)
    assert plate.auth_counts == expected_dma_counts("CP") == OpCounts(hash=6, xor=5)
    assert plate.session_counts == OpCounts(hash=1, xor=1)
    assert session.session_counts == OpCounts(hash=3, xor=2)


def test_dma_request_is_deterministic(setup):
    _, trm = setup.vehicle()
    h2, h3 = setup.register(trm)
    ps = trm.next_pseudonym()
    a, _ = build_dma_request(trm, h2, h3, ps)
    b, _ = build_dma_request(trm, h2, h3, ps)
    assert a.to_bytes() == b.to_bytes()
    assert len(a.to_bytes()) == 296


@pytest.mark.parametrize("field", ["c1", "c2", "c3", "h3"])
def test_dma_bit_flips_rejected(setup, field):
    _, trm = setup.vehicle()
    plate = setup.plate()
    h2, h3 = setup.register(trm)
    setup.sync(plate)
    req, _ = build_dma_request(trm, h2, h3, trm.next_pseudonym())
    value = bytearray(getattr(req, field))
    for bit in range(0, len(value) * 8, 13):
        plate.begin_session()
        mutated = bytearray(value)
        mutated[bit // 8] ^= 1 << (bit % 8)
        forged = DmaAuthRequest(**{**req.__dict__, field: bytes(mutated)})
        with pytest.raises(AuthFailure) as exc:
            verify_dma_request(plate, forged)
        assert exc.value.cause in ("c3_mismatch", "unknown_x_obu", "bad_signature")


def test_dma_stale_epoch(setup):
    _, trm = setup.vehicle()
    h2, h3 = setup.register(trm, 0.0)
    plate = setup.plate(t=150.0)
    req, _ = build_dma_request(trm, h2, h3, trm.next_pseudonym())
    with pytest.raises(AuthFailure) as exc:
        verify_dma_request(plate, req)
    assert exc.value.cause == "c3_mismatch"


def test_dma_unregistered_vehicle(setup):
    _, trm = setup.vehicle()
    _, outsider = setup.vehicle()
    h2, h3 = setup.register(trm)
    plate = setup.plate()
    # a vehicle with valid pseudonyms but not on the roster, borrowing H2/H3
    req, _ = build_dma_request(outsider, h2, h3, outsider.next_pseudonym())
    with pytest.raises(AuthFailure) as exc:
        verify_dma_request(plate, req)
    assert exc.value.cause in ("c3_mismatch", "unknown_x_obu")


def test_max_tries(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    h2, h3 = setup.register(trm)
    setup.sync(plate)
    req, _ = build_dma_request(trm, h2, h3, trm.next_pseudonym())
    bad = DmaAuthRequest(req.c1, req.c2, bytes(64), req.h3)
    plate.begin_session()
    for _ in range(MAX_TRIES):
        with pytest.raises(AuthFailure):
            verify_dma_request(plate, bad)
    with pytest.raises(AuthFailure) as exc:
        verify_dma_request(plate, req)
    assert exc.value.cause == "tries_exhausted"
    assert plate.attempts == MAX_TRIES


def test_finalize_rejects_tampered_reply(setup):
    _, trm = setup.vehicle()
    _, session, _, reply, _ = _handshake(setup, trm, setup.plate())
    c5 = bytearray(reply.c5)
    c5[0] ^= 1
    with pytest.raises(AuthFailure) as exc:
        finalize_dma(session, DmaAuthReply(reply.c4, bytes(c5), reply.c6, reply.c7))
    assert exc.value.cause == "c6_mismatch"


def test_finalize_rejects_plate_without_msk(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    h2, h3 = setup.register(trm)
    req, session = build_dma_request(trm, h2, h3, trm.next_pseudonym())
    plate.msk = crypto.digest(b"impostor")
    with pytest.raises(AuthFailure):
        verify_dma_request(plate, req)


def test_dma_charging_request(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    _, session, _, reply, _ = _handshake(setup, trm, plate)
    finalize_dma(session, reply)
    frame = build_charging_request(trm, session, 1000)
    assert len(frame) == 175
    ack = handle_charging_request_dma(plate, frame, 1001, 300)
    assert ack[0] == 0x06
    assert ack[7:111] == session.ps_bytes
    mac = ack[111:]
    assert mac == trm.mac(ack[1:7] + b"\x01" + session.ps_bytes)
    with pytest.raises(AuthFailure) as exc:
        handle_charging_request_dma(plate, frame, 1002, 300)
    assert exc.value.cause == "stale_timestamp"
    late = build_charging_request(trm, session, 2000)
    with pytest.raises(AuthFailure) as exc:
        handle_charging_request_dma(plate, late, 5000, 300)
    assert exc.value.cause == "stale_timestamp"


def test_dma_charging_request_wrong_key(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    _, session, _, reply, _ = _handshake(setup, trm, plate)
    finalize_dma(session, reply)
    rng = random.Random(5)
    for _ in range(50):
        session.session_key = rng.randbytes(64)
        with pytest.raises(AuthFailure) as exc:
            handle_charging_request_dma(plate, build_charging_request(trm, session, 10), 10, 100)
        assert exc.value.cause == "malformed"


def test_charging_request_consent_and_key(setup):
    _, trm = setup.vehicle()
    _, session, _, reply, _ = _handshake(setup, trm, setup.plate())
    assert build_charging_request(trm, session, 1, consent=False) is None
    with pytest.raises(ObuError):
        build_charging_request(trm, session, 1)


def _pha_setup(setup, n):
    _, trm = setup.vehicle()
    chain = HashChain.issue(trm.next_pseudonym(), n)
    setup.cspa.register_chain(trm.x_obu, chain.head, trm.certificate, n)
    return trm, chain


def test_pha_handshake_and_charging(setup):
    trm, chain = _pha_setup(setup, 8)
    plate = setup.plate()
    member = next_chain_member(chain)
    assert member == crypto.hash_chain(chain.pseudonym, 7)
    resp = relay_pha(plate, member, trm.x_obu, 100, setup.cspa)
    chain.confirm()
    assert resp.ok and len(resp.to_bytes()) == 66
    session = ObuSession("PHA", plate.index, session_key=trm.open_envelope(resp.envelope))
    frame = build_charging_request(trm, session, 200)
    assert len(frame) == 135
    reply = relay_pha_charging(plate, setup.cspa, trm.x_obu, frame, 201, 300)
    assert reply[6:70] == trm.x_obu
    assert reply[70:] == trm.mac(reply[:6] + b"\x01" + trm.x_obu)


def test_pha_chain_drain(setup):
    trm, chain = _pha_setup(setup, 8)
    plate = setup.plate()
    ok = 0
    for ts in range(20):
        try:
            relay_pha(plate, next_chain_member(chain), trm.x_obu, ts, setup.cspa)
        except AuthFailure as exc:
            assert exc.cause == "chain_exhausted"
            break
        chain.confirm()
        ok += 1
    assert ok == 7
    assert chain.remaining == 0


def test_pha_link_down_and_garbage(setup):
    trm, chain = _pha_setup(setup, 4)
    plate = setup.plate()
    plate.link_up = False
    with pytest.raises(AuthFailure) as exc:
        relay_pha(plate, next_chain_member(chain), trm.x_obu, 1, setup.cspa)
    assert exc.value.cause == "link_down"
    plate.link_up = True
    with pytest.raises(AuthFailure) as exc:
        relay_pha(plate, crypto.digest(b"garbage"), trm.x_obu, 1, setup.cspa)
    assert exc.value.cause == "hash_mismatch"


def test_plate_replay_rejected(setup):
    trm, chain = _pha_setup(setup, 4)
    plate = setup.plate()
    relay_pha(plate, next_chain_member(chain), trm.x_obu, 1, setup.cspa)
    with pytest.raises(AuthFailure) as exc:
        replay_seen_member(plate, trm.x_obu, 2, setup.cspa)
    assert exc.value.cause == "replay"


def test_transfer_and_bill(setup):
    _, trm = setup.vehicle()
    plate = setup.plate()
    _handshake(setup, trm, plate)
    entry = transfer_and_bill(plate, trm.x_obu, b"p" * 104, 0.1, 0.02, 5)
    assert (entry.cost, entry.plate, entry.timestamp) == (1, plate.index, 5)
    assert transfer_and_bill(plate, trm.x_obu, None, 0.01, 0.02, 5) is None
    plate.behavior, plate.deviate_mode = Behavior.DEVIATE, "overbill"
    entry = transfer_and_bill(plate, trm.x_obu, None, 0.1, 0.02, 6)
    assert entry.cost == 2
    assert not setup.cspa.record_bill(entry, "plate:3")
    assert setup.cspa.flags[-1].reason == "non_unit_cost"
    plate.begin_session()
    with pytest.raises(AuthFailure):
        transfer_and_bill(plate, trm.x_obu, None, 0.1, 0.02, 7)


def test_log_bill():
    log = ObuBillLog()
    assert log.total == 0 and log.to_jsonl() == ""
    for i in range(5):
        log_bill(log, BillEntry(i, b"x" * 64, None, i, 1))
    assert log.total == 5
    assert len(log.to_jsonl().splitlines()) == 5


def test_auth_failure_causes_closed():
    with pytest.raises(ValueError):
        AuthFailure("made_up")
    assert "timeout" in CAUSES
    err = AuthFailure("replay", "detail")
    assert (err.cause, err.detail) == ("replay", "detail")
