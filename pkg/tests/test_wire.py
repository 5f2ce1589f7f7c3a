import pytest
from hypothesis import given
from hypothesis import strategies as st

from olevbill.wire import (
    BillRecord,
    DmaAuthReply,
    DmaAuthRequest,
    MessageKind,
    PhaAuthRequest,
    PhaAuthResponse,
    PhaForward,
    WireError,
    decode_timestamp,
    encode_timestamp,
    frame,
    iter_frames,
    unframe,
)


def _b(n):
    return st.binary(min_size=n, max_size=n)


@given(st.sampled_from(list(MessageKind)), st.binary(max_size=600))
def test_frame_round_trip(kind, payload):
    data = frame(kind, payload)
    assert len(data) == 5 + len(payload)
    assert unframe(data + b"tail") == (kind, payload, b"tail")


@given(st.lists(st.tuples(st.sampled_from(list(MessageKind)), st.binary(max_size=50)), max_size=8))
def test_iter_frames(messages):
    stream = b"".join(frame(k, p) for k, p in messages)
    assert list(iter_frames(stream)) == messages


def test_unframe_errors():
    with pytest.raises(WireError):
        unframe(b"\x01\x00")
    with pytest.raises(WireError):
        unframe(frame(MessageKind.CHARGING_ACK, b"abc")[:-1])
    with pytest.raises(WireError):
        unframe(b"\x63\x00\x00\x00\x00")


@given(st.integers(0, (1 << 48) - 1))
def test_timestamp_round_trip(ms):
    assert decode_timestamp(encode_timestamp(ms)) == ms
    assert len(encode_timestamp(ms)) == 6


def test_timestamp_range():
    with pytest.raises(WireError):
        encode_timestamp(1 << 48)
    with pytest.raises(WireError):
        encode_timestamp(-1)


@given(_b(104), _b(64), _b(64), _b(64))
def test_dma_request_layout(c1, c2, c3, h3):
    req = DmaAuthRequest(c1, c2, c3, h3)
    raw = req.to_bytes()
    assert raw == c1 + c2 + c3 + h3 and len(raw) == 296
    assert DmaAuthRequest.from_bytes(raw) == req


@given(_b(8), _b(8), _b(64), _b(64))
def test_dma_reply_layout(c4, c5, c6, c7):
    rep = DmaAuthReply(c4, c5, c6, c7)
    assert len(rep.to_bytes()) == 144
    assert DmaAuthReply.from_bytes(rep.to_bytes()) == rep


@given(_b(64), _b(64), st.integers(0, (1 << 48) - 1))
def test_pha_layouts(member, x_obu, ts):
    assert PhaAuthRequest.from_bytes(PhaAuthRequest(member, x_obu).to_bytes()) == PhaAuthRequest(member, x_obu)
    fwd = PhaForward(ts, member, x_obu)
    assert len(fwd.to_bytes()) == 134
    assert PhaForward.from_bytes(fwd.to_bytes()) == fwd


def test_pha_response():
    r = PhaAuthResponse(True, b"e" * 65)
    assert PhaAuthResponse.from_bytes(r.to_bytes()) == r
    with pytest.raises(WireError):
        PhaAuthResponse.from_bytes(b"")


@pytest.mark.parametrize("ps,size", [(None, 82), (b"p" * 104, 186)], ids=["no-pseudonym", "with-pseudonym"])
def test_bill_record(ps, size):
    rec = BillRecord(1234, b"\x00" * 7 + b"\x05", b"x" * 64, 1, ps)
    assert len(rec.to_bytes()) == size
    assert BillRecord.from_bytes(rec.to_bytes()) == rec
    with pytest.raises(WireError):
        BillRecord.from_bytes(rec.to_bytes()[:-1])


def test_wrong_lengths_rejected():
    with pytest.raises(WireError):
        DmaAuthRequest.from_bytes(bytes(295))
    with pytest.raises(WireError):
        DmaAuthReply.from_bytes(bytes(145))
    with pytest.raises(WireError):
        PhaForward.from_bytes(bytes(10))
