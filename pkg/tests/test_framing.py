import math
import os
import zlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacsync.errors import (
    CrcMismatchError,
    FramingError,
    PacketLengthError,
    UnsupportedVersionError,
)
from tacsync.framing import (
    Packet,
    cobs_decode,
    cobs_encode,
    packet_parse,
    packet_serialize,
)
from tacsync.rng import Rng

GOLDEN_PATH = os.path.join(os.path.dirname(__file__), "data", "golden_packets.hex")


# hand-traced stuffing vectors
COBS_VECTORS = [
    (b"", bytes([0x01, 0x00])),
    (b"\x00", bytes([0x01, 0x01, 0x00])),
    (bytes([0x11, 0x22, 0x00, 0x33]), bytes([0x03, 0x11, 0x22, 0x02, 0x33, 0x00])),
    (b"\x00\x00", bytes([0x01, 0x01, 0x01, 0x00])),
    (bytes(range(1, 255)), bytes([0xFF]) + bytes(range(1, 255)) + bytes([0x00])),
]


@pytest.mark.parametrize("data,encoded", COBS_VECTORS)
def test_cobs_golden_vectors(data, encoded):
    assert cobs_encode(data) == encoded
    assert cobs_decode(encoded) == data


def test_cobs_only_trailing_zero():
    enc = cobs_encode(bytes(255) + bytes(range(256)) * 3)
    assert enc[-1] == 0
    assert 0 not in enc[:-1]


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=2048))
def test_cobs_roundtrip_property(data):
    enc = cobs_encode(data)
    assert enc[-1] == 0 and 0 not in enc[:-1]
    assert cobs_decode(enc) == data
    assert len(enc) <= len(data) + math.ceil(len(data) / 254) + 2


def test_cobs_decode_truncated_group():
    with pytest.raises(FramingError):
        cobs_decode(bytes([0x05, 0x11, 0x00]))


def test_cobs_decode_missing_delimiter_and_interior_zero():
    with pytest.raises(FramingError):
        cobs_decode(bytes([0x02, 0x11]))
    err = None
    try:
        cobs_decode(bytes([0x03, 0x11, 0x00, 0x02, 0x22, 0x00]))
    except FramingError as e:
        err = e
    assert err is not None and err.offset == 2


def test_cobs_encode_cap():
    with pytest.raises(PacketLengthError):
        cobs_encode(bytes((1 << 24) + 1))


def make_packet(rng, payload_len):
    return Packet(
        sensor_id=int(rng.integers(0, 256, ())),
        round_id=int(rng.integers(0, 1 << 31, ())),
        capture_time_us=int(rng.integers(0, 1 << 62, ())),
        payload=rng.bytes(payload_len),
    )


def test_packet_roundtrip_randomized():
    rng = Rng(2024)
    for _ in range(200):
        p = make_packet(rng, int(rng.integers(0, 600, ())))
        assert packet_parse(packet_serialize(p)) == p


def test_packet_roundtrip_empty_and_paper_frame_size():
    rng = Rng(1)
    for n in (0, 20480):
        p = make_packet(rng, n)
        back = packet_parse(packet_serialize(p))
        assert back.payload == p.payload and back.round_id == p.round_id


def test_version_gate():
    p = Packet(sensor_id=1, round_id=2, capture_time_us=3, payload=b"xy", version=2)
    with pytest.raises(UnsupportedVersionError):
        packet_parse(packet_serialize(p))


def test_crc_error_is_distinguishable_from_framing():
    p = Packet(sensor_id=1, round_id=2, capture_time_us=3, payload=b"hello")
    framed = bytearray(packet_serialize(p))
    # corrupt one payload byte without creating a zero (framing stays valid)
    idx = framed.index(b"hello"[0])
    framed[idx] ^= 0x01
    with pytest.raises(CrcMismatchError):
        packet_parse(bytes(framed))


def test_declared_length_mismatch_detected():
    p = Packet(sensor_id=0, round_id=0, capture_time_us=0, payload=b"abcdef")
    raw = cobs_decode(packet_serialize(p))
    # drop the last payload byte and re-crc: declared length no longer fits
    body = raw[:-4][:-1]
    fixed = body + zlib.crc32(body).to_bytes(4, "little")
    with pytest.raises(PacketLengthError):
        packet_parse(cobs_encode(fixed))


def test_single_bit_flips_all_detected():
    p = Packet(sensor_id=3, round_id=77, capture_time_us=123456,
               payload=Rng(5).bytes(48))
    framed = packet_serialize(p)
    for byte_idx in range(len(framed)):
        for bit in range(8):
            corrupted = bytearray(framed)
            corrupted[byte_idx] ^= 1 << bit
            with pytest.raises((FramingError, CrcMismatchError,
                                PacketLengthError, UnsupportedVersionError)):
                packet_parse(bytes(corrupted))


def test_golden_packets_file():
    """The shipped hex dump is the wire-format contract for three packets."""
    packets = [
        Packet(sensor_id=0, round_id=0, capture_time_us=0, payload=b""),
        Packet(sensor_id=1, round_id=7, capture_time_us=33768,
               payload=bytes([0x00, 0x11, 0x22, 0x00, 0x33])),
        Packet(sensor_id=6, round_id=4096, capture_time_us=29672,
               payload=Rng(1234).bytes(64)),
    ]
    lines = [packet_serialize(p).hex() for p in packets]
    with open(GOLDEN_PATH) as fh:
        golden = [ln.strip() for ln in fh if ln.strip()]
    assert lines == golden
    for ln in golden:
        packet_parse(bytes.fromhex(ln))
