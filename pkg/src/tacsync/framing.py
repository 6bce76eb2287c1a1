"""Wire protocol: COBS byte stuffing, CRC-32, and the packet schema.

Packet byte layout (all integers little-endian), before framing:

    offset  size  field
    0       1     version (currently 1)
    1       1     sensor_id
    2       4     round_id
    6       8     capture_time_us
    14      4     payload_len
    18      n     payload (opaque bytes)
    18+n    4     crc32 over bytes [0, 18+n)

CRC-32 is the IEEE checksum (polynomial 0x04C11DB7, reflected, init and
final xor 0xFFFFFFFF), i.e. exactly ``zlib.crc32``. The serialized packet
is COBS-encoded so the single trailing 0x00 can delimit frames on a byte
stream.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .errors import (
    CrcMismatchError,
    FramingError,
    PacketLengthError,
    UnsupportedVersionError,
)

PROTOCOL_VERSION = 1
COBS_MAX_INPUT = 1 << 24
MAX_PAYLOAD = COBS_MAX_INPUT - 64  # headroom for header + crc inside one frame
_HEADER = struct.Struct("<BBIQI")  # version, sensor, round, time, payload_len


def cobs_encode(data: bytes) -> bytes:
    """COBS-encode ``data`` and append the 0x00 frame delimiter.

    The output contains no zero byte except the trailing delimiter;
    overhead is at most ceil(len/254) + 1 bytes plus the delimiter.
    """
    if len(data) > COBS_MAX_INPUT:
        raise PacketLengthError(f"input of {len(data)} bytes exceeds the framing cap")
    out = bytearray([0])  # placeholder for the first group code
    code_pos = 0
    code = 1
    for byte in data:
        if byte:
            out.append(byte)
            code += 1
        if byte == 0 or code == 0xFF:
            out[code_pos] = code
            code = 1
            code_pos = len(out)
            out.append(0)
    out[code_pos] = code
    # a full 0xFF group at the very end leaves a redundant empty group;
    # the canonical encoding omits it (a trailing zero's group must stay)
    if code == 1 and code_pos == len(out) - 1 and data and data[-1] != 0:
        out.pop()
    out.append(0)
    return bytes(out)


def cobs_decode(framed: bytes) -> bytes:
    """Invert :func:`cobs_encode`; raises FramingError with the bad offset."""
    if not framed or framed[-1] != 0:
        raise FramingError("missing trailing 0x00 delimiter", offset=len(framed))
    body = framed[:-1]
    if not body:
        raise FramingError("empty frame", offset=0)
    out = bytearray()
    i = 0
    while i < len(body):
        code = body[i]
        if code == 0:
            raise FramingError("interior 0x00 byte", offset=i)
        group = body[i + 1 : i + code]
        if len(group) != code - 1:
            raise FramingError("truncated group", offset=i)
        if 0 in group:
            raise FramingError("interior 0x00 byte", offset=i + 1 + group.index(0))
        out += group
        i += code
        if code != 0xFF and i < len(body):
            out.append(0)
    return bytes(out)


@dataclass(frozen=True)
class Packet:
    """One framed sensor message; payload bytes are opaque to the transport."""

    sensor_id: int
    round_id: int
    capture_time_us: int
    payload: bytes
    version: int = PROTOCOL_VERSION

    def __post_init__(self):
        if not (0 <= self.sensor_id < 256):
            raise PacketLengthError("sensor_id must fit one byte")
        if not (0 <= self.round_id < 1 << 32):
            raise PacketLengthError("round_id must fit four bytes")
        if not (0 <= self.capture_time_us < 1 << 64):
            raise PacketLengthError("capture_time_us must fit eight bytes")
        if len(self.payload) > MAX_PAYLOAD:
            raise PacketLengthError(
                f"payload of {len(self.payload)} bytes exceeds cap {MAX_PAYLOAD}"
            )


def packet_serialize(p: Packet) -> bytes:
    """Header || payload || crc32, COBS-framed."""
    head = _HEADER.pack(p.version, p.sensor_id, p.round_id,
                        p.capture_time_us, len(p.payload))
    body = head + p.payload
    crc = zlib.crc32(body) & 0xFFFFFFFF
    return cobs_encode(body + struct.pack("<I", crc))


def packet_parse(framed: bytes) -> Packet:
    """Parse one complete COBS frame into a validated Packet.

    Error taxonomy is deliberate: malformed COBS -> FramingError, short or
    inconsistent lengths -> PacketLengthError, bad version ->
    UnsupportedVersionError, checksum failure -> CrcMismatchError.
    """
    raw = cobs_decode(framed)
    if len(raw) < _HEADER.size + 4:
        raise PacketLengthError(f"frame decodes to {len(raw)} bytes, below minimum")
    version, sensor_id, round_id, capture_time_us, payload_len = _HEADER.unpack_from(raw)
    if version != PROTOCOL_VERSION:
        raise UnsupportedVersionError(f"version {version} not supported")
    if payload_len != len(raw) - _HEADER.size - 4:
        raise PacketLengthError(
            f"declared payload of {payload_len} bytes, frame carries "
            f"{len(raw) - _HEADER.size - 4}"
        )
    body, crc_bytes = raw[:-4], raw[-4:]
    crc = zlib.crc32(body) & 0xFFFFFFFF
    (expect,) = struct.unpack("<I", crc_bytes)
    if crc != expect:
        raise CrcMismatchError(f"crc 0x{crc:08x} != stored 0x{expect:08x}")
    return Packet(sensor_id=sensor_id, round_id=round_id,
                  capture_time_us=capture_time_us,
                  payload=raw[_HEADER.size:-4], version=version)
