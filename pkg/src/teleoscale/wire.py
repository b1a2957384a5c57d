"""Bit-exact binary encoding for telecommands and feedback messages.

Layout (little endian), 87 bytes for either message type::

    u8  magic        0x54 telecommand / 0x46 feedback
    u8  version      currently 1
    u64 seq
    u64 send_tick
    3*f64            delta_p_scaled (telecommand) or follower position (feedback)
    4*f64            orientation quaternion (w, x, y, z)
    f64 gripper      telecommand only; feedback carries u64 frame_id here
    u8  flags        bit 0 = clutched (telecommand); reserved zero for feedback
    u32 crc32        over all preceding bytes

Decode failures raise WireDecodeError naming the offending field.
"""

from __future__ import annotations

import struct
import zlib

from .channel import FeedbackMsg
from .errors import WireDecodeError
from .scaling import Telecommand

MAGIC_TELECOMMAND = 0x54
MAGIC_FEEDBACK = 0x46
WIRE_VERSION = 1

_TELE_FMT = "<BBQQddddddddB"
_FB_FMT = "<BBQQdddddddQB"
MESSAGE_SIZE = struct.calcsize(_TELE_FMT) + 4
assert MESSAGE_SIZE == 87
assert struct.calcsize(_FB_FMT) + 4 == MESSAGE_SIZE

_FLAG_CLUTCHED = 0x01


def serialize(msg) -> bytes:
    """Encode a Telecommand or FeedbackMsg; round-trips through deserialize."""
    if isinstance(msg, Telecommand):
        body = struct.pack(
            _TELE_FMT,
            MAGIC_TELECOMMAND,
            WIRE_VERSION,
            msg.seq,
            msg.send_tick,
            *msg.delta_p_scaled,
            *msg.orientation,
            msg.gripper,
            _FLAG_CLUTCHED if msg.clutched else 0,
        )
    elif isinstance(msg, FeedbackMsg):
        body = struct.pack(
            _FB_FMT,
            MAGIC_FEEDBACK,
            WIRE_VERSION,
            msg.seq,
            msg.send_tick,
            *msg.position,
            *msg.orientation,
            msg.frame_id,
            0,
        )
    else:
        raise TypeError(f"cannot serialize {type(msg).__name__}")
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize(data: bytes):
    """Decode one wire message; inverse of serialize."""
    if len(data) != MESSAGE_SIZE:
        raise WireDecodeError(f"length: expected {MESSAGE_SIZE} bytes, got {len(data)}")
    magic = data[0]
    if magic not in (MAGIC_TELECOMMAND, MAGIC_FEEDBACK):
        raise WireDecodeError(f"magic: unknown message byte 0x{magic:02x}")
    if data[1] != WIRE_VERSION:
        raise WireDecodeError(f"version: expected {WIRE_VERSION}, got {data[1]}")
    (crc,) = struct.unpack_from("<I", data, MESSAGE_SIZE - 4)
    actual = zlib.crc32(data[:-4])
    if crc != actual:
        raise WireDecodeError(f"crc: stored 0x{crc:08x} != computed 0x{actual:08x}")
    if magic == MAGIC_TELECOMMAND:
        (_, _, seq, tick, dx, dy, dz, qw, qx, qy, qz, gripper, flags) = struct.unpack(
            _TELE_FMT, data[:-4]
        )
        return Telecommand(
            seq=seq,
            send_tick=tick,
            delta_p_scaled=(dx, dy, dz),
            orientation=(qw, qx, qy, qz),
            gripper=gripper,
            clutched=bool(flags & _FLAG_CLUTCHED),
        )
    (_, _, seq, tick, px, py, pz, qw, qx, qy, qz, frame_id, _) = struct.unpack(
        _FB_FMT, data[:-4]
    )
    return FeedbackMsg(
        seq=seq,
        send_tick=tick,
        position=(px, py, pz),
        orientation=(qw, qx, qy, qz),
        frame_id=frame_id,
    )
