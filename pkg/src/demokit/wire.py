"""Binary wire format for streaming pose frames over TCP.

Every message is a little-endian length-prefixed frame:

    u32 length | u8 kind | payload

`length` counts the kind byte plus payload. Strings are u16 length plus
UTF-8 bytes; all floats are 64-bit IEEE-754. Message kinds:

    0x01 HELLO      u8 mode (0 pose, 1 raw hand) | u32 joint_count |
                    f64 frequency_hz | str id | str task_tag ("" = none)
    0x02 FRAME_POSE f64 t | 3f64 position | 4f64 orientation (w,x,y,z) |
                    u16 joint_count | Jf64 joints | u8 gripper
    0x03 FRAME_RAW  f64 t | 3f64 position | 4f64 orientation | f64 pinch
    0x04 END        u32 frame_count
    0x05 ACK        u32 frames_received | str path
    0x06 ERROR      str message

The format is deliberately trivial to emit from any client language.
See docs/protocol.md for the session rules.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from demokit.errors import FramingError, ProtocolError
from demokit.model import PoseFrame, RawHandFrame

MODE_POSE = 0
MODE_RAW_HAND = 1

KIND_HELLO = 0x01
KIND_FRAME_POSE = 0x02
KIND_FRAME_RAW = 0x03
KIND_END = 0x04
KIND_ACK = 0x05
KIND_ERROR = 0x06

DEFAULT_MAX_FRAME_BYTES = 1 << 20  # 1 MiB

_LEN = struct.Struct("<I")


@dataclass(frozen=True)
class Hello:
    mode: int
    joint_count: int
    frequency_hz: float
    id: str
    task_tag: str = ""


@dataclass(frozen=True)
class FramePose:
    frame: PoseFrame


@dataclass(frozen=True)
class FrameRaw:
    frame: RawHandFrame


@dataclass(frozen=True)
class End:
    count: int


@dataclass(frozen=True)
class Ack:
    count: int
    path: str = ""


@dataclass(frozen=True)
class Error:
    message: str


WireMessage = Hello | FramePose | FrameRaw | End | Ack | Error


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ProtocolError("string field exceeds 65535 bytes")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, payload: memoryview):
        self.buf = payload
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise ProtocolError("message payload truncated")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def take_str(self) -> str:
        (n,) = self.take("<H")
        if self.pos + n > len(self.buf):
            raise ProtocolError("string field truncated")
        raw = bytes(self.buf[self.pos : self.pos + n])
        self.pos += n
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"invalid UTF-8 in string field: {exc}") from exc

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise ProtocolError(
                f"message has {len(self.buf) - self.pos} trailing payload bytes"
            )


def encode_message(m: WireMessage) -> bytes:
    if isinstance(m, Hello):
        if m.mode not in (MODE_POSE, MODE_RAW_HAND):
            raise ProtocolError(f"bad HELLO mode {m.mode}")
        body = (
            bytes([KIND_HELLO])
            + struct.pack("<BId", m.mode, m.joint_count, m.frequency_hz)
            + _pack_str(m.id)
            + _pack_str(m.task_tag)
        )
    elif isinstance(m, FramePose):
        f = m.frame
        body = (
            bytes([KIND_FRAME_POSE])
            + struct.pack("<d3d4d", f.t, *f.position, *f.orientation)
            + struct.pack("<H", len(f.joints))
            + struct.pack(f"<{len(f.joints)}d", *f.joints)
            + struct.pack("<B", f.gripper)
        )
    elif isinstance(m, FrameRaw):
        f = m.frame
        body = bytes([KIND_FRAME_RAW]) + struct.pack(
            "<d3d4dd", f.t, *f.hand_position, *f.hand_orientation, f.pinch_distance
        )
    elif isinstance(m, End):
        body = bytes([KIND_END]) + struct.pack("<I", m.count)
    elif isinstance(m, Ack):
        body = bytes([KIND_ACK]) + struct.pack("<I", m.count) + _pack_str(m.path)
    elif isinstance(m, Error):
        body = bytes([KIND_ERROR]) + _pack_str(m.message)
    else:
        raise ProtocolError(f"cannot encode {type(m).__name__}")
    return _LEN.pack(len(body)) + body


def decode_message(
    data, max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES
) -> tuple[WireMessage | None, int]:
    """Decode one message from the head of `data`.

    Returns (message, bytes_consumed), or (None, 0) when the buffer does
    not yet hold a complete frame. Raises FramingError for an oversized
    length prefix and ProtocolError for structurally invalid payloads.
    """
    view = memoryview(data)
    if len(view) < _LEN.size:
        return None, 0
    (length,) = _LEN.unpack_from(view, 0)
    if length > max_frame_bytes:
        raise FramingError(
            f"frame of {length} bytes exceeds the {max_frame_bytes}-byte limit"
        )
    if length < 1:
        raise ProtocolError("empty frame (zero-length payload)")
    total = _LEN.size + length
    if len(view) < total:
        return None, 0
    kind = view[_LEN.size]
    r = _Reader(view[_LEN.size + 1 : total])
    if kind == KIND_HELLO:
        mode, joint_count, frequency_hz = r.take("<BId")
        if mode not in (MODE_POSE, MODE_RAW_HAND):
            raise ProtocolError(f"bad HELLO mode byte {mode}")
        ident = r.take_str()
        task_tag = r.take_str()
        r.done()
        return Hello(mode, joint_count, frequency_hz, ident, task_tag), total
    if kind == KIND_FRAME_POSE:
        values = r.take("<d3d4d")
        (joint_count,) = r.take("<H")
        joints = r.take(f"<{joint_count}d")
        (gripper,) = r.take("<B")
        r.done()
        frame = PoseFrame(
            t=values[0],
            position=values[1:4],
            orientation=values[4:8],
            joints=joints,
            gripper=gripper,
        )
        return FramePose(frame), total
    if kind == KIND_FRAME_RAW:
        values = r.take("<d3d4dd")
        r.done()
        frame = RawHandFrame(
            t=values[0],
            hand_position=values[1:4],
            hand_orientation=values[4:8],
            pinch_distance=values[8],
        )
        return FrameRaw(frame), total
    if kind == KIND_END:
        (count,) = r.take("<I")
        r.done()
        return End(count), total
    if kind == KIND_ACK:
        (count,) = r.take("<I")
        path = r.take_str()
        r.done()
        return Ack(count, path), total
    if kind == KIND_ERROR:
        message = r.take_str()
        r.done()
        return Error(message), total
    raise ProtocolError(f"unknown message kind byte 0x{kind:02X}")


class StreamDecoder:
    """Incremental decoder: feed arbitrary chunks, get complete messages.

    The message sequence is independent of how the byte stream is split.
    """

    def __init__(self, max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES):
        self.max_frame_bytes = max_frame_bytes
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[WireMessage]:
        self._buf.extend(data)
        out = []
        while True:
            msg, used = decode_message(self._buf, self.max_frame_bytes)
            if msg is None:
                return out
            del self._buf[:used]
            out.append(msg)

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
