"""Length-prefixed binary frames exchanged between tier daemons."""

from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass
from enum import IntEnum

from ..errors import FrameError

MAGIC = 0x45414946
VERSION = 1
HEADER = struct.Struct(">IBBQQ")
MAX_PAYLOAD = 1 << 34


class MsgType(IntEnum):
    INFER_REQ = 1
    INTERMEDIATE = 2
    RESULT = 3
    PING = 4
    SHUTDOWN = 5


@dataclass(frozen=True)
class WireMessage:
    msg_type: MsgType
    request_id: int
    payload: bytes = b""

    def __post_init__(self):
        try:
            object.__setattr__(self, "msg_type", MsgType(self.msg_type))
        except ValueError:
            raise FrameError(f"unknown message type {self.msg_type}") from None
        if not 0 <= self.request_id < 2**64:
            raise FrameError("request id must fit in u64")

    def encode(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, int(self.msg_type), self.request_id,
                           len(self.payload)) + self.payload


def decode_header(buf: bytes) -> tuple[MsgType, int, int]:
    if len(buf) != HEADER.size:
        raise FrameError(f"header needs {HEADER.size} bytes, got {len(buf)}")
    magic, version, mtype, rid, n = HEADER.unpack(buf)
    if magic != MAGIC:
        raise FrameError(f"bad magic 0x{magic:08x}")
    if version != VERSION:
        raise FrameError(f"unsupported version {version}")
    try:
        mtype = MsgType(mtype)
    except ValueError:
        raise FrameError(f"unknown message type {mtype}") from None
    if n > MAX_PAYLOAD:
        raise FrameError(f"payload length {n} too large")
    return mtype, rid, n


def decode(buf: bytes) -> tuple[WireMessage, int]:
    """Decode one frame from the front of ``buf``; returns (message, bytes consumed)."""
    if len(buf) < HEADER.size:
        raise FrameError("truncated header")
    mtype, rid, n = decode_header(bytes(buf[:HEADER.size]))
    end = HEADER.size + n
    if len(buf) < end:
        raise FrameError(f"truncated payload: want {n}, have {len(buf) - HEADER.size}")
    return WireMessage(mtype, rid, bytes(buf[HEADER.size:end])), end


def recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    left = n
    while left:
        chunk = sock.recv(min(left, 1 << 20))
        if not chunk:
            raise FrameError("connection closed mid-frame")
        chunks.append(chunk)
        left -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> WireMessage | None:
    """Next frame, or None on a clean close between frames."""
    first = sock.recv(HEADER.size)
    if not first:
        return None
    head = first if len(first) == HEADER.size else first + recv_exact(sock, HEADER.size - len(first))
    mtype, rid, n = decode_header(head)
    return WireMessage(mtype, rid, recv_exact(sock, n) if n else b"")


def write_frame(sock: socket.socket, msg: WireMessage, shaper=None) -> None:
    data = msg.encode()
    if shaper is None:
        sock.sendall(data)
    else:
        shaper.send(sock, data)


def pack_body(meta: dict, filler_bytes: int = 0) -> bytes:
    """Payload layout: u32 length, JSON metadata, then zero filler standing in for tensor data."""
    blob = json.dumps(meta, sort_keys=True).encode()
    return struct.pack(">I", len(blob)) + blob + bytes(filler_bytes)


def unpack_body(payload: bytes) -> tuple[dict, int]:
    if len(payload) < 4:
        raise FrameError("payload lacks metadata header")
    (n,) = struct.unpack(">I", payload[:4])
    if 4 + n > len(payload):
        raise FrameError("metadata length exceeds payload")
    try:
        meta = json.loads(payload[4:4 + n])
    except ValueError as e:
        raise FrameError(f"bad metadata: {e}") from None
    return meta, len(payload) - 4 - n
