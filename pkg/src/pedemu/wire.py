"""Bit-exact UDP frame codec for device exchange.

Everything is little-endian. A frame is a 9-byte header followed by a
fixed-layout payload:

    magic       4 B  "DPDM"
    version     1 B  currently 1
    msg_type    1 B
    payload_len 2 B  bytes of payload that follow
    reserved    1 B  written as 0, ignored on decode

Decode is total: any byte string either yields a message or raises one
of the typed errors below. Bytes after the declared payload are
tolerated (beacon frames arrive padded to a fixed size).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

MAGIC = b"DPDM"
VERSION = 1

HEADER = struct.Struct("<4sBBHB")
_BEACON = struct.Struct("<IBBddQ")
_MAP_HEAD = struct.Struct("<IfBBH")
_CELL = struct.Struct("<iifI")
_NODE_LOCATION = struct.Struct("<IddQ")

MAX_MAP_CELLS = 61

BEACON_FRAME_BYTES = HEADER.size + _BEACON.size
CELL_BYTES = _CELL.size

HEMI_N = 0
HEMI_S = 1


def map_frame_bytes(cell_count: int) -> int:
    """Total frame length of a density map carrying cell_count cells."""
    return HEADER.size + _MAP_HEAD.size + cell_count * CELL_BYTES


class MsgType(enum.IntEnum):
    BEACON = 0x01
    DENSITY_MAP = 0x02
    NODE_LOCATION = 0x03


class WireError(ValueError):
    pass


class BadMagic(WireError):
    pass


class BadVersion(WireError):
    pass


class LengthMismatch(WireError):
    pass


class UnknownType(WireError):
    pass


def _hemi_char(code: int) -> str:
    if code == HEMI_N:
        return "N"
    if code == HEMI_S:
        return "S"
    raise ValueError(f"hemisphere code {code} is neither 0 (N) nor 1 (S)")


def hemi_code(char: str) -> int:
    if char == "N":
        return HEMI_N
    if char == "S":
        return HEMI_S
    raise ValueError(f"hemisphere {char!r} is neither 'N' nor 'S'")


@dataclass(frozen=True)
class BeaconMsg:
    node_id: int
    zone: int
    hemisphere: int  # raw wire code; use hemisphere_char for "N"/"S"
    easting: float
    northing: float
    timestamp_ms: int

    @property
    def hemisphere_char(self) -> str:
        return _hemi_char(self.hemisphere)


@dataclass(frozen=True)
class MapCell:
    cell_x: int
    cell_y: int
    count: float
    age_ms: int


@dataclass(frozen=True)
class DensityMapMsg:
    node_id: int
    cell_size_m: float
    zone: int
    hemisphere: int
    cells: tuple[MapCell, ...]

    @property
    def hemisphere_char(self) -> str:
        return _hemi_char(self.hemisphere)


@dataclass(frozen=True)
class NodeLocationMsg:
    node_id: int
    lat: float
    lon: float
    sim_time_us: int


WireMessage = BeaconMsg | DensityMapMsg | NodeLocationMsg


def encode(msg: WireMessage) -> bytes:
    """Serialize a message into a complete frame (header + payload)."""
    if isinstance(msg, BeaconMsg):
        payload = _BEACON.pack(
            msg.node_id, msg.zone, msg.hemisphere,
            msg.easting, msg.northing, msg.timestamp_ms,
        )
        mtype = MsgType.BEACON
    elif isinstance(msg, DensityMapMsg):
        if len(msg.cells) > MAX_MAP_CELLS:
            raise ValueError(f"{len(msg.cells)} cells exceeds the {MAX_MAP_CELLS}-cell frame limit")
        parts = [_MAP_HEAD.pack(msg.node_id, msg.cell_size_m, msg.zone, msg.hemisphere, len(msg.cells))]
        parts.extend(_CELL.pack(c.cell_x, c.cell_y, c.count, c.age_ms) for c in msg.cells)
        payload = b"".join(parts)
        mtype = MsgType.DENSITY_MAP
    elif isinstance(msg, NodeLocationMsg):
        payload = _NODE_LOCATION.pack(msg.node_id, msg.lat, msg.lon, msg.sim_time_us)
        mtype = MsgType.NODE_LOCATION
    else:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    return HEADER.pack(MAGIC, VERSION, mtype, len(payload), 0) + payload


def decode(data: bytes) -> WireMessage:
    """Parse one frame. Trailing bytes beyond the declared payload are
    ignored. Raises BadMagic, BadVersion, LengthMismatch, or UnknownType."""
    if len(data) >= 4 and data[:4] != MAGIC:
        raise BadMagic(f"magic {data[:4]!r}")
    if len(data) < HEADER.size:
        raise LengthMismatch(f"{len(data)} bytes is shorter than the {HEADER.size}-byte header")
    _, version, mtype, payload_len, _reserved = HEADER.unpack_from(data)
    if version != VERSION:
        raise BadVersion(f"version {version}")
    body = data[HEADER.size:]
    if len(body) < payload_len:
        raise LengthMismatch(f"declared payload {payload_len} B, only {len(body)} B present")
    body = body[:payload_len]

    if mtype == MsgType.BEACON:
        if payload_len != _BEACON.size:
            raise LengthMismatch(f"beacon payload must be {_BEACON.size} B, got {payload_len}")
        node_id, zone, hemi, e, n, ts = _BEACON.unpack(body)
        return BeaconMsg(node_id, zone, hemi, e, n, ts)

    if mtype == MsgType.DENSITY_MAP:
        if payload_len < _MAP_HEAD.size:
            raise LengthMismatch(f"map payload must be at least {_MAP_HEAD.size} B, got {payload_len}")
        node_id, cell_size, zone, hemi, cell_count = _MAP_HEAD.unpack_from(body)
        expected = _MAP_HEAD.size + cell_count * _CELL.size
        if payload_len != expected:
            raise LengthMismatch(f"{cell_count} cells need {expected} B of payload, got {payload_len}")
        if cell_count > MAX_MAP_CELLS:
            raise LengthMismatch(f"{cell_count} cells exceeds the {MAX_MAP_CELLS}-cell frame limit")
        cells = tuple(
            MapCell(*_CELL.unpack_from(body, _MAP_HEAD.size + i * _CELL.size))
            for i in range(cell_count)
        )
        return DensityMapMsg(node_id, cell_size, zone, hemi, cells)

    if mtype == MsgType.NODE_LOCATION:
        if payload_len != _NODE_LOCATION.size:
            raise LengthMismatch(f"node location payload must be {_NODE_LOCATION.size} B, got {payload_len}")
        node_id, lat, lon, t = _NODE_LOCATION.unpack(body)
        return NodeLocationMsg(node_id, lat, lon, t)

    raise UnknownType(f"msg_type 0x{mtype:02x}")


def pad_frame(frame: bytes, total_len: int) -> bytes:
    """Right-pad a frame with zero bytes up to total_len."""
    if len(frame) > total_len:
        raise ValueError(f"frame is {len(frame)} B, longer than the {total_len} B target")
    return frame + bytes(total_len - len(frame))
