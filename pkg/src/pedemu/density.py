"""Decentralized pedestrian-density maps.

Each node aggregates the position beacons it hears into a grid of cells
(keyed by UTM coordinates), broadcasts its map, and merges maps received
from others into a wider picture. Merge is youngest-wins per cell with a
total tie-break, which makes it idempotent, commutative, and associative
regardless of delivery order or re-broadcast loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, TextIO

from .core import SimTime, US_PER_S
from .geo import UtmPoint
from . import wire

DEFAULT_CELL_SIZE = 3.0
DEFAULT_NEIGHBOR_TTL_S = 3.0
DEFAULT_MAP_TTL_S = 10.0


@dataclass(frozen=True)
class DpdConfig:
    cell_size_m: float = DEFAULT_CELL_SIZE
    neighbor_ttl_s: float = DEFAULT_NEIGHBOR_TTL_S
    map_ttl_s: float = DEFAULT_MAP_TTL_S

    def __post_init__(self):
        for name in ("cell_size_m", "neighbor_ttl_s", "map_ttl_s"):
            v = getattr(self, name)
            if not (v > 0):
                raise ValueError(f"{name} must be positive, got {v}")


class CellKey(NamedTuple):
    cell_x: int
    cell_y: int


def cell_key(easting: float, northing: float, cell_size: float) -> CellKey:
    return CellKey(math.floor(easting / cell_size), math.floor(northing / cell_size))


def cell_corner(key: CellKey, cell_size: float) -> tuple[float, float]:
    """Top-left corner (min easting, max northing) identifying the cell."""
    return (key.cell_x * cell_size, (key.cell_y + 1) * cell_size)


@dataclass(frozen=True)
class Beacon:
    node_id: int
    position: UtmPoint
    timestamp: SimTime


@dataclass(frozen=True)
class CellEntry:
    count: float
    last_update: SimTime
    source_id: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"cell count {self.count} is negative")


def _preference(e: CellEntry) -> tuple:
    # total order: newer wins, then larger count, then smaller source id
    return (e.last_update, e.count, -e.source_id)


@dataclass
class DensityMap:
    cell_size: float = DEFAULT_CELL_SIZE
    entries: dict[CellKey, CellEntry] = field(default_factory=dict)

    def expire(self, now: SimTime, map_ttl_s: float = DEFAULT_MAP_TTL_S) -> None:
        limit = int(map_ttl_s * US_PER_S)
        dead = [k for k, e in self.entries.items() if now - e.last_update >= limit]
        for k in dead:
            del self.entries[k]

    def total_count(self) -> float:
        return sum(e.count for e in self.entries.values())


@dataclass
class _NeighborEntry:
    position: UtmPoint
    last_heard: SimTime
    beacon_timestamp: SimTime


class NeighborTable:
    """Positions of recently-heard peers. Entries expire neighbor_ttl
    seconds after the last beacon; the owning node never appears."""

    def __init__(self, own_id: int, neighbor_ttl_s: float = DEFAULT_NEIGHBOR_TTL_S):
        self.own_id = own_id
        self.neighbor_ttl_s = neighbor_ttl_s
        self._entries: dict[int, _NeighborEntry] = {}
        self.stale_dropped = 0

    def on_beacon(self, b: Beacon, now: SimTime) -> None:
        if b.node_id == self.own_id:
            return
        existing = self._entries.get(b.node_id)
        if existing is not None and b.timestamp < existing.beacon_timestamp:
            self.stale_dropped += 1
            return
        self._entries[b.node_id] = _NeighborEntry(b.position, now, b.timestamp)

    def live(self, now: SimTime) -> dict[int, UtmPoint]:
        limit = int(self.neighbor_ttl_s * US_PER_S)
        dead = [nid for nid, e in self._entries.items() if now - e.last_heard >= limit]
        for nid in dead:
            del self._entries[nid]
        return {nid: e.position for nid, e in self._entries.items()}

    def __len__(self) -> int:
        return len(self._entries)


def local_map(
    table: NeighborTable,
    own_position: UtmPoint,
    now: SimTime,
    cell_size: float = DEFAULT_CELL_SIZE,
) -> DensityMap:
    """Count live neighbors per cell; the measuring node counts itself."""
    counts: dict[CellKey, float] = {}
    for pos in table.live(now).values():
        k = cell_key(pos.easting, pos.northing, cell_size)
        counts[k] = counts.get(k, 0.0) + 1.0
    own_key = cell_key(own_position.easting, own_position.northing, cell_size)
    counts[own_key] = counts.get(own_key, 0.0) + 1.0
    entries = {k: CellEntry(c, now, table.own_id) for k, c in counts.items()}
    return DensityMap(cell_size, entries)


def merge(
    own: DensityMap,
    received: DensityMap,
    now: SimTime,
    map_ttl_s: float = DEFAULT_MAP_TTL_S,
) -> DensityMap:
    """Pointwise youngest-wins combination of two maps."""
    if own.cell_size != received.cell_size:
        raise ValueError(f"cell size mismatch: {own.cell_size} vs {received.cell_size}")
    entries = dict(own.entries)
    for k, e in received.entries.items():
        mine = entries.get(k)
        if mine is None or _preference(e) > _preference(mine):
            entries[k] = e
    result = DensityMap(own.cell_size, entries)
    result.expire(now, map_ttl_s)
    return result


def select_cells(m: DensityMap, limit: int = wire.MAX_MAP_CELLS) -> list[tuple[CellKey, CellEntry]]:
    """The cells a bounded frame carries: freshest first, deterministic."""
    ordered = sorted(
        m.entries.items(),
        key=lambda kv: (-kv[1].last_update, kv[0].cell_x, kv[0].cell_y),
    )
    return ordered[:limit]


def encode_map(
    m: DensityMap,
    node_id: int,
    zone: int,
    hemisphere: str,
    now: SimTime,
    limit: int = wire.MAX_MAP_CELLS,
) -> tuple[bytes, int]:
    """Serialize a map into one frame; returns (frame, cells dropped).

    At most 61 cells fit the 1000-byte budget; the freshest survive.
    """
    chosen = select_cells(m, limit)
    cells = tuple(
        wire.MapCell(k.cell_x, k.cell_y, e.count, max(0, (now - e.last_update) // 1000))
        for k, e in chosen
    )
    msg = wire.DensityMapMsg(node_id, m.cell_size, zone, wire.hemi_code(hemisphere), cells)
    return wire.encode(msg), len(m.entries) - len(chosen)


def decode_map(msg: wire.DensityMapMsg, now: SimTime) -> DensityMap:
    """Rebuild a map from a received frame. Cell ages are relative on the
    wire, so last_update is reconstructed against the receiver's clock and
    the entries are attributed to the sending node."""
    entries = {
        CellKey(c.cell_x, c.cell_y): CellEntry(c.count, now - c.age_ms * 1000, msg.node_id)
        for c in msg.cells
    }
    return DensityMap(float(msg.cell_size_m), entries)


def write_map_snapshot(
    out: TextIO,
    t_sim_s: float,
    node_id: int,
    m: DensityMap,
    now: SimTime,
) -> None:
    """Append one node's map to a snapshot CSV, cells in key order."""
    for k in sorted(m.entries):
        e = m.entries[k]
        age_s = (now - e.last_update) / US_PER_S
        out.write(f"{t_sim_s:.3f},{node_id},{k.cell_x},{k.cell_y},{e.count:g},{age_s:.3f}\n")


MAP_SNAPSHOT_HEADER = "t_sim_s,node_id,cell_x,cell_y,count,age_s\n"
