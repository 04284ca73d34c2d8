"""Per-node application layer: periodic beacons and density-map exchange.

Every node runs two independent periodic apps over the shared radio. The
beacon app announces the node's own position once per second in a frame
padded to a fixed size; the map app broadcasts the node's merged density
map every two seconds. Start phases are jittered per node so a fleet does
not transmit in lockstep, but after the jittered start each app ticks on
an exact arithmetic schedule.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .core import Simulator, SimTime, us
from .geo import GeoError, OffsetTransform, SimPoint, UtmPoint
from .radio import RadioChannel
from . import density, wire


@dataclass(frozen=True)
class AppConfig:
    beacon_period_s: float = 1.0
    beacon_payload_bytes: int = 224
    map_period_s: float = 2.0
    map_payload_max_bytes: int = 1000

    def __post_init__(self):
        if not (self.beacon_period_s > 0):
            raise ValueError(f"beacon_period_s must be positive, got {self.beacon_period_s}")
        if not (self.map_period_s > 0):
            raise ValueError(f"map_period_s must be positive, got {self.map_period_s}")
        if self.beacon_payload_bytes < wire.BEACON_FRAME_BYTES:
            raise ValueError(
                f"beacon_payload_bytes must fit an encoded beacon "
                f"({wire.BEACON_FRAME_BYTES} B), got {self.beacon_payload_bytes}"
            )
        # head frame plus at least the node's own cell
        if self.map_payload_max_bytes < wire.map_frame_bytes(1):
            raise ValueError(
                f"map_payload_max_bytes must fit a one-cell map "
                f"({wire.map_frame_bytes(1)} B), got {self.map_payload_max_bytes}"
            )

    @property
    def map_cell_limit(self) -> int:
        """How many cells the configured frame budget can carry."""
        room = (self.map_payload_max_bytes - wire.map_frame_bytes(0)) // wire.CELL_BYTES
        return min(wire.MAX_MAP_CELLS, room)


@dataclass
class AppCounters:
    """Per-node message bookkeeping, reported at the end of a run."""

    beacons_sent: int = 0
    maps_sent: int = 0
    beacons_received: int = 0
    maps_received: int = 0
    decode_failed: int = 0
    cell_size_rejected: int = 0
    zone_rejected: int = 0
    unexpected_type: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


def _f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


class Node:
    """One radio participant: beacons its position, aggregates density maps.

    The node holds a mutable ``position`` in simulation coordinates (the
    mobility layer moves it), a neighbor table fed by received beacons,
    and one merged density map that accumulates everything heard.
    """

    def __init__(
        self,
        sim: Simulator,
        chan: RadioChannel,
        transform: OffsetTransform,
        node_id: int,
        position: SimPoint,
        app_cfg: AppConfig = AppConfig(),
        dpd_cfg: density.DpdConfig = density.DpdConfig(),
    ):
        self.sim = sim
        self.chan = chan
        self.transform = transform
        self.node_id = node_id
        self.position = position
        self.app_cfg = app_cfg
        self.dpd_cfg = dpd_cfg
        self.table = density.NeighborTable(node_id, dpd_cfg.neighbor_ttl_s)
        self.map = density.DensityMap(dpd_cfg.cell_size_m)
        self.counters = AppCounters()
        self.alive = False
        self._events: list = []
        # received cell sizes are float32 on the wire
        self._cell_size_f32 = _f32(dpd_cfg.cell_size_m)

    # -- lifecycle -------------------------------------------------------

    def start(self, rng) -> None:
        """Attach to the channel and schedule both apps with a random
        start phase in [0, period) so nodes do not transmit in lockstep."""
        self.alive = True
        self.chan.attach(self.node_id, self.on_packet)
        now = self.sim.now
        b0 = now + us(rng.uniform(0.0, self.app_cfg.beacon_period_s))
        m0 = now + us(rng.uniform(0.0, self.app_cfg.map_period_s))
        self._events = [
            self.sim.schedule(b0, self.beacon_tick, f"node:{self.node_id}:beacon"),
            self.sim.schedule(m0, self.map_tick, f"node:{self.node_id}:map"),
        ]

    def stop(self) -> None:
        self.alive = False
        self.chan.detach(self.node_id)
        for ev in self._events:
            self.sim.cancel(ev)
        self._events = []

    # -- transmit side ---------------------------------------------------

    def utm_position(self):
        return self.transform.sim_to_utm(self.position)

    def beacon_tick(self) -> None:
        if not self.alive:
            return
        now = self.sim.now
        pos = self.utm_position()
        msg = wire.BeaconMsg(
            node_id=self.node_id,
            zone=pos.zone,
            hemisphere=wire.hemi_code(pos.hemisphere),
            easting=pos.easting,
            northing=pos.northing,
            timestamp_ms=now // 1000,
        )
        frame = wire.pad_frame(wire.encode(msg), self.app_cfg.beacon_payload_bytes)
        if self.chan.broadcast(self.node_id, frame):
            self.counters.beacons_sent += 1
        self._events.append(
            self.sim.schedule(
                now + us(self.app_cfg.beacon_period_s),
                self.beacon_tick,
                f"node:{self.node_id}:beacon",
            )
        )

    def map_tick(self) -> None:
        if not self.alive:
            return
        now = self.sim.now
        local = density.local_map(self.table, self.utm_position(), now, self.dpd_cfg.cell_size_m)
        self.map = density.merge(local, self.map, now, self.dpd_cfg.map_ttl_s)
        pos = self.utm_position()
        frame, _dropped = density.encode_map(
            self.map,
            self.node_id,
            pos.zone,
            pos.hemisphere,
            now,
            limit=self.app_cfg.map_cell_limit,
        )
        if self.chan.broadcast(self.node_id, frame):
            self.counters.maps_sent += 1
        self._events.append(
            self.sim.schedule(
                now + us(self.app_cfg.map_period_s),
                self.map_tick,
                f"node:{self.node_id}:map",
            )
        )

    # -- receive side ----------------------------------------------------

    def on_packet(self, src: int, payload: bytes, now: SimTime) -> None:
        """Channel delivery callback. Never raises: anything that does not
        decode into a usable message is counted and dropped."""
        try:
            msg = wire.decode(payload)
        except wire.WireError:
            self.counters.decode_failed += 1
            return
        if isinstance(msg, wire.BeaconMsg):
            self._on_beacon(msg, now)
        elif isinstance(msg, wire.DensityMapMsg):
            self._on_map(msg, now)
        else:
            self.counters.unexpected_type += 1

    def _grid_matches(self, zone: int, hemisphere: int) -> bool:
        """Raw-code comparison; decoded frames may carry any byte there."""
        origin = self.transform.origin
        return zone == origin.zone and hemisphere == wire.hemi_code(origin.hemisphere)

    def _on_beacon(self, msg: wire.BeaconMsg, now: SimTime) -> None:
        if not self._grid_matches(msg.zone, msg.hemisphere):
            self.counters.zone_rejected += 1
            return
        try:
            position = UtmPoint(msg.zone, msg.hemisphere_char, msg.easting, msg.northing)
        except GeoError:
            self.counters.decode_failed += 1  # coordinates off the grid entirely
            return
        self.counters.beacons_received += 1
        beacon = density.Beacon(
            node_id=msg.node_id,
            position=position,
            timestamp=msg.timestamp_ms * 1000,
        )
        self.table.on_beacon(beacon, now)

    def _on_map(self, msg: wire.DensityMapMsg, now: SimTime) -> None:
        if not self._grid_matches(msg.zone, msg.hemisphere):
            self.counters.zone_rejected += 1
            return
        if msg.cell_size_m != self._cell_size_f32:
            self.counters.cell_size_rejected += 1
            return
        try:
            received = density.decode_map(msg, now)
        except ValueError:
            self.counters.decode_failed += 1  # e.g. negative or NaN cell count
            return
        self.counters.maps_received += 1
        # attribute the receiver's grid spacing, not the float32 echo
        received = density.DensityMap(self.dpd_cfg.cell_size_m, received.entries)
        self.map = density.merge(self.map, received, now, self.dpd_cfg.map_ttl_s)
