"""Couples one real device to the simulation over UDP.

The placeholder node's traffic is handled by the device: frames the
placeholder receives on the simulated channel are forwarded out as UDP
datagrams, and, depending on the mode, either the placeholder's simulated
walk is exported to the device (export) or device position updates drive
the placeholder and are re-broadcast on the simulated channel (inbound).

A JSON mirror of the same traffic can be pushed to a UI gateway through
``json_sink``; the field names below are the documented schema.
"""

from __future__ import annotations

import enum
import json
import logging
import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .core import Simulator, US_PER_S
from .geo import (
    FALSE_NORTHING_SOUTH,
    GeoError,
    SimPoint,
    UtmPoint,
    quantize,
    utm_to_wgs84,
    wgs84_to_utm_arrays,
)
from .world import EXTERNAL_NODE_ID, PlaceholderNode, World
from . import wire

log = logging.getLogger(__name__)

Address = tuple[str, int]


class BridgeMode(enum.Enum):
    EXPORT = "export"    # simulation controls the device's app location
    INBOUND = "inbound"  # device movements drive the placeholder node


@dataclass(frozen=True)
class BridgeConfig:
    listen: Address = ("127.0.0.1", 0)
    device: Optional[Address] = None  # None: adopt the first datagram's sender
    mode: BridgeMode = BridgeMode.EXPORT
    liveness_timeout_s: float = 5.0

    def __post_init__(self):
        if not (self.liveness_timeout_s > 0):
            raise ValueError(f"liveness_timeout_s must be positive, got {self.liveness_timeout_s}")


@dataclass
class DeviceSession:
    """The one device linked to the placeholder node."""

    address: Address
    node_id: int = EXTERNAL_NODE_ID
    mode: BridgeMode = BridgeMode.EXPORT
    last_seen: Optional[float] = None  # monotonic wall clock

    def touch(self) -> None:
        self.last_seen = time.monotonic()

    def live(self, timeout_s: float) -> bool:
        return self.last_seen is not None and time.monotonic() - self.last_seen < timeout_s


@dataclass
class BridgeStats:
    forwarded: int = 0
    send_errors: int = 0
    locations_exported: int = 0
    inbound_datagrams: int = 0
    beacons_applied: int = 0
    inbound_dropped: int = 0
    inbound_ignored: int = 0
    clamped: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


# -- JSON mirror --------------------------------------------------------------

def frame_to_json(msg: wire.WireMessage) -> dict:
    """Schema pushed to UI clients. Only valid internally produced frames
    reach this point, so hemisphere codes are always 0 or 1 here."""
    if isinstance(msg, wire.BeaconMsg):
        return {
            "type": "beacon",
            "nodeId": msg.node_id,
            "zone": msg.zone,
            "hemisphere": msg.hemisphere_char,
            "easting": msg.easting,
            "northing": msg.northing,
            "timestampMs": msg.timestamp_ms,
        }
    if isinstance(msg, wire.DensityMapMsg):
        return {
            "type": "map",
            "nodeId": msg.node_id,
            "cellSizeM": msg.cell_size_m,
            "zone": msg.zone,
            "hemisphere": msg.hemisphere_char,
            "cells": [
                {"cellX": c.cell_x, "cellY": c.cell_y, "count": c.count, "ageMs": c.age_ms}
                for c in msg.cells
            ],
        }
    if isinstance(msg, wire.NodeLocationMsg):
        return {
            "type": "nodeLocation",
            "nodeId": msg.node_id,
            "lat": msg.lat,
            "lon": msg.lon,
            "simTimeUs": msg.sim_time_us,
        }
    raise TypeError(f"no JSON form for {type(msg).__name__}")


def lag_to_json(sample) -> dict:
    return {
        "type": "lag",
        "tRealS": sample.t_real,
        "tSimS": sample.t_sim,
        "offsetS": sample.offset,
    }


def parse_ui_message(text: str) -> Optional[tuple[float, float]]:
    """Extract (lat, lon) from a UI setPosition message; None if it is
    anything else. Total: malformed input never raises."""
    try:
        obj = json.loads(text)
    except (ValueError, TypeError):
        return None
    if not isinstance(obj, dict) or obj.get("type") != "setPosition":
        return None
    lat, lon = obj.get("lat"), obj.get("lon")
    if isinstance(lat, (int, float)) and isinstance(lon, (int, float)) and not isinstance(
        lat, bool
    ) and not isinstance(lon, bool):
        return float(lat), float(lon)
    return None


# -- the bridge proper --------------------------------------------------------

class Bridge:
    """Owns the UDP socket and the placeholder node's coupling hooks.

    All simulation mutations go through ``sim.inject`` so the receive
    thread never touches simulation state directly.
    """

    def __init__(
        self,
        sim: Simulator,
        world: World,
        cfg: BridgeConfig = BridgeConfig(),
        json_sink: Optional[Callable[[dict], None]] = None,
    ):
        self.sim = sim
        self.world = world
        self.cfg = cfg
        self.json_sink = json_sink
        self.stats = BridgeStats()
        self.session: Optional[DeviceSession] = (
            DeviceSession(cfg.device, mode=cfg.mode) if cfg.device is not None else None
        )
        self.node0: Optional[PlaceholderNode] = None
        self._sock: Optional[socket.socket] = None
        self._rx: Optional[threading.Thread] = None
        self._closing = False

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        if self.cfg.mode is BridgeMode.EXPORT:
            self.node0 = self.world.spawn_external_walker()
            self.world.on_external_step = self._export_location
        else:
            self.node0 = self.world.add_external_node()
        self.node0.forward = self._forward_frame
        self._closing = False
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind(self.cfg.listen)
        self._rx = threading.Thread(target=self._rx_loop, name="bridge-udp", daemon=True)
        self._rx.start()

    def stop(self) -> None:
        sock = self._sock
        if sock is not None:
            # closing alone does not wake a thread parked in recvfrom, so
            # poke the socket with an empty datagram first
            self._closing = True
            host, port = sock.getsockname()[:2]
            if host == "0.0.0.0":
                host = "127.0.0.1"
            try:
                sock.sendto(b"", (host, port))
            except OSError:
                pass
        if self._rx is not None:
            self._rx.join(timeout=2.0)
            self._rx = None
        if sock is not None:
            self._sock = None
            sock.close()
        if self.node0 is not None:
            self.node0.forward = None
        self.world.on_external_step = None

    @property
    def listen_address(self) -> Optional[Address]:
        return self._sock.getsockname() if self._sock is not None else None

    def device_live(self) -> bool:
        return self.session is not None and self.session.live(self.cfg.liveness_timeout_s)

    # -- outbound: simulation -> device ------------------------------------

    def _send(self, data: bytes) -> bool:
        sock = self._sock
        if sock is None or self.session is None:
            return False
        try:
            sock.sendto(data, self.session.address)
            return True
        except OSError as exc:
            self.stats.send_errors += 1
            log.warning("device send failed: %s", exc)
            return False

    def _push_json(self, obj: dict) -> None:
        if self.json_sink is not None:
            self.json_sink(obj)

    def _forward_frame(self, src: int, payload: bytes, now: int) -> None:
        """Everything the placeholder hears goes to the device verbatim;
        the frames already carry absolute UTM coordinates."""
        self.stats.forwarded += 1
        self._send(payload)
        self._push_json(frame_to_json(wire.decode(payload)))

    def _export_location(self, pos: SimPoint) -> None:
        utm = self.world.transform.sim_to_utm(pos)
        wgs = utm_to_wgs84(utm)
        msg = wire.NodeLocationMsg(EXTERNAL_NODE_ID, wgs.lat, wgs.lon, self.sim.now)
        self.stats.locations_exported += 1
        self._send(wire.encode(msg))
        self._push_json(frame_to_json(msg))

    # -- inbound: device -> simulation --------------------------------------

    def _rx_loop(self) -> None:
        while not self._closing:
            sock = self._sock
            if sock is None:
                return
            try:
                data, addr = sock.recvfrom(65535)
            except OSError:
                return  # socket closed: clean shutdown
            if self._closing:
                return  # the stop() wake-up datagram is not device traffic
            self._on_datagram(data, addr)

    def _on_datagram(self, data: bytes, addr: Address) -> None:
        self.stats.inbound_datagrams += 1
        if self.session is None:
            self.session = DeviceSession(addr, mode=self.cfg.mode)
        self.session.touch()
        try:
            msg = wire.decode(data)
        except wire.WireError:
            self.stats.inbound_dropped += 1
            return
        if isinstance(msg, wire.BeaconMsg) and self.cfg.mode is BridgeMode.INBOUND:
            self.sim.inject(lambda: self._apply_device_beacon(msg), "bridge:inbound")
        else:
            self.stats.inbound_ignored += 1

    def set_position(self, lat: float, lon: float) -> None:
        """UI path: a dragged position in WGS84, projected into the
        scenario's UTM zone, then through the same pipeline as a device
        beacon. Thread-safe."""
        if self.cfg.mode is not BridgeMode.INBOUND:
            self.stats.inbound_ignored += 1
            return
        origin = self.world.transform.origin
        e, n = wgs84_to_utm_arrays(lat, lon, origin.zone)
        msg = wire.BeaconMsg(
            EXTERNAL_NODE_ID,
            origin.zone,
            wire.hemi_code(origin.hemisphere),
            float(e),
            float(n) if origin.hemisphere == "N" else float(n) + FALSE_NORTHING_SOUTH,
            0,
        )
        self.sim.inject(lambda: self._apply_device_beacon(msg), "bridge:setPosition")

    def _apply_device_beacon(self, msg: wire.BeaconMsg) -> None:
        """Runs on the simulation thread. Moves the placeholder and
        re-broadcasts an equivalent simulated beacon so the fleet
        perceives the device."""
        origin = self.world.transform.origin
        if msg.zone != origin.zone or msg.hemisphere != wire.hemi_code(origin.hemisphere):
            self.stats.inbound_dropped += 1
            log.warning("device beacon in zone %s dropped; scenario uses %s%s",
                        msg.zone, origin.zone, origin.hemisphere)
            return
        try:
            utm = UtmPoint(msg.zone, msg.hemisphere_char, msg.easting, msg.northing)
            p = self.world.transform.utm_to_sim(utm)
        except GeoError as exc:
            self.stats.inbound_dropped += 1
            log.warning("device beacon dropped: %s", exc)
            return
        cx, cy = self.world.scenario.clamp(p.x, p.y)
        if (cx, cy) != (p.x, p.y):
            self.stats.clamped += 1
            log.warning("device position (%.2f, %.2f) outside scenario, clamped to (%.2f, %.2f)",
                        p.x, p.y, cx, cy)
        pos = quantize(SimPoint(cx, cy))
        self.node0.position = pos
        now = self.sim.now
        out = self.world.transform.sim_to_utm(pos)
        beacon = wire.BeaconMsg(
            EXTERNAL_NODE_ID,
            out.zone,
            wire.hemi_code(out.hemisphere),
            out.easting,
            out.northing,
            now // 1000,
        )
        frame = wire.pad_frame(wire.encode(beacon), self.world.app_cfg.beacon_payload_bytes)
        self.world.chan.broadcast(EXTERNAL_NODE_ID, frame)
        self.stats.beacons_applied += 1
