"""Scenario orchestration: pedestrians walking a scenario, one radio node
strapped to each, periodic map snapshots, and the end-of-run report.

The world owns no I/O thread and never touches the wall clock; it only
schedules events on the simulator, so a run is reproducible in virtual
mode and the same object graph drives real-time runs unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, TextIO

from shapely.geometry import Point

from .core import RngStreams, RunStats, Simulator, SimTime, us, US_PER_S
from .geo import OffsetTransform, SimPoint, quantize
from .scenario import Scenario
from .radio import RadioChannel, RadioConfig, max_range_m
from .apps import AppConfig, Node
from .mobility import (
    NavigationField,
    OsmParams,
    Pedestrian,
    SpawnProcess,
    build_navigation_field,
    check_source_reaches_target,
    draw_free_speed,
    next_step,
    spawn_pedestrian,
    spawn_position,
)
from . import density

EXTERNAL_NODE_ID = 0  # reserved for a coupled physical device


class PlaceholderNode:
    """Stationary stand-in for an externally coupled device.

    It occupies a position and receives frames over the channel like any
    node, but runs no apps of its own: dissemination is the real device's
    job. A bridge may set ``forward`` to pull received frames out of the
    simulation. Without one, it is a silent listener.
    """

    def __init__(self, node_id: int, position: SimPoint, cell_size_m: float):
        self.node_id = node_id
        self.position = position
        self.forward = None  # set by a bridge: (src, payload, now) -> None
        self.frames_seen = 0
        self.map = density.DensityMap(cell_size_m)  # stays empty; device aggregates

    def on_packet(self, src: int, payload: bytes, now: SimTime) -> None:
        self.frames_seen += 1
        if self.forward is not None:
            self.forward(src, payload, now)


@dataclass
class RunReport:
    """Everything a run hands back besides its CSV outputs."""

    stats: Optional[RunStats] = None
    spawned: int = 0
    arrived: int = 0
    obstacle_violations: int = 0
    nodes: dict[int, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "spawned": self.spawned,
            "arrived": self.arrived,
            "obstacle_violations": self.obstacle_violations,
            "nodes": self.nodes,
        }
        if self.stats is not None:
            d["events_executed"] = self.stats.events_executed
            d["injected"] = self.stats.injected
            d["t_end_s"] = self.stats.t_end / US_PER_S
            d["wall_seconds"] = self.stats.wall_seconds
            d["trace_hash"] = self.stats.trace_hash
            if self.stats.lag:
                d["max_offset_s"] = self.stats.max_offset()
        return d


class World:
    """Wires mobility, radio, and the per-node apps over one simulator."""

    def __init__(
        self,
        sim: Simulator,
        scenario: Scenario,
        transform: OffsetTransform,
        rng: RngStreams,
        radio_cfg: RadioConfig = RadioConfig(),
        app_cfg: AppConfig = AppConfig(),
        dpd_cfg: density.DpdConfig = density.DpdConfig(),
        osm_params: OsmParams = OsmParams(),
        spawn: SpawnProcess = SpawnProcess(),
        nav_field: Optional[NavigationField] = None,
        map_out: Optional[TextIO] = None,
        snapshot_period_s: Optional[float] = None,
    ):
        self.sim = sim
        self.scenario = scenario
        self.transform = transform
        self.rng = rng
        self.app_cfg = app_cfg
        self.dpd_cfg = dpd_cfg
        self.osm_params = osm_params
        self.spawn = spawn
        self.field = nav_field or build_navigation_field(scenario, scenario.source_target)
        check_source_reaches_target(scenario, self.field)
        self.chan = RadioChannel(sim, radio_cfg, self.position_of)
        self.map_out = map_out
        self.snapshot_period_s = (
            snapshot_period_s if snapshot_period_s is not None else app_cfg.map_period_s
        )
        self.peds: dict[int, Pedestrian] = {}
        self.nodes: dict[int, Node | PlaceholderNode] = {}
        self.report = RunReport()
        self.on_external_step = None  # bridge hook: (SimPoint) -> None
        self._next_ped_id = EXTERNAL_NODE_ID + 1
        if map_out is not None:
            map_out.write(density.MAP_SNAPSHOT_HEADER)

    # -- channel glue ------------------------------------------------------

    def position_of(self, node_id: int) -> SimPoint:
        return self.nodes[node_id].position

    def radio_range_note(self) -> str:
        return (
            f"radio range {max_range_m(self.chan.cfg):.1f} m "
            f"at {self.chan.cfg.carrier_ghz:g} GHz"
        )

    # -- scheduling --------------------------------------------------------

    def install(self) -> None:
        """Schedule spawn arrivals and the snapshot cadence. Call once,
        before the simulator runs."""
        for k, t in enumerate(self.spawn.spawn_times()):
            self.sim.schedule(us(t), self._spawn_one, f"spawn:{k}")
        if self.map_out is not None:
            self.sim.schedule(0, self._snapshot_tick, "snapshot")

    def _spawn_one(self) -> None:
        ped_id = self._next_ped_id
        self._next_ped_id += 1
        ped = spawn_pedestrian(self.spawn, ped_id, self.scenario, self.rng.stream("spawn"))
        self.peds[ped_id] = ped
        node = Node(
            self.sim,
            self.chan,
            self.transform,
            ped_id,
            ped.position,
            self.app_cfg,
            self.dpd_cfg,
        )
        self.nodes[ped_id] = node
        node.start(self.rng.stream(f"app:{ped_id}"))
        self.report.spawned += 1
        self._plan_step(ped_id)

    def add_external_node(self, position: Optional[SimPoint] = None) -> PlaceholderNode:
        """Attach the placeholder that mirrors a coupled device. Silent by
        itself; defaults to the source-region centroid so it starts in
        bounds for any scenario."""
        if EXTERNAL_NODE_ID in self.nodes:
            return self.nodes[EXTERNAL_NODE_ID]
        if position is None:
            c = self.scenario.source.centroid
            position = quantize(SimPoint(c.x, c.y))
        node = PlaceholderNode(EXTERNAL_NODE_ID, position, self.dpd_cfg.cell_size_m)
        self.nodes[EXTERNAL_NODE_ID] = node
        self.chan.attach(EXTERNAL_NODE_ID, node.on_packet)
        return node

    def spawn_external_walker(self) -> PlaceholderNode:
        """Give the placeholder legs: it spawns in the source region and
        walks to the target like any pedestrian, so its position can be
        exported to a device whose location the simulation controls. Draws
        come from dedicated rng streams, leaving bridge-less runs alone."""
        rng = self.rng.stream("external")
        node = self.add_external_node(spawn_position(self.scenario, rng))
        if EXTERNAL_NODE_ID not in self.peds:
            self.peds[EXTERNAL_NODE_ID] = Pedestrian(
                id=EXTERNAL_NODE_ID,
                position=node.position,
                free_speed=draw_free_speed(rng),
            )
            self._plan_step(EXTERNAL_NODE_ID)
        return node

    # -- pedestrian stepping -------------------------------------------------

    def _others(self, ped_id: int) -> list[SimPoint]:
        return [p.position for pid, p in self.peds.items() if pid != ped_id]

    def _plan_step(self, ped_id: int) -> None:
        ped = self.peds[ped_id]
        if ped.state != "moving":
            return
        nxt, dur = next_step(
            ped, self._others(ped_id), self.field, self.osm_params, self.rng.stream(f"osm:{ped_id}")
        )
        self.sim.schedule_in(
            us(dur), lambda: self._finish_step(ped_id, nxt, dur), f"ped:{ped_id}:step"
        )

    def _finish_step(self, ped_id: int, nxt: SimPoint, dur: float) -> None:
        ped = self.peds[ped_id]
        prev = ped.position
        ped.position = nxt
        self.nodes[ped_id].position = nxt
        ped.distance_walked += math.dist((prev.x, prev.y), (nxt.x, nxt.y))
        ped.time_walking += dur
        if self.scenario.inside_obstacle(nxt.x, nxt.y):
            self.report.obstacle_violations += 1
        if ped_id == EXTERNAL_NODE_ID and self.on_external_step is not None:
            self.on_external_step(nxt)
        if self._in_target(nxt):
            ped.state = "arrived"  # parks here; the node keeps beaconing
            self.report.arrived += 1
            return
        self._plan_step(ped_id)

    def _in_target(self, p: SimPoint) -> bool:
        target = self.scenario.targets[self.scenario.source_target]
        return target.covers(Point(p.x, p.y))

    # -- snapshots ----------------------------------------------------------

    def _snapshot_tick(self) -> None:
        now = self.sim.now
        t_s = now / US_PER_S
        for node_id in sorted(self.nodes):
            density.write_map_snapshot(self.map_out, t_s, node_id, self.nodes[node_id].map, now)
        self.sim.schedule_in(us(self.snapshot_period_s), self._snapshot_tick, "snapshot")

    # -- wrap-up ------------------------------------------------------------

    def finish(self, stats: RunStats) -> RunReport:
        self.report.stats = stats
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            if isinstance(node, PlaceholderNode):
                entry = {"frames_seen": node.frames_seen}
            else:
                entry = {
                    "app": node.counters.as_dict(),
                    "stale_beacons_dropped": node.table.stale_dropped,
                }
            sender = self.chan.sender_stats.get(node_id)
            if sender is not None:
                entry["radio"] = {
                    "frames_sent": sender.frames_sent,
                    "bytes_sent": sender.bytes_sent,
                    "mac_dropped_frames": sender.mac_dropped_frames,
                    "mac_dropped_bytes": sender.mac_dropped_bytes,
                    "rlc_dropped_frames": sender.rlc_dropped_frames,
                    "rlc_dropped_bytes": sender.rlc_dropped_bytes,
                }
            self.report.nodes[node_id] = entry
        return self.report
