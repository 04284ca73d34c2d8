"""Application layer: beacon cadence, map exchange, and packet handling."""

import math
import random

import pytest

from pedemu.apps import AppConfig, Node
from pedemu.core import RngStreams, Simulator, us
from pedemu.density import DensityMap, DpdConfig, cell_key
from pedemu.geo import OffsetTransform, SimPoint, UtmPoint
from pedemu.radio import RadioChannel, RadioConfig
from pedemu import density, wire

ORIGIN = UtmPoint(32, "N", 691000.0, 5336000.0)


class Sniffer:
    """Passive in-range listener recording every delivered frame."""

    def __init__(self, position: SimPoint):
        self.position = position
        self.frames: list[tuple[int, bytes, int]] = []

    def on_packet(self, src: int, payload: bytes, now: int) -> None:
        self.frames.append((src, payload, now))

    def beacons(self, src=None):
        out = []
        for s, payload, _ in self.frames:
            if src is not None and s != src:
                continue
            msg = wire.decode(payload)
            if isinstance(msg, wire.BeaconMsg):
                out.append(msg)
        return out

    def maps(self, src=None):
        out = []
        for s, payload, _ in self.frames:
            if src is not None and s != src:
                continue
            msg = wire.decode(payload)
            if isinstance(msg, wire.DensityMapMsg):
                out.append(msg)
        return out


class FixedJitter:
    """Stands in for an rng stream; every draw lands at a fixed fraction."""

    def __init__(self, frac: float = 0.25):
        self.frac = frac

    def uniform(self, a: float, b: float) -> float:
        return a + self.frac * (b - a)


def make_net(positions: dict[int, tuple[float, float]], seed: int = 3, app_cfg=None):
    sim = Simulator()
    tr = OffsetTransform(ORIGIN)
    cfg = app_cfg or AppConfig()
    registry: dict[int, object] = {}
    chan = RadioChannel(sim, RadioConfig(), lambda nid: registry[nid].position)
    nodes = {}
    for nid, (x, y) in positions.items():
        node = Node(sim, chan, tr, nid, SimPoint(x, y), cfg, DpdConfig())
        nodes[nid] = node
        registry[nid] = node
    rng = RngStreams(seed)
    return sim, tr, chan, nodes, registry, rng


def add_sniffer(chan, registry, position=SimPoint(0.0, 0.0), sniffer_id=999):
    sn = Sniffer(position)
    registry[sniffer_id] = sn
    chan.attach(sniffer_id, sn.on_packet)
    return sn


# -- configuration ------------------------------------------------------------

def test_app_config_defaults():
    cfg = AppConfig()
    assert cfg.beacon_period_s == 1.0
    assert cfg.beacon_payload_bytes == 224
    assert cfg.map_period_s == 2.0
    assert cfg.map_payload_max_bytes == 1000
    assert cfg.map_cell_limit == 61


@pytest.mark.parametrize(
    "kwargs",
    [
        {"beacon_period_s": 0.0},
        {"map_period_s": -1.0},
        {"beacon_payload_bytes": 38},
        {"map_payload_max_bytes": 36},
    ],
)
def test_app_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        AppConfig(**kwargs)


def test_map_cell_limit_follows_the_byte_budget():
    # room for head (21 B) plus three cells of 16 B
    assert AppConfig(map_payload_max_bytes=21 + 3 * 16).map_cell_limit == 3
    # a huge budget is still capped by the u16-indexed frame limit
    assert AppConfig(map_payload_max_bytes=10_000).map_cell_limit == 61


# -- beacon cadence -----------------------------------------------------------

def test_beacon_timestamps_form_an_exact_arithmetic_sequence():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0)})
    sn = add_sniffer(chan, registry, SimPoint(50.0, 10.0))
    nodes[1].start(FixedJitter(0.37))
    sim.run_until(us(10.0))
    stamps = [b.timestamp_ms for b in sn.beacons(src=1)]
    assert len(stamps) == 10
    first = stamps[0]
    assert stamps == [first + 1000 * k for k in range(10)]


def test_jittered_start_lands_inside_the_first_period():
    for seed in range(5):
        sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0)}, seed=seed)
        sn = add_sniffer(chan, registry, SimPoint(50.0, 10.0))
        nodes[1].start(rng.stream("app:1"))
        sim.run_until(us(2.0))
        stamps = [b.timestamp_ms for b in sn.beacons(src=1)]
        assert stamps and stamps[0] < 1000


def test_every_beacon_frame_is_exactly_224_bytes():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0), 2: (40.0, 10.0)})
    sn = add_sniffer(chan, registry, SimPoint(25.0, 10.0))
    for nid, node in nodes.items():
        node.start(rng.stream(f"app:{nid}"))
    sim.run_until(us(10.0))
    frames = [p for s, p, _ in sn.frames if isinstance(wire.decode(p), wire.BeaconMsg)]
    assert len(frames) == 20
    assert all(len(f) == 224 for f in frames)


def test_beacon_carries_the_senders_utm_position():
    sim, tr, chan, nodes, registry, rng = make_net({1: (12.5, 30.25)})
    sn = add_sniffer(chan, registry, SimPoint(20.0, 30.0))
    nodes[1].start(FixedJitter(0.0))
    sim.run_until(us(1.5))
    b = sn.beacons(src=1)[0]
    assert b.easting == pytest.approx(691012.5, abs=1e-6)
    assert b.northing == pytest.approx(5336030.25, abs=1e-6)
    assert b.zone == 32 and b.hemisphere_char == "N"


def test_stopped_node_sends_no_further_beacons():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0)})
    sn = add_sniffer(chan, registry, SimPoint(50.0, 10.0))
    nodes[1].start(FixedJitter(0.0))
    sim.schedule(us(5.5), nodes[1].stop, "kill")
    sim.run_until(us(10.0))
    stamps = [b.timestamp_ms for b in sn.beacons(src=1)]
    assert stamps == [1000 * k for k in range(6)]  # 0.0 .. 5.0, nothing at 6.0


def test_stopped_node_also_stops_receiving():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0), 2: (40.0, 10.0)})
    nodes[1].start(FixedJitter(0.0))
    nodes[2].start(FixedJitter(0.5))
    sim.schedule(us(5.0), nodes[1].stop, "kill")
    sim.run_until(us(10.0))
    before = nodes[1].counters.beacons_received
    assert before == 5  # heard 0.5 .. 4.5 only
    assert nodes[2].counters.beacons_received == 5  # heard 0.0 .. 4.0


# -- map cadence and content --------------------------------------------------

def test_map_broadcast_every_two_seconds():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0)})
    sn = add_sniffer(chan, registry, SimPoint(50.0, 10.0))
    nodes[1].start(FixedJitter(0.25))
    sim.run_until(us(10.0))
    maps = sn.maps(src=1)
    assert len(maps) == 5
    assert nodes[1].counters.maps_sent == 5


def test_isolated_node_map_is_its_own_cell_with_count_one():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0)})
    nodes[1].start(FixedJitter(0.1))
    sim.run_until(us(3.0))
    own = tr.sim_to_utm(SimPoint(10.0, 10.0))
    key = cell_key(own.easting, own.northing, 3.0)
    assert set(nodes[1].map.entries) == {key}
    assert nodes[1].map.entries[key].count == 1


def test_two_nodes_in_one_cell_both_report_count_two():
    # easting cell spans [691008, 691011), northing cell [5336010, 5336013):
    # both nodes inside it, so each local map counts two occupants
    sim, tr, chan, nodes, registry, rng = make_net({1: (8.5, 10.5), 2: (10.4, 12.2)})
    own1 = tr.sim_to_utm(SimPoint(8.5, 10.5))
    own2 = tr.sim_to_utm(SimPoint(10.4, 12.2))
    key = cell_key(own1.easting, own1.northing, 3.0)
    assert cell_key(own2.easting, own2.northing, 3.0) == key
    for nid, node in nodes.items():
        node.start(rng.stream(f"app:{nid}"))
    sim.run_until(us(5.0))
    for node in nodes.values():
        assert node.map.entries[key].count == 2


def test_two_distant_nodes_learn_each_others_cells():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0), 2: (400.0, 10.0)})
    for nid, node in nodes.items():
        node.start(rng.stream(f"app:{nid}"))
    sim.run_until(us(3.0))
    k1 = cell_key(*_utm_xy(tr, 10.0, 10.0), 3.0)
    k2 = cell_key(*_utm_xy(tr, 400.0, 10.0), 3.0)
    assert k1 != k2
    for node in nodes.values():
        assert k1 in node.map.entries and k2 in node.map.entries


def _utm_xy(tr, x, y):
    p = tr.sim_to_utm(SimPoint(x, y))
    return p.easting, p.northing


def test_three_node_chain_propagates_the_far_cell_in_time():
    # ranges: 1<->2 and 2<->3 only (default radio reaches ~2239 m)
    sim, tr, chan, nodes, registry, rng = make_net(
        {1: (0.0, 0.0), 2: (2000.0, 0.0), 3: (4000.0, 0.0)}, seed=11
    )
    for nid, node in nodes.items():
        node.start(rng.stream(f"app:{nid}"))
    cfg = AppConfig()
    deadline = 2 * cfg.map_period_s + cfg.beacon_period_s
    sim.run_until(us(deadline))
    k1 = cell_key(*_utm_xy(tr, 0.0, 0.0), 3.0)
    assert k1 not in nodes[3].table.live(sim.now), "chain ends must be out of range"
    assert k1 in nodes[3].map.entries
    # and symmetrically the far cell reached node 1
    k3 = cell_key(*_utm_xy(tr, 4000.0, 0.0), 3.0)
    assert k3 in nodes[1].map.entries


def test_chain_propagation_holds_across_seeds():
    cfg = AppConfig()
    deadline = 2 * cfg.map_period_s + cfg.beacon_period_s
    for seed in range(10):
        sim, tr, chan, nodes, registry, rng = make_net(
            {1: (0.0, 0.0), 2: (2000.0, 0.0), 3: (4000.0, 0.0)}, seed=seed
        )
        for nid, node in nodes.items():
            node.start(rng.stream(f"app:{nid}"))
        sim.run_until(us(deadline))
        k1 = cell_key(*_utm_xy(tr, 0.0, 0.0), 3.0)
        assert k1 in nodes[3].map.entries, f"seed {seed}"


def test_map_frames_respect_the_byte_budget():
    # 70 nodes packed into distinct cells: more content than one frame holds
    positions = {i: (3.5 * i, 10.0) for i in range(1, 71)}
    sim, tr, chan, nodes, registry, rng = make_net(positions)
    sn = add_sniffer(chan, registry, SimPoint(120.0, 10.0))
    for nid, node in nodes.items():
        node.start(rng.stream(f"app:{nid}"))
    sim.run_until(us(6.0))
    maps = sn.maps()
    assert maps, "expected at least one map frame"
    assert any(len(m.cells) == 61 for m in maps)
    for s, payload, _ in sn.frames:
        if isinstance(wire.decode(payload), wire.DensityMapMsg):
            assert len(payload) <= 1000


# -- packet handling ----------------------------------------------------------

def _lone_node():
    sim, tr, chan, nodes, registry, rng = make_net({1: (10.0, 10.0)})
    nodes[1].start(FixedJitter(0.0))
    return sim, tr, nodes[1]


def test_received_beacon_lands_in_the_neighbor_table():
    sim, tr, node = _lone_node()
    pos = tr.sim_to_utm(SimPoint(40.0, 10.0))
    frame = wire.pad_frame(
        wire.encode(wire.BeaconMsg(7, 32, wire.HEMI_N, pos.easting, pos.northing, 500)),
        224,
    )
    node.on_packet(7, frame, us(1.0))
    assert 7 in node.table.live(us(1.0))
    assert node.counters.beacons_received == 1


def test_beacon_from_another_zone_is_rejected():
    sim, tr, node = _lone_node()
    frame = wire.encode(wire.BeaconMsg(7, 33, wire.HEMI_N, 691040.0, 5336010.0, 500))
    node.on_packet(7, frame, us(1.0))
    assert node.counters.zone_rejected == 1
    assert 7 not in node.table.live(us(1.0))


def test_map_with_mismatched_cell_size_is_rejected():
    sim, tr, node = _lone_node()
    other = DensityMap(2.5, {density.CellKey(5, 5): density.CellEntry(3, 0, 7)})
    frame, _ = density.encode_map(other, 7, 32, "N", us(1.0))
    node.on_packet(7, frame, us(1.0))
    assert node.counters.cell_size_rejected == 1
    assert not node.map.entries


def test_node_location_frame_counts_as_unexpected():
    sim, tr, node = _lone_node()
    frame = wire.encode(wire.NodeLocationMsg(3, 48.15, 11.54, 1000))
    node.on_packet(3, frame, us(1.0))
    assert node.counters.unexpected_type == 1


def test_undecodable_garbage_is_counted_and_dropped():
    sim, tr, node = _lone_node()
    node.on_packet(9, b"\x00" * 5, us(1.0))
    node.on_packet(9, b"", us(1.0))
    assert node.counters.decode_failed == 2


def test_on_packet_survives_random_byte_fuzz():
    sim, tr, node = _lone_node()
    rnd = random.Random(99)
    for _ in range(20_000):
        blob = rnd.randbytes(rnd.randrange(0, 80))
        node.on_packet(5, blob, us(1.0))
    # nothing above may have thrown; the node still works
    pos = tr.sim_to_utm(SimPoint(40.0, 10.0))
    frame = wire.pad_frame(
        wire.encode(wire.BeaconMsg(7, 32, wire.HEMI_N, pos.easting, pos.northing, 900)), 224
    )
    node.on_packet(7, frame, us(1.0))
    assert 7 in node.table.live(us(1.0))


def test_on_packet_survives_mutated_real_frames():
    sim, tr, node = _lone_node()
    rnd = random.Random(5)
    pos = tr.sim_to_utm(SimPoint(40.0, 10.0))
    base = wire.pad_frame(
        wire.encode(wire.BeaconMsg(7, 32, wire.HEMI_N, pos.easting, pos.northing, 900)), 224
    )
    for _ in range(5_000):
        mutated = bytearray(base)
        for _ in range(rnd.randrange(1, 4)):
            mutated[rnd.randrange(len(mutated))] = rnd.randrange(256)
        node.on_packet(7, bytes(mutated), us(2.0))


def test_stale_beacon_is_dropped_by_timestamp():
    sim, tr, node = _lone_node()
    pos = tr.sim_to_utm(SimPoint(40.0, 10.0))

    def beacon_at(ms):
        return wire.pad_frame(
            wire.encode(wire.BeaconMsg(7, 32, wire.HEMI_N, pos.easting, pos.northing, ms)), 224
        )

    node.on_packet(7, beacon_at(2000), us(2.5))
    node.on_packet(7, beacon_at(1000), us(2.6))  # older than what we have
    assert node.table.stale_dropped == 1


def test_counters_survive_into_a_dict():
    sim, tr, node = _lone_node()
    d = node.counters.as_dict()
    assert set(d) == {
        "beacons_sent",
        "maps_sent",
        "beacons_received",
        "maps_received",
        "decode_failed",
        "cell_size_rejected",
        "zone_rejected",
        "unexpected_type",
    }
