"""Device coupling over UDP: forwarding, location export, inbound mobility."""

import math
import socket
import threading
import time

import pytest

from pedemu.bridge import (
    Bridge,
    BridgeConfig,
    BridgeMode,
    DeviceSession,
    frame_to_json,
    lag_to_json,
    parse_ui_message,
)
from pedemu.core import ClockMode, LagSample, RngStreams, Simulator, us
from pedemu.geo import (
    GeoPoint,
    OffsetTransform,
    SimPoint,
    UtmPoint,
    quantize,
    utm_to_wgs84,
    wgs84_to_utm,
)
from pedemu.mobility import SpawnProcess
from pedemu.radio import RadioConfig
from pedemu.scenario import default_scenario
from pedemu.world import EXTERNAL_NODE_ID, World
from pedemu import wire

ORIGIN = UtmPoint(32, "N", 691000.0, 5336000.0)


def make_world(seed=5, max_peds=1, radio_cfg=None, inter_arrival_s=60.0):
    sim = Simulator()
    kw = {"radio_cfg": radio_cfg} if radio_cfg is not None else {}
    w = World(
        sim,
        default_scenario(),
        OffsetTransform(ORIGIN),
        RngStreams(seed),
        spawn=SpawnProcess(max_peds=max_peds, inter_arrival_s=inter_arrival_s),
        **kw,
    )
    w.install()
    return sim, w


def device_socket():
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.bind(("127.0.0.1", 0))
    return s


def drain(sock, wait=0.5):
    """Collect decoded datagrams until the socket goes quiet."""
    sock.settimeout(wait)
    out = []
    try:
        while True:
            data, _ = sock.recvfrom(65535)
            out.append(wire.decode(data))
    except socket.timeout:
        return out


# -- JSON schema ---------------------------------------------------------------

def test_beacon_json_schema():
    msg = wire.BeaconMsg(7, 32, wire.HEMI_N, 691010.0, 5336020.0, 1500)
    assert frame_to_json(msg) == {
        "type": "beacon",
        "nodeId": 7,
        "zone": 32,
        "hemisphere": "N",
        "easting": 691010.0,
        "northing": 5336020.0,
        "timestampMs": 1500,
    }


def test_map_json_schema():
    msg = wire.DensityMapMsg(
        3, 3.0, 32, wire.HEMI_N, (wire.MapCell(230336, 1778670, 2.0, 250),)
    )
    j = frame_to_json(msg)
    assert j["type"] == "map"
    assert j["cellSizeM"] == 3.0
    assert j["cells"] == [{"cellX": 230336, "cellY": 1778670, "count": 2.0, "ageMs": 250}]


def test_node_location_json_schema():
    msg = wire.NodeLocationMsg(0, 48.1549, 11.5418, 2_500_000)
    j = frame_to_json(msg)
    assert j == {
        "type": "nodeLocation",
        "nodeId": 0,
        "lat": 48.1549,
        "lon": 11.5418,
        "simTimeUs": 2_500_000,
    }


def test_lag_json_schema():
    j = lag_to_json(LagSample(1.25, 1.20, 0.05))
    assert j == {"type": "lag", "tRealS": 1.25, "tSimS": 1.20, "offsetS": 0.05}


@pytest.mark.parametrize(
    "text,expected",
    [
        ('{"type":"setPosition","lat":48.1,"lon":11.5}', (48.1, 11.5)),
        ('{"type":"setPosition","lat":48,"lon":11}', (48.0, 11.0)),
        ('{"type":"somethingElse","lat":1,"lon":2}', None),
        ('{"type":"setPosition","lat":"x","lon":2}', None),
        ('{"type":"setPosition","lat":true,"lon":2}', None),
        ('{"type":"setPosition"}', None),
        ("not json at all", None),
        ("[1,2,3]", None),
        ("", None),
    ],
)
def test_parse_ui_message(text, expected):
    assert parse_ui_message(text) == expected


# -- sessions -------------------------------------------------------------------

def test_session_liveness_window():
    s = DeviceSession(("127.0.0.1", 9999))
    assert not s.live(5.0)  # never heard from
    s.touch()
    assert s.live(5.0)
    s.last_seen = time.monotonic() - 1.0
    assert not s.live(0.5)
    assert s.live(2.0)


def test_bridge_config_validation():
    with pytest.raises(ValueError):
        BridgeConfig(liveness_timeout_s=0.0)


# -- export mode ------------------------------------------------------------------

def test_export_mode_sends_one_location_per_completed_step():
    dev = device_socket()
    sim, w = make_world()
    br = Bridge(sim, w, BridgeConfig(device=dev.getsockname(), mode=BridgeMode.EXPORT))
    steps = []
    prev_hook = None
    br.start()
    # count steps independently of the bridge
    prev_hook = w.on_external_step

    def counting_hook(pos):
        steps.append(pos)
        prev_hook(pos)

    w.on_external_step = counting_hook
    sim.run_until(us(10.0))
    msgs = drain(dev)
    locations = [m for m in msgs if isinstance(m, wire.NodeLocationMsg)]
    assert len(steps) > 10
    assert len(locations) == len(steps)
    assert br.stats.locations_exported == len(steps)
    assert all(m.node_id == EXTERNAL_NODE_ID for m in locations)
    br.stop()
    dev.close()


def test_exported_location_round_trips_to_the_sim_position():
    dev = device_socket()
    sim, w = make_world(seed=8)
    br = Bridge(sim, w, BridgeConfig(device=dev.getsockname(), mode=BridgeMode.EXPORT))
    br.start()
    sim.run_until(us(6.0))
    locations = [m for m in drain(dev) if isinstance(m, wire.NodeLocationMsg)]
    br.stop()
    dev.close()
    assert locations
    last = locations[-1]
    back = w.transform.utm_to_sim(wgs84_to_utm(GeoPoint(last.lat, last.lon)))
    ped = w.peds[EXTERNAL_NODE_ID]
    err = math.hypot(back.x - ped.position.x, back.y - ped.position.y)
    assert err < 0.01


def test_fleet_frames_are_forwarded_to_the_device():
    dev = device_socket()
    sim, w = make_world(seed=3)
    br = Bridge(sim, w, BridgeConfig(device=dev.getsockname(), mode=BridgeMode.EXPORT))
    br.start()
    sim.run_until(us(8.0))
    msgs = drain(dev)
    beacons = [m for m in msgs if isinstance(m, wire.BeaconMsg)]
    maps = [m for m in msgs if isinstance(m, wire.DensityMapMsg)]
    assert beacons and maps
    assert all(b.node_id == 1 for b in beacons)  # the one walker
    # exactly what the placeholder heard, nothing else
    assert br.stats.forwarded == len(beacons) + len(maps)
    assert br.stats.forwarded == w.nodes[EXTERNAL_NODE_ID].frames_seen
    br.stop()
    dev.close()


def test_out_of_range_fleet_is_not_forwarded():
    # shrink the radio so source region and far placeholder cannot talk
    weak = RadioConfig(tx_power_dbm=-30.0)
    dev = device_socket()
    sim, w = make_world(radio_cfg=weak)
    w.add_external_node(SimPoint(400.0, 10.0))  # ~423 m from the source area
    br = Bridge(sim, w, BridgeConfig(device=dev.getsockname(), mode=BridgeMode.INBOUND))
    br.start()
    sim.run_until(us(6.0))
    assert br.stats.forwarded == 0
    assert drain(dev, wait=0.3) == []
    br.stop()
    dev.close()


def test_export_without_device_still_runs_deterministically():
    def run():
        sim, w = make_world(seed=13)
        br = Bridge(sim, w, BridgeConfig(mode=BridgeMode.EXPORT))
        br.start()
        stats = sim.run_until(us(15.0))
        br.stop()
        return stats.trace_hash, br.stats.locations_exported

    a, b = run(), run()
    assert a == b
    assert a[1] > 0  # exports were attempted, just had nowhere to go


# -- inbound mode ------------------------------------------------------------------

def wait_for(predicate, timeout=3.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


def start_inbound(seed=5, max_peds=1):
    sim, w = make_world(seed=seed, max_peds=max_peds)
    br = Bridge(sim, w, BridgeConfig(mode=BridgeMode.INBOUND))
    br.start()
    return sim, w, br


def test_device_beacon_moves_the_placeholder():
    sim, w, br = start_inbound()
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    msg = wire.BeaconMsg(0, 32, wire.HEMI_N, 691123.25, 5336047.5, 777)
    dev.sendto(wire.encode(msg), br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == 1)
    sim.run_until(us(1.0))  # drains the injected action
    assert w.nodes[EXTERNAL_NODE_ID].position == quantize(SimPoint(123.25, 47.5))
    assert br.stats.beacons_applied == 1
    assert br.device_live()
    br.stop()
    dev.close()


def test_out_of_bounds_device_position_is_clamped():
    sim, w, br = start_inbound()
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    msg = wire.BeaconMsg(0, 32, wire.HEMI_N, 691000.0 + 999.0, 5336000.0 - 50.0, 1)
    dev.sendto(wire.encode(msg), br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == 1)
    sim.run_until(us(1.0))
    pos = w.nodes[EXTERNAL_NODE_ID].position
    assert (pos.x, pos.y) == (w.scenario.width, 0.0)
    assert br.stats.clamped == 1
    br.stop()
    dev.close()


def test_fleet_perceives_the_device_through_injected_beacons():
    sim, w, br = start_inbound()
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    msg = wire.BeaconMsg(0, 32, wire.HEMI_N, 691020.0, 5336195.0, 123)
    dev.sendto(wire.encode(msg), br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == 1)
    sim.run_until(us(2.0))
    assert EXTERNAL_NODE_ID in w.nodes[1].table.live(sim.now)
    br.stop()
    dev.close()


def test_malformed_datagrams_are_counted_and_dropped():
    sim, w, br = start_inbound()
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    dev.sendto(b"\x00\x01\x02", br.listen_address)
    dev.sendto(b"XXXX" + bytes(35), br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == 2)
    assert br.stats.inbound_dropped == 2
    assert br.stats.beacons_applied == 0
    br.stop()
    dev.close()


def test_wrong_zone_beacon_is_dropped_not_applied():
    sim, w, br = start_inbound()
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    before = w.nodes[EXTERNAL_NODE_ID].position
    msg = wire.BeaconMsg(0, 33, wire.HEMI_N, 691020.0, 5336195.0, 1)
    dev.sendto(wire.encode(msg), br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == 1)
    sim.run_until(us(1.0))
    assert br.stats.inbound_dropped == 1
    assert w.nodes[EXTERNAL_NODE_ID].position == before
    br.stop()
    dev.close()


def test_count_equality_for_a_burst_of_device_updates():
    sim, w, br = start_inbound()
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    n = 25
    for k in range(n):
        msg = wire.BeaconMsg(0, 32, wire.HEMI_N, 691010.0 + k, 5336100.0, k)
        dev.sendto(wire.encode(msg), br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == n)
    sim.run_until(us(1.0))
    assert br.stats.beacons_applied == n
    # last position wins
    assert w.nodes[EXTERNAL_NODE_ID].position.x == pytest.approx(10.0 + n - 1)
    br.stop()
    dev.close()


def test_realtime_five_hertz_updates_become_position_events():
    sim, w, br = start_inbound(seed=2)
    dev = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sniffed = []
    w.nodes[EXTERNAL_NODE_ID].forward = None  # not needed here

    def feed():
        for k in range(10):
            msg = wire.BeaconMsg(0, 32, wire.HEMI_N, 691010.0 + k, 5336100.0, k)
            dev.sendto(wire.encode(msg), br.listen_address)
            time.sleep(0.2)  # 5 Hz

    t = threading.Thread(target=feed)
    t.start()
    sim.run_until(us(2.5), mode=ClockMode.REAL_TIME)
    t.join()
    # every datagram that arrived before the end became one position event
    applied = br.stats.beacons_applied
    assert applied >= 8
    assert w.nodes[EXTERNAL_NODE_ID].position.x > 10.0
    br.stop()
    dev.close()


def test_set_position_follows_the_same_path_as_device_beacons():
    sim, w, br = start_inbound()
    target_utm = UtmPoint(32, "N", 691200.0, 5336150.0)
    wgs = utm_to_wgs84(target_utm)
    br.set_position(wgs.lat, wgs.lon)
    sim.run_until(us(1.0))
    pos = w.nodes[EXTERNAL_NODE_ID].position
    assert math.hypot(pos.x - 200.0, pos.y - 150.0) < 1e-4
    assert br.stats.beacons_applied == 1
    br.stop()


def test_set_position_is_ignored_in_export_mode():
    sim, w = make_world()
    br = Bridge(sim, w, BridgeConfig(mode=BridgeMode.EXPORT))
    br.start()
    br.set_position(48.15, 11.54)
    sim.run_until(us(1.0))
    assert br.stats.beacons_applied == 0
    assert br.stats.inbound_ignored == 1
    br.stop()


def test_inbound_beacons_in_export_mode_only_refresh_liveness():
    dev = device_socket()
    sim, w = make_world()
    br = Bridge(sim, w, BridgeConfig(device=dev.getsockname(), mode=BridgeMode.EXPORT))
    br.start()
    dev.sendto(wire.encode(wire.BeaconMsg(0, 32, wire.HEMI_N, 691020.0, 5336195.0, 1)),
               br.listen_address)
    assert wait_for(lambda: br.stats.inbound_datagrams == 1)
    assert br.stats.inbound_ignored == 1
    assert br.device_live()
    br.stop()
    dev.close()
