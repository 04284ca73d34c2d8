"""Couple a scripted UDP device to a running fleet.

An inbound bridge listens for device beacons, walks the silent
placeholder node to each reported position (clamped to the walkable
area), and re-broadcasts so the rest of the fleet perceives the device
like any neighbor. Everything the placeholder hears on the simulated
channel streams back to the device verbatim.
"""

import socket
import time

from pedemu import (
    EXTERNAL_NODE_ID,
    Bridge,
    BridgeConfig,
    BridgeMode,
    OffsetTransform,
    RngStreams,
    Simulator,
    SpawnProcess,
    UtmPoint,
    World,
    default_scenario,
    us,
    wire,
)

ORIGIN = UtmPoint(32, "N", 691000.0, 5336000.0)

sim = Simulator()
world = World(
    sim,
    default_scenario(),
    OffsetTransform(ORIGIN),
    RngStreams(5),
    spawn=SpawnProcess(max_peds=1, inter_arrival_s=60.0),
)
world.install()
bridge = Bridge(sim, world, BridgeConfig(mode=BridgeMode.INBOUND))
bridge.start()
host, port = bridge.listen_address
print(f"bridge listening on udp://{host}:{port}")

device = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
device.bind(("127.0.0.1", 0))


def wait_for(predicate, timeout=3.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return
        time.sleep(0.01)
    raise TimeoutError("bridge did not pick up the datagram")


# the device walks east along y = 200; the last fix is far outside the area
path = [(50.0, 200.0), (150.0, 200.0), (250.0, 200.0), (350.0, 200.0), (9000.0, 200.0)]
print("\n  t_sim  device fix          placeholder")
for i, (x, y) in enumerate(path):
    t = float(i + 1)
    msg = wire.BeaconMsg(0, 32, wire.HEMI_N,
                         ORIGIN.easting + x, ORIGIN.northing + y, int(t * 1000))
    device.sendto(wire.encode(msg), bridge.listen_address)
    wait_for(lambda: bridge.stats.inbound_datagrams > i)
    sim.run_until(us(t))  # drains the injected move, advances the fleet
    pos = world.nodes[EXTERNAL_NODE_ID].position
    print(f"  {t:4.1f} s ({x:7.1f}, {y:5.1f}) -> ({pos.x:6.2f}, {pos.y:6.2f})")

assert pos.x == world.scenario.width  # the stray fix was clamped to the boundary
print(f"\nout-of-area fix clamped {bridge.stats.clamped} time(s)")

live = sorted(world.nodes[1].table.live(sim.now))
print(f"fleet node 1 sees neighbors {live} ({EXTERNAL_NODE_ID} is the device)")
assert EXTERNAL_NODE_ID in live

# fleet traffic flows the other way too: drain what reached the device
device.settimeout(0.5)
kinds = []
try:
    while True:
        data, _ = device.recvfrom(65535)
        kinds.append(type(wire.decode(data)).__name__)
except socket.timeout:
    pass
print(f"device received {len(kinds)} frames back "
      f"({', '.join(sorted(set(kinds)))})")

bridge.stop()
device.close()
print(f"\nbridge stats: {bridge.stats.as_dict()}")
