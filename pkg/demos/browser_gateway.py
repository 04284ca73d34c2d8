"""Mirror fleet traffic to a WebSocket client and steer a node from it.

The gateway fans out every frame the device bridge sees as compact JSON,
which is what a browser front end consumes. The same socket accepts
`setPosition` messages and routes them into the simulation, so dragging
a marker in the UI moves the placeholder node. Here a plain synchronous
client stands in for the browser.
"""

import json
import time

from websockets.sync.client import connect

from pedemu import (
    EXTERNAL_NODE_ID,
    Bridge,
    BridgeConfig,
    BridgeMode,
    OffsetTransform,
    RngStreams,
    Simulator,
    SpawnProcess,
    UiGateway,
    UtmPoint,
    World,
    default_scenario,
    parse_ui_message,
    us,
    utm_to_wgs84,
)

ORIGIN = UtmPoint(32, "N", 691000.0, 5336000.0)

sim = Simulator()
world = World(
    sim,
    default_scenario(),
    OffsetTransform(ORIGIN),
    RngStreams(5),
    spawn=SpawnProcess(max_peds=2, inter_arrival_s=10.0),
)
world.install()
bridge = Bridge(sim, world, BridgeConfig(mode=BridgeMode.INBOUND))


def on_ui_message(text):
    point = parse_ui_message(text)
    if point is not None:
        bridge.set_position(*point)


gateway = UiGateway(on_message=on_ui_message)
bridge.json_sink = gateway.broadcast
bridge.start()
gateway.start()
print(f"gateway on {gateway.url}")

with connect(gateway.url) as browser:
    # run a few seconds; the frames queue up on the client socket
    sim.run_until(us(4.0))
    print("\nfirst frames as the browser sees them:")
    for _ in range(4):
        print(f"  {browser.recv(timeout=2.0)}")

    # drag the marker: same JSON a front end would emit
    target = utm_to_wgs84(UtmPoint(32, "N", 691210.0, 5336160.0))
    browser.send(json.dumps({"type": "setPosition", "lat": target.lat, "lon": target.lon}))
    deadline = time.monotonic() + 3.0
    while bridge.stats.beacons_applied == 0 and time.monotonic() < deadline:
        time.sleep(0.01)
    sim.run_until(us(5.0))  # drains the injected move

pos = world.nodes[EXTERNAL_NODE_ID].position
print(f"\nafter the drag, placeholder node sits at ({pos.x:.2f}, {pos.y:.2f})")
assert abs(pos.x - 210.0) < 1e-4 and abs(pos.y - 160.0) < 1e-4

gateway.stop()
bridge.stop()
