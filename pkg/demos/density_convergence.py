"""Watch density knowledge spread hop by hop along a chain of nodes.

Four static nodes stand in a line, 2 km apart, with a radio range of
about 2.24 km: each node only hears its direct neighbors. Nodes beacon
every second and exchange their merged maps every two seconds, so cell
counts from the far end need several map periods to arrive.
"""

from pedemu import (
    Node,
    OffsetTransform,
    RadioChannel,
    RadioConfig,
    RngStreams,
    SimPoint,
    Simulator,
    UtmPoint,
    max_range_m,
    us,
)

ORIGIN = UtmPoint(32, "N", 691000.0, 5336000.0)
SPACING = 2000.0

sim = Simulator()
transform = OffsetTransform(ORIGIN)
positions = {nid: SimPoint(nid * SPACING, 50.0) for nid in range(1, 5)}
chan = RadioChannel(sim, RadioConfig(), positions.get)
print(f"radio range {max_range_m(RadioConfig()):.0f} m, spacing {SPACING:.0f} m")

rng = RngStreams(1)
nodes = {}
for nid, pos in positions.items():
    node = Node(sim, chan, transform, nid, pos)
    node.start(rng.stream(f"app:{nid}"))
    nodes[nid] = node

print("\n t_sim   " + "".join(f"node{nid}  " for nid in nodes))
for step in range(1, 8):
    sim.run_until(us(step * 2.0))
    row = "".join(f"{len(nodes[nid].map.entries)or 0:>5}  " for nid in nodes)
    print(f"{step * 2.0:>5.1f} s {row}")

# by now every node's merged map should cover all four occupied cells
for nid, node in nodes.items():
    assert len(node.map.entries) == 4, (nid, node.map.entries)
print("\nevery node knows all 4 occupied cells")

counts = sorted(e.count for e in nodes[1].map.entries.values())
print(f"cell counts as seen by node 1: {counts}")
