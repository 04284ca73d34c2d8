"""Scenario geometry: bounds, obstacles, one spawn source, targets.

File format, one declaration per line, `#` starts a comment:

    bounds: 415 394
    obstacle[0]: (100, 100) (150, 100) (150, 150) (100, 150)
    source: (5, 5) (25, 5) (25, 25) (5, 25) -> 0
    target[0]: (400, 370) (414, 370) (414, 393) (400, 393)

Polygons are listed as (x, y) vertices in metres within the bounds; the
source line names the target its pedestrians walk to.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from shapely.geometry import Point, Polygon, box


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    width: float
    height: float
    obstacles: list[Polygon] = field(default_factory=list)
    source: Polygon | None = None
    source_target: int = 0
    targets: dict[int, Polygon] = field(default_factory=dict)

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def inside_obstacle(self, x: float, y: float) -> bool:
        p = Point(x, y)
        return any(ob.covers(p) for ob in self.obstacles)

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return (min(max(x, 0.0), self.width), min(max(y, 0.0), self.height))


_VERTEX = re.compile(r"\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)")
_KEY = re.compile(r"^(bounds|source|obstacle\[(\d+)\]|target\[(\d+)\])\s*:\s*(.*)$")


def _parse_polygon(text: str, lineno: int, what: str) -> Polygon:
    vertices = [(float(x), float(y)) for x, y in _VERTEX.findall(text)]
    if len(vertices) < 3:
        raise ScenarioError(f"line {lineno}: {what} needs at least 3 vertices, got {len(vertices)}")
    poly = Polygon(vertices)
    if not poly.is_valid or poly.area <= 0:
        raise ScenarioError(f"line {lineno}: {what} polygon is degenerate or self-intersecting")
    return poly


def parse_scenario(text: str) -> Scenario:
    bounds: tuple[float, float] | None = None
    obstacles: dict[int, Polygon] = {}
    targets: dict[int, Polygon] = {}
    source: Polygon | None = None
    source_target: int | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _KEY.match(line)
        if m is None:
            raise ScenarioError(f"line {lineno}: unrecognized declaration {line!r}")
        key, obs_idx, tgt_idx, rest = m.group(1), m.group(2), m.group(3), m.group(4)
        if key == "bounds":
            parts = rest.split()
            if len(parts) != 2:
                raise ScenarioError(f"line {lineno}: bounds needs width and height")
            try:
                w, h = float(parts[0]), float(parts[1])
            except ValueError:
                raise ScenarioError(f"line {lineno}: bounds values must be numbers") from None
            if w <= 0 or h <= 0:
                raise ScenarioError(f"line {lineno}: bounds must be positive, got {w} x {h}")
            bounds = (w, h)
        elif key == "source":
            if source is not None:
                raise ScenarioError(f"line {lineno}: more than one source")
            arrow = re.search(r"->\s*(\d+)\s*$", rest)
            if arrow is None:
                raise ScenarioError(f"line {lineno}: source must end with '-> <target id>'")
            source_target = int(arrow.group(1))
            source = _parse_polygon(rest[: arrow.start()], lineno, "source")
        elif obs_idx is not None:
            i = int(obs_idx)
            if i in obstacles:
                raise ScenarioError(f"line {lineno}: duplicate obstacle[{i}]")
            obstacles[i] = _parse_polygon(rest, lineno, f"obstacle[{i}]")
        else:
            i = int(tgt_idx)
            if i in targets:
                raise ScenarioError(f"line {lineno}: duplicate target[{i}]")
            targets[i] = _parse_polygon(rest, lineno, f"target[{i}]")

    if bounds is None:
        raise ScenarioError("no bounds declaration")
    if source is None:
        raise ScenarioError("no source declaration")
    if not targets:
        raise ScenarioError("no target declarations")
    if source_target not in targets:
        raise ScenarioError(f"source points at target {source_target}, which is not declared")

    frame = box(0.0, 0.0, bounds[0], bounds[1])
    for i, ob in obstacles.items():
        if not frame.covers(ob):
            raise ScenarioError(f"obstacle[{i}] extends outside the bounds")
    for i, tg in targets.items():
        if not frame.covers(tg):
            raise ScenarioError(f"target[{i}] extends outside the bounds")
    if not frame.covers(source):
        raise ScenarioError("source extends outside the bounds")
    for i, ob in obstacles.items():
        if source.intersects(ob):
            raise ScenarioError(f"source region overlaps obstacle[{i}]")

    return Scenario(
        width=bounds[0],
        height=bounds[1],
        obstacles=[obstacles[i] for i in sorted(obstacles)],
        source=source,
        source_target=source_target,
        targets=targets,
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as f:
        return parse_scenario(f.read())


DEFAULT_SCENARIO = """\
# open walking ground with a single crossing
bounds: 415 394
source: (10, 180) (30, 180) (30, 214) (10, 214) -> 0
target[0]: (395, 180) (414, 180) (414, 214) (395, 214)
"""


def default_scenario() -> Scenario:
    return parse_scenario(DEFAULT_SCENARIO)
