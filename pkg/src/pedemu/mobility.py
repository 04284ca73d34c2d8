"""Optimal-steps pedestrian movement on precomputed navigation fields.

A navigation field stores, per 0.5 m grid cell, the shortest-path
distance to a target over the 8-connected free grid (orthogonal steps
cost the resolution, diagonal steps √2 times that). Each pedestrian
step evaluates a fixed candidate stencil around the current position
and moves to the candidate with the lowest total potential: field value
plus repulsive terms for nearby pedestrians and obstacles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import shapely
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from shapely.geometry import Point

from .geo import SimPoint, quantize
from .scenario import Scenario, ScenarioError

DEFAULT_RESOLUTION = 0.5

SPEED_MEAN = 1.34
SPEED_SD = 0.26
SPEED_FLOOR = 0.3

# stride length grows roughly linearly with walking speed
STEP_BASE = 0.4625
STEP_GAIN = 0.2345

N_FULL_CANDIDATES = 16
N_HALF_CANDIDATES = 8


@dataclass(frozen=True)
class OsmParams:
    ped_radius: float = 0.195
    intimate_width: float = 0.45
    personal_width: float = 1.2
    ped_height: float = 50.0
    obstacle_width: float = 0.8
    obstacle_height: float = 6.0
    intimate_factor: float = 1.2
    personal_power: int = 1
    intimate_power: int = 1

    def __post_init__(self):
        for name in ("ped_radius", "intimate_width", "personal_width", "ped_height",
                     "obstacle_width", "obstacle_height", "intimate_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("personal_power", "intimate_power"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")


def step_length(free_speed: float) -> float:
    return STEP_BASE + STEP_GAIN * free_speed


def draw_free_speed(rng, mean: float = SPEED_MEAN, sd: float = SPEED_SD) -> float:
    while True:
        v = rng.gauss(mean, sd)
        if v >= SPEED_FLOOR:
            return v


@dataclass
class Pedestrian:
    id: int
    position: SimPoint
    free_speed: float
    state: str = "moving"  # moving | arrived
    distance_walked: float = 0.0
    time_walking: float = 0.0


class NavigationField:
    """Distance-to-target per grid cell; +inf marks obstacle or unreachable."""

    def __init__(self, scenario: Scenario, target_id: int, values: np.ndarray, resolution: float):
        self.scenario = scenario
        self.target_id = target_id
        self.values = values  # [ny, nx]
        self.resolution = resolution

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def value_at(self, x: float, y: float) -> float:
        """Bilinear sample at a continuous position. Corners holding +inf
        are excluded and the remaining weights renormalized, so positions
        hugging an obstacle still read a finite guiding value."""
        res = self.resolution
        ny, nx = self.values.shape
        fx = min(max(x / res - 0.5, 0.0), nx - 1.0)
        fy = min(max(y / res - 0.5, 0.0), ny - 1.0)
        ix = min(int(fx), nx - 2) if nx > 1 else 0
        iy = min(int(fy), ny - 2) if ny > 1 else 0
        tx = fx - ix
        ty = fy - iy
        corners = (
            (self.values[iy, ix], (1 - tx) * (1 - ty)),
            (self.values[iy, min(ix + 1, nx - 1)], tx * (1 - ty)),
            (self.values[min(iy + 1, ny - 1), ix], (1 - tx) * ty),
            (self.values[min(iy + 1, ny - 1), min(ix + 1, nx - 1)], tx * ty),
        )
        total = 0.0
        weight = 0.0
        for v, w in corners:
            if math.isfinite(v):
                total += v * w
                weight += w
        if weight <= 0.0:
            return math.inf
        return total / weight


def _grid_masks(scenario: Scenario, resolution: float):
    nx = int(math.ceil(scenario.width / resolution))
    ny = int(math.ceil(scenario.height / resolution))
    xs = (np.arange(nx) + 0.5) * resolution
    ys = (np.arange(ny) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    blocked = np.zeros((ny, nx), dtype=bool)
    for ob in scenario.obstacles:
        blocked |= shapely.intersects_xy(ob, gx, gy)
    return nx, ny, gx, gy, blocked


def build_navigation_field(
    scenario: Scenario,
    target_id: int,
    resolution: float = DEFAULT_RESOLUTION,
) -> NavigationField:
    if target_id not in scenario.targets:
        raise ScenarioError(f"no target[{target_id}] in scenario")
    nx, ny, gx, gy, blocked = _grid_masks(scenario, resolution)
    target_mask = shapely.intersects_xy(scenario.targets[target_id], gx, gy) & ~blocked
    if not target_mask.any():
        raise ScenarioError(f"target[{target_id}] covers no free grid cell")

    free = ~blocked
    idx = np.arange(nx * ny).reshape(ny, nx)
    rows, cols, costs = [], [], []

    def link(a_sel, b_sel, cost):
        a = idx[a_sel][free[a_sel] & free[b_sel]]
        b = idx[b_sel][free[a_sel] & free[b_sel]]
        rows.append(a)
        cols.append(b)
        costs.append(np.full(a.shape, cost))

    straight = resolution
    diag = resolution * math.sqrt(2.0)
    link(np.s_[:, :-1], np.s_[:, 1:], straight)   # east
    link(np.s_[:-1, :], np.s_[1:, :], straight)   # north
    link(np.s_[:-1, :-1], np.s_[1:, 1:], diag)    # NE
    link(np.s_[:-1, 1:], np.s_[1:, :-1], diag)    # NW

    graph = coo_matrix(
        (np.concatenate(costs), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nx * ny, nx * ny),
    )
    dist = dijkstra(
        graph.tocsr(),
        directed=False,
        indices=idx[target_mask],
        min_only=True,
    )
    values = dist.reshape(ny, nx)
    values[blocked] = np.inf
    return NavigationField(scenario, target_id, values, resolution)


def check_source_reaches_target(scenario: Scenario, field: NavigationField) -> None:
    """Every free cell of the spawn region must have a finite distance."""
    nx, ny, gx, gy, blocked = _grid_masks(scenario, field.resolution)
    src = shapely.intersects_xy(scenario.source, gx, gy) & ~blocked
    if not src.any():
        raise ScenarioError("source region covers no free grid cell")
    if not np.isfinite(field.values[src]).all():
        raise ScenarioError(
            f"target[{field.target_id}] is unreachable from part of the source region"
        )


# -- potentials ---------------------------------------------------------------

def _bump(d: float, width: float, power: int, steepness: float) -> float:
    # compact-support exponential: 0 at d >= width, finite at d -> 0+
    q = (d / width) ** (2 * power)
    return math.exp(steepness / (q - 1.0))


def agent_potential(center_distance: float, params: OsmParams) -> float:
    d = center_distance - 2.0 * params.ped_radius
    if d <= 0.0:
        return math.inf
    total = 0.0
    if d < params.personal_width:
        total += params.ped_height * _bump(d, params.personal_width, params.personal_power, 4.0)
    intimate_reach = params.intimate_width * params.intimate_factor
    if d < intimate_reach:
        total += params.ped_height * params.intimate_factor * _bump(
            d, intimate_reach, params.intimate_power, 4.0
        )
    return total


def obstacle_potential(boundary_distance: float, inside: bool, params: OsmParams) -> float:
    if inside:
        return math.inf
    if boundary_distance >= params.obstacle_width:
        return 0.0
    return params.obstacle_height * _bump(boundary_distance, params.obstacle_width, 1, 2.0)


def total_potential(
    x: SimPoint,
    others: list[SimPoint],
    field: NavigationField,
    params: OsmParams,
) -> float:
    terms = [field.value_at(x.x, x.y)]
    reach = 2.0 * params.ped_radius + max(
        params.personal_width, params.intimate_width * params.intimate_factor
    )
    for o in others:
        d = math.hypot(x.x - o.x, x.y - o.y)
        if d < reach:
            terms.append(agent_potential(d, params))
    pt = Point(x.x, x.y)
    for ob in field.scenario.obstacles:
        if ob.covers(pt):
            return math.inf
        terms.append(obstacle_potential(ob.distance(pt), False, params))
    return math.fsum(terms)


# -- stepping -----------------------------------------------------------------

def candidate_points(
    pos: SimPoint, radius: float, rng, width: float, height: float
) -> list[SimPoint]:
    """Current position, 16 points at the step radius, 8 at half radius.
    The stencil is rotated by a random phase to avoid directional bias;
    candidates outside the bounds are dropped (indices keep their order).
    Points are snapped to the micrometer lattice so any position a
    pedestrian ever occupies converts to UTM and back bitwise."""
    pts = [quantize(pos)]
    phase = rng.uniform(0.0, 2.0 * math.pi)
    for k in range(N_FULL_CANDIDATES):
        a = phase + 2.0 * math.pi * k / N_FULL_CANDIDATES
        pts.append(quantize(SimPoint(pos.x + radius * math.cos(a), pos.y + radius * math.sin(a))))
    half = radius / 2.0
    for k in range(N_HALF_CANDIDATES):
        a = phase + 2.0 * math.pi * k / N_HALF_CANDIDATES
        pts.append(quantize(SimPoint(pos.x + half * math.cos(a), pos.y + half * math.sin(a))))
    return [p for p in pts if 0.0 <= p.x <= width and 0.0 <= p.y <= height]


def next_step(
    ped: Pedestrian,
    others: list[SimPoint],
    field: NavigationField,
    params: OsmParams,
    rng,
) -> tuple[SimPoint, float]:
    """Pick the lowest-potential candidate; ties go to the earliest one
    (the current position first, so a surrounded pedestrian waits)."""
    radius = step_length(ped.free_speed)
    cands = candidate_points(ped.position, radius, rng, field.scenario.width, field.scenario.height)
    best = None
    best_value = math.inf
    for p in cands:
        v = total_potential(p, others, field, params)
        if v < best_value:
            best, best_value = p, v
    if best is None or not math.isfinite(best_value):
        best = ped.position  # boxed in on all sides; wait
    duration = radius / ped.free_speed
    return best, duration


# -- spawning -----------------------------------------------------------------

@dataclass
class SpawnProcess:
    inter_arrival_s: float = 60.0
    max_peds: int = 6
    spawned: int = 0

    def __post_init__(self):
        if self.max_peds < 1:
            raise ValueError(f"max_peds must be at least 1, got {self.max_peds}")

    def spawn_times(self) -> list[float]:
        """Deterministic schedule: first pedestrian at t=0."""
        return [k * self.inter_arrival_s for k in range(self.max_peds)]


def spawn_position(scenario: Scenario, rng) -> SimPoint:
    """Uniform point in the source region, by rejection from its bbox."""
    minx, miny, maxx, maxy = scenario.source.bounds
    while True:
        x = rng.uniform(minx, maxx)
        y = rng.uniform(miny, maxy)
        if scenario.source.covers(Point(x, y)):
            return quantize(SimPoint(x, y))


def spawn_pedestrian(proc: SpawnProcess, ped_id: int, scenario: Scenario, rng) -> Pedestrian:
    proc.spawned += 1
    return Pedestrian(
        id=ped_id,
        position=spawn_position(scenario, rng),
        free_speed=draw_free_speed(rng),
    )
