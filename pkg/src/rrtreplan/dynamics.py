"""Moving obstacles on the roadmap, robot-side detection and velocity estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Point, Segment, Vector, distance
from .world import RoadmapGraph, World, is_static_free

# arrival tolerance on top of the one-step reach
_SNAP_EPS = 1e-9


@dataclass
class MovingObstacle:
    id: int
    position: Point
    radius: float
    dest_vertex: int
    velocity: Vector
    speed: float
    prev_vertex: int
    visible: bool = False
    last_seen_position: Point | None = None
    observed_velocity: Vector | None = None
    observation_age: int = 0
    # set on the step the obstacle snapped onto a vertex
    snapped: bool = False
    # the current velocity estimate spans a snap step
    estimate_spans_snap: bool = False

    def disk(self, extra: float = 0.0) -> tuple[float, float, float]:
        return (self.position.x, self.position.y, self.radius + extra)


@dataclass
class RobotState:
    position: Point
    velocity: Vector
    destination_node: int
    path_cursor: int
    destination: Point = field(default=None)

    @property
    def heading(self) -> Vector:
        return self.velocity


class SpawnError(ValueError):
    pass


def _toward(a: Point, b: Point, speed: float) -> Vector:
    d = distance(a, b)
    if d == 0.0:
        return Vector(0.0, 0.0)
    return Vector((b.x - a.x) / d * speed, (b.y - a.y) / d * speed)


def _make(world: World, oid: int, vertex: int, dest: int, speed: float | None) -> MovingObstacle:
    p = world.params
    speed = p.obstacle_speed if speed is None else speed
    pos = world.roadmap.vertices[vertex]
    return MovingObstacle(id=oid, position=pos, radius=p.obstacle_radius, dest_vertex=dest,
                          velocity=_toward(pos, world.roadmap.vertices[dest], speed),
                          speed=speed, prev_vertex=vertex)


def eligible_vertices(world: World) -> list[int]:
    lim = world.params.min_obstacle_spawn_distance
    return [i for i, v in enumerate(world.roadmap.vertices) if distance(v, world.start) >= lim]


def spawn_from_world(world: World) -> list[MovingObstacle]:
    """Obstacles listed explicitly in the scenario."""
    out = []
    for oid, m in enumerate(world.moving_obstacles):
        o = _make(world, oid, m.vertex, m.dest, m.speed)
        if m.position is not None:
            o.position = m.position
            o.velocity = _toward(m.position, world.roadmap.vertices[m.dest], o.speed)
        out.append(o)
    return out


def place_obstacles(world: World, n: int, rng: np.random.Generator,
                    speed: float | None = None) -> list[MovingObstacle]:
    """Put ``n`` obstacles on distinct random vertices far enough from the start."""
    if n == 0:
        return []
    elig = eligible_vertices(world)
    if len(elig) < n:
        raise SpawnError(f"only {len(elig)} eligible vertices for {n} obstacles")
    chosen = rng.choice(len(elig), size=n, replace=False)
    adj = world.roadmap.adjacency
    out = []
    for oid, c in enumerate(chosen):
        v = elig[int(c)]
        dest = adj[v][int(rng.integers(len(adj[v])))]
        out.append(_make(world, oid, v, dest, speed))
    return out


def _point_along(path: Sequence[Point], frac: float) -> Point:
    lengths = [distance(a, b) for a, b in zip(path, path[1:])]
    target = frac * sum(lengths)
    for (a, b), L in zip(zip(path, path[1:]), lengths):
        if target <= L and L > 0:
            t = target / L
            return Point(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        target -= L
    return path[-1]


def place_obstacles_on_path(world: World, n: int, path: Sequence[Point],
                            speed: float | None = None) -> list[MovingObstacle]:
    """Encounter preset: time each obstacle's first leg to meet the robot.

    The robot's travel time along ``path`` is split into ``n`` equal windows.
    Obstacle ``i`` takes the eligible (vertex, neighbour) start whose
    straight run toward the neighbour passes closest to where the robot will
    be during window ``i``. Fully deterministic given the path.
    """
    if n == 0:
        return []
    if len(path) < 2:
        raise SpawnError("path too short for the encounter preset")
    elig = eligible_vertices(world)
    if len(elig) < n:
        raise SpawnError(f"only {len(elig)} eligible vertices for {n} obstacles")
    p = world.params
    ospeed = p.obstacle_speed if speed is None else speed
    verts = world.roadmap.vertices
    adj = world.roadmap.adjacency
    total = sum(distance(a, b) for a, b in zip(path, path[1:]))
    steps = int(math.ceil(total / p.robot_speed))
    robot = np.array([tuple(_point_along(path, min(1.0, t * p.robot_speed / total)))
                      for t in range(steps + 1)])
    used = set()
    out = []
    for oid in range(n):
        lo = oid * steps // n
        hi = (oid + 1) * steps // n
        ts = np.arange(lo, hi + 1)
        best = None
        for v in elig:
            if v in used:
                continue
            a = verts[v]
            for u in adj[v]:
                b = verts[u]
                L = distance(a, b)
                frac = np.minimum(ts * ospeed, L) / L
                ox = a.x + frac * (b.x - a.x)
                oy = a.y + frac * (b.y - a.y)
                d = float(np.min(np.hypot(ox - robot[ts, 0], oy - robot[ts, 1])))
                key = (d, v, u)
                if best is None or key < best:
                    best = key
        _, v, u = best
        used.add(v)
        out.append(_make(world, oid, v, u, speed))
    return out


def update_obstacle(obs: MovingObstacle, roadmap: RoadmapGraph, rng: np.random.Generator) -> MovingObstacle:
    """Advance one timestep; on arrival snap to the vertex and pick a random neighbour."""
    dest = roadmap.vertices[obs.dest_vertex]
    if distance(obs.position, dest) <= obs.speed + _SNAP_EPS:
        obs.position = dest
        obs.prev_vertex = obs.dest_vertex
        nbrs = roadmap.adjacency[obs.dest_vertex]
        obs.dest_vertex = nbrs[int(rng.integers(len(nbrs)))]
        obs.velocity = _toward(dest, roadmap.vertices[obs.dest_vertex], obs.speed)
        obs.snapped = True
    else:
        obs.position = Point(obs.position.x + obs.velocity.vi, obs.position.y + obs.velocity.vj)
        obs.snapped = False
    return obs


def line_of_sight(a: Point, b: Point, world: World) -> bool:
    return is_static_free(Segment(a, b), world, 0.0)


def detect(robot_pos: Point, obstacles: Sequence[MovingObstacle], world: World) -> list[int]:
    """Refresh visibility and observation history; return ids of visible obstacles.

    Visible means strictly inside ``robot_range`` with a clear line of sight.
    Losing sight of an obstacle discards its history.
    """
    rng_lim = world.params.robot_range
    seen = []
    for obs in obstacles:
        vis = distance(robot_pos, obs.position) < rng_lim and line_of_sight(robot_pos, obs.position, world)
        if vis:
            if obs.visible and obs.last_seen_position is not None:
                last = obs.last_seen_position
                obs.observed_velocity = Vector(obs.position.x - last.x, obs.position.y - last.y)
                obs.observation_age += 1
                obs.estimate_spans_snap = obs.snapped
            else:
                obs.observed_velocity = None
                obs.observation_age = 1
                obs.estimate_spans_snap = False
            obs.last_seen_position = obs.position
            seen.append(obs.id)
        else:
            obs.observed_velocity = None
            obs.observation_age = 0
            obs.last_seen_position = None
            obs.estimate_spans_snap = False
        obs.visible = vis
    return seen


def estimate_velocity(obs: MovingObstacle) -> Vector | None:
    """Finite-difference velocity once the obstacle has been seen two steps running.

    A difference that straddles a vertex snap is not a real velocity and is
    withheld for that step.
    """
    if obs.observation_age < 2 or obs.estimate_spans_snap:
        return None
    return obs.observed_velocity


def on_roadmap(p: Point, roadmap: RoadmapGraph, tol: float = 1e-6) -> bool:
    from .geometry import point_segment_distance
    verts = roadmap.vertices
    return any(point_segment_distance(p, Segment(verts[i], verts[j])) <= tol for i, j in roadmap.edges)


def speed_of(v: Vector) -> float:
    return math.hypot(v.vi, v.vj)
