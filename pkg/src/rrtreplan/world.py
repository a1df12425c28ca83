"""Configuration space: bounds, static rectangles, start/goal and the roadmap
that moving obstacles wander along. Scenarios are JSON documents.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

import numpy as np

from .geometry import Point, Rect, Segment, point_seg_dist2_k, rects_to_array, seg_static_free_k


class ScenarioError(ValueError):
    """Raised for malformed or invalid scenario documents.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ScenarioParseError(ScenarioError):
    pass


@dataclass(frozen=True)
class SimParams:
    robot_speed: float = 1.0
    obstacle_speed: float = 0.6
    robot_range: float = 15.0
    angle_thresh: float = 30.0
    obstacle_radius: float = 2.0
    robot_radius: float = 0.5
    node_budget: int = 2000
    goal_bias: float = 0.05
    neighbor_fraction: float = 0.01
    replan_neighbor_fraction: float = 0.03
    replan_sample_budget: int = 300
    proximity_alarm: float = 5.0
    min_obstacle_spawn_distance: float = 25.0
    max_steps: int = 5000
    seed: int = 0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "seed":
                if not isinstance(v, int) or v < 0:
                    raise ScenarioError("must be a non-negative integer", f"params.{f.name}")
                continue
            if f.name == "goal_bias":
                if not (0.0 <= v < 1.0):
                    raise ScenarioError("must lie in [0, 1)", "params.goal_bias")
                continue
            if not math.isfinite(v) or v <= 0:
                raise ScenarioError("must be positive", f"params.{f.name}")
        for name in ("node_budget", "replan_sample_budget", "max_steps"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ScenarioError("must be an integer", f"params.{name}")
        for name in ("neighbor_fraction", "replan_neighbor_fraction"):
            if getattr(self, name) > 1.0:
                raise ScenarioError("must lie in (0, 1]", f"params.{name}")
        if self.replan_neighbor_fraction < self.neighbor_fraction:
            raise ScenarioError("must be >= neighbor_fraction", "params.replan_neighbor_fraction")


@dataclass(frozen=True)
class RoadmapGraph:
    vertices: tuple[Point, ...] = ()
    edges: tuple[tuple[int, int], ...] = ()

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj = [[] for _ in self.vertices]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)


@dataclass(frozen=True)
class ObstacleSpawn:
    """Explicit moving-obstacle start: on edge ``vertex``-``dest`` heading to ``dest``.

    ``position`` defaults to the vertex; ``speed`` None means ``obstacle_speed``
    (0 pins the obstacle in place).
    """

    vertex: int
    dest: int
    position: Point | None = None
    speed: float | None = None


@dataclass(frozen=True)
class World:
    bounds: Rect
    obstacles: tuple[Rect, ...]
    start: Point
    goal: Point
    goal_radius: float = 1.5
    roadmap: RoadmapGraph = field(default_factory=RoadmapGraph)
    params: SimParams = field(default_factory=SimParams)
    name: str = ""
    moving_obstacles: tuple[ObstacleSpawn, ...] = ()

    def __post_init__(self):
        validate_world(self)

    @cached_property
    def rect_array(self) -> np.ndarray:
        return rects_to_array(self.obstacles)

    @cached_property
    def bounds_array(self) -> np.ndarray:
        return np.array(self.bounds.as_tuple(), dtype=np.float64)

    def replace(self, **changes) -> "World":
        return dataclasses.replace(self, **changes)

    def with_params(self, **changes) -> "World":
        return dataclasses.replace(self, params=dataclasses.replace(self.params, **changes))


def is_static_free(s: Segment, w: World, clearance: float) -> bool:
    return bool(seg_static_free_k(s.a.x, s.a.y, s.b.x, s.b.y,
                                  w.rect_array, clearance, w.bounds_array))


def _point_free(p: Point, w: World, clearance: float) -> bool:
    return is_static_free(Segment(p, p), w, clearance)


def validate_world(w: World):
    if not w.bounds.min.x < w.bounds.max.x or not w.bounds.min.y < w.bounds.max.y:
        raise ScenarioError("bounds must have positive extent", "bounds")
    if not (math.isfinite(w.goal_radius) and w.goal_radius > 0):
        raise ScenarioError("must be positive", "goal_radius")
    rr = w.params.robot_radius
    for name in ("start", "goal"):
        if not _point_free(getattr(w, name), w, rr):
            raise ScenarioError("must lie inside bounds and outside every obstacle", name)
    nv = len(w.roadmap.vertices)
    degree = [0] * nv
    seen = set()
    orad = w.params.obstacle_radius
    for k, (i, j) in enumerate(w.roadmap.edges):
        where = f"roadmap.edges[{k}]"
        if not (0 <= i < nv and 0 <= j < nv):
            raise ScenarioError("vertex index out of range", where)
        if i == j:
            raise ScenarioError("self-loop", where)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ScenarioError("duplicate edge", where)
        seen.add(key)
        degree[i] += 1
        degree[j] += 1
        if not is_static_free(Segment(w.roadmap.vertices[i], w.roadmap.vertices[j]), w, orad):
            raise ScenarioError("edge collides with a static obstacle", where)
    for v, d in enumerate(degree):
        if d == 0:
            raise ScenarioError("vertex has no incident edge", f"roadmap.vertices[{v}]")
        if not _point_free(w.roadmap.vertices[v], w, orad):
            raise ScenarioError("vertex inside an obstacle", f"roadmap.vertices[{v}]")
    for k, m in enumerate(w.moving_obstacles):
        where = f"moving_obstacles[{k}]"
        if not (0 <= m.vertex < nv and 0 <= m.dest < nv) or (min(m.vertex, m.dest), max(m.vertex, m.dest)) not in seen:
            raise ScenarioError("vertex/dest must be the ends of a roadmap edge", where)
        if m.speed is not None and not (math.isfinite(m.speed) and m.speed >= 0):
            raise ScenarioError("speed must be non-negative", where)
        if m.position is not None:
            a, b = w.roadmap.vertices[m.vertex], w.roadmap.vertices[m.dest]
            if math.sqrt(point_seg_dist2_k(m.position.x, m.position.y, a.x, a.y, b.x, b.y)) > 1e-6:
                raise ScenarioError("position must lie on the edge", where)


# --------------------------------------------------------------------------
# scenario documents

_TOP_KEYS = {"name", "bounds", "obstacles", "start", "goal", "goal_radius", "roadmap", "params",
             "moving_obstacles"}
_SPAWN_KEYS = {"vertex", "dest", "position", "speed"}
_REQUIRED = {"bounds", "start", "goal"}
_PARAM_KEYS = {f.name for f in dataclasses.fields(SimParams)}
_INT_PARAMS = {"node_budget", "replan_sample_budget", "max_steps", "seed"}


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioParseError("expected a number", where)
    v = float(v)
    if not math.isfinite(v):
        raise ScenarioParseError("expected a finite number", where)
    return v


def _seq(v, n, where):
    if not isinstance(v, list) or len(v) != n:
        raise ScenarioParseError(f"expected a list of {n} numbers", where)
    return [_num(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _rect(v, where):
    xmin, ymin, xmax, ymax = _seq(v, 4, where)
    try:
        return Rect.from_bounds(xmin, ymin, xmax, ymax)
    except ValueError as e:
        raise ScenarioError(str(e), where) from None


def parse_scenario(doc: dict) -> World:
    if not isinstance(doc, dict):
        raise ScenarioParseError("top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioParseError(f"unknown key(s) {sorted(unknown)}", sorted(unknown)[0])
    missing = _REQUIRED - set(doc)
    if missing:
        raise ScenarioParseError("missing required key", sorted(missing)[0])

    bounds = _rect(doc["bounds"], "bounds")
    obs_doc = doc.get("obstacles", [])
    if not isinstance(obs_doc, list):
        raise ScenarioParseError("expected a list", "obstacles")
    obstacles = tuple(_rect(o, f"obstacles[{i}]") for i, o in enumerate(obs_doc))
    start = Point(*_seq(doc["start"], 2, "start"))
    goal = Point(*_seq(doc["goal"], 2, "goal"))
    goal_radius = _num(doc.get("goal_radius", 1.5), "goal_radius")

    rm = doc.get("roadmap", {})
    if not isinstance(rm, dict):
        raise ScenarioParseError("expected an object", "roadmap")
    bad = set(rm) - {"vertices", "edges"}
    if bad:
        raise ScenarioParseError(f"unknown key(s) {sorted(bad)}", f"roadmap.{sorted(bad)[0]}")
    verts = tuple(Point(*_seq(v, 2, f"roadmap.vertices[{i}]"))
                  for i, v in enumerate(rm.get("vertices", [])))
    edges = []
    for k, e in enumerate(rm.get("edges", [])):
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
            raise ScenarioParseError("expected a pair of vertex indices", f"roadmap.edges[{k}]")
        edges.append((e[0], e[1]))

    p_doc = doc.get("params", {})
    if not isinstance(p_doc, dict):
        raise ScenarioParseError("expected an object", "params")
    bad = set(p_doc) - _PARAM_KEYS
    if bad:
        raise ScenarioParseError(f"unknown key(s) {sorted(bad)}", f"params.{sorted(bad)[0]}")
    kwargs = {}
    for k, v in p_doc.items():
        if k in _INT_PARAMS:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioParseError("expected an integer", f"params.{k}")
            kwargs[k] = v
        else:
            kwargs[k] = _num(v, f"params.{k}")
    params = SimParams(**kwargs)

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ScenarioParseError("expected a string", "name")
    mo_doc = doc.get("moving_obstacles", [])
    if not isinstance(mo_doc, list):
        raise ScenarioParseError("expected a list", "moving_obstacles")
    spawns = []
    for k, m in enumerate(mo_doc):
        where = f"moving_obstacles[{k}]"
        if not isinstance(m, dict):
            raise ScenarioParseError("expected an object", where)
        bad = set(m) - _SPAWN_KEYS
        if bad:
            raise ScenarioParseError(f"unknown key(s) {sorted(bad)}", f"{where}.{sorted(bad)[0]}")
        for key in ("vertex", "dest"):
            v = m.get(key)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioParseError("expected an integer", f"{where}.{key}")
        pos = m.get("position")
        spawns.append(ObstacleSpawn(
            m["vertex"], m["dest"],
            None if pos is None else Point(*_seq(pos, 2, f"{where}.position")),
            None if m.get("speed") is None else _num(m["speed"], f"{where}.speed")))
    return World(bounds=bounds, obstacles=obstacles, start=start, goal=goal,
                 goal_radius=goal_radius, roadmap=RoadmapGraph(verts, tuple(edges)),
                 params=params, name=name, moving_obstacles=tuple(spawns))


def load_scenario(text: str) -> World:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"malformed JSON: {e}") from None
    return parse_scenario(doc)


def load_scenario_file(path) -> World:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def scenario_to_dict(w: World) -> dict:
    doc = {}
    if w.name:
        doc["name"] = w.name
    doc["bounds"] = list(w.bounds.as_tuple())
    doc["obstacles"] = [list(r.as_tuple()) for r in w.obstacles]
    doc["start"] = [w.start.x, w.start.y]
    doc["goal"] = [w.goal.x, w.goal.y]
    doc["goal_radius"] = w.goal_radius
    doc["roadmap"] = {
        "vertices": [[v.x, v.y] for v in w.roadmap.vertices],
        "edges": [[i, j] for i, j in w.roadmap.edges],
    }
    doc["params"] = dataclasses.asdict(w.params)
    if w.moving_obstacles:
        out = []
        for m in w.moving_obstacles:
            d = {"vertex": m.vertex, "dest": m.dest}
            if m.position is not None:
                d["position"] = [m.position.x, m.position.y]
            if m.speed is not None:
                d["speed"] = m.speed
            out.append(d)
        doc["moving_obstacles"] = out
    return doc


def serialize_scenario(w: World) -> str:
    return json.dumps(scenario_to_dict(w), indent=1) + "\n"


def default_map() -> World:
    """The bundled 100 x 100 street-grid map."""
    text = resources.files("rrtreplan").joinpath("data/default_map.json").read_text("utf-8")
    return load_scenario(text)


def empty_world(size=100.0, start=(5.0, 5.0), goal=(95.0, 95.0), **params) -> World:
    """Obstacle-free square world with no roadmap; handy for tests and demos."""
    return World(bounds=Rect.from_bounds(0.0, 0.0, size, size), obstacles=(),
                 start=Point(*start), goal=Point(*goal), params=SimParams(**params))
