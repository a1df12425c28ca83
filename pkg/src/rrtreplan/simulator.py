"""Discrete-time execution: the robot follows its path while obstacles wander.

Each timestep moves every obstacle, then the robot; the robot then looks
around, judges each visible obstacle and, if any blocks, repairs its path
once for that step. Everything observable ends up in a ``SimTrace``, whose
text form is line-oriented and byte-reproducible for a given seed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import (MovingObstacle, RobotState, detect, estimate_velocity, place_obstacles,
                       place_obstacles_on_path, spawn_from_world, update_obstacle)
from .geometry import Point, Segment, Vector, distance, seg_free_k
from .obstruction import assess
from .planner import RandomStream, Tree, plan
from .replanner import ReplanContext, ReplanFailure, ReplanResult, obstacle_disks, replan
from .world import World, is_static_free

MAX_REPLAN_FAILURES = 50
TRACE_HEADER = "t,robot_x,robot_y,event,detail"
_ARRIVE_EPS = 1e-9
# steps of straight-line obstacle extrapolation used when repairing the path
PREDICTION_HORIZON = 4


class Outcome(str, enum.Enum):
    GOAL_REACHED = "GoalReached"
    COLLISION = "Collision"
    REPLAN_EXHAUSTED = "ReplanExhausted"
    STEP_LIMIT = "StepLimit"
    NO_PATH = "NoPath"

    def __str__(self):
        return self.value


EXIT_CODES = {
    Outcome.GOAL_REACHED: 0,
    Outcome.NO_PATH: 2,
    Outcome.COLLISION: 3,
    Outcome.REPLAN_EXHAUSTED: 4,
    Outcome.STEP_LIMIT: 5,
}


@dataclass
class Event:
    t: int
    position: Point
    kind: str
    detail: dict

    def line(self) -> str:
        det = " ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"{self.t},{self.position.x!r},{self.position.y!r},{self.kind},{det}"


@dataclass
class ReplanRecord:
    t: int
    position: Point
    obstacle: int
    motion_class: str
    goal_node: int
    goal_index: int
    samples: int
    sub_path_cost: float
    sub_path: list[int]
    path: list[int]


@dataclass
class SimTrace:
    events: list[Event] = field(default_factory=list)
    robot: list[Point] = field(default_factory=list)
    obstacles: list[list[tuple[Point, int, bool]]] = field(default_factory=list)
    replans: list[ReplanRecord] = field(default_factory=list)
    original_path: list[int] = field(default_factory=list)
    original_xy: list[Point] = field(default_factory=list)
    outcome: Outcome | None = None
    executed_cost: float = 0.0
    timesteps: int = 0
    collision_steps: int = 0
    header: dict = field(default_factory=dict)

    @property
    def replan_count(self) -> int:
        return len(self.replans)

    def text(self) -> str:
        out = ["# rrtreplan trace"]
        if self.header:
            out.append("# " + " ".join(f"{k}={_fmt(v)}" for k, v in self.header.items()))
        out.append(TRACE_HEADER)
        for e in self.events:
            out.append(e.line())
        for oid, track in enumerate(self.obstacles):
            out.append(f"obstacle,{oid}")
            out.append("t,x,y,dest,visible")
            for t, (p, dest, vis) in enumerate(track):
                out.append(f"{t},{p.x!r},{p.y!r},{dest},{int(vis)}")
        out.append("summary")
        out.append(f"outcome,{self.outcome}")
        out.append(f"executed_cost,{self.executed_cost!r}")
        out.append(f"replans,{self.replan_count}")
        out.append(f"timesteps,{self.timesteps}")
        out.append(f"collision_steps,{self.collision_steps}")
        out.append("original_path," + " ".join(str(i) for i in self.original_path))
        out.append("original_path_xy," + " ".join(_fmt(p) for p in self.original_xy))
        return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    if isinstance(v, Point):
        return f"{v.x!r};{v.y!r}"
    return str(v)


def parse_trace(text: str) -> dict:
    """Read a trace back: ``events`` (t, x, y, kind, detail dict), ``obstacles``
    (per-id lists of (t, x, y, dest, visible)), ``summary`` (key -> string).
    """
    lines = text.splitlines()
    events, obstacles, summary = [], [], {}
    mode = "events"
    for n, line in enumerate(lines, 1):
        if not line or line.startswith("#"):
            continue
        if line == TRACE_HEADER or line == "t,x,y,dest,visible":
            continue
        if line.startswith("obstacle,"):
            mode = "obstacle"
            obstacles.append([])
            continue
        if line == "summary":
            mode = "summary"
            continue
        parts = line.split(",")
        try:
            if mode == "events":
                if len(parts) != 5:
                    raise ValueError("expected 5 fields")
                detail = dict(kv.split("=", 1) for kv in parts[4].split()) if parts[4] else {}
                events.append((int(parts[0]), float(parts[1]), float(parts[2]), parts[3], detail))
            elif mode == "obstacle":
                if len(parts) != 5:
                    raise ValueError("expected 5 fields")
                obstacles[-1].append((int(parts[0]), float(parts[1]), float(parts[2]),
                                      int(parts[3]), parts[4] == "1"))
            else:
                key, _, val = line.partition(",")
                summary[key] = val
        except ValueError as e:
            raise ValueError(f"malformed trace line {n}: {line!r} ({e})") from None
    return {"events": events, "obstacles": obstacles, "summary": summary}


# --------------------------------------------------------------------------

def _velocity(frm: Point, to: Point, speed: float) -> Vector:
    d = distance(frm, to)
    if d == 0.0:
        return Vector(0.0, 0.0)
    return Vector((to.x - frm.x) / d * speed, (to.y - frm.y) / d * speed)


class Simulation:
    """One run over a planned tree. ``step`` advances a single timestep."""

    def __init__(self, world: World, tree: Tree, path: Sequence[int],
                 obstacles: Sequence[MovingObstacle], obstacle_rng: np.random.Generator,
                 replan_rng: RandomStream, margin: float | None = None, horizon: int | None = None,
                 on_replan: Callable[["Simulation", ReplanResult], None] | None = None):
        if len(path) < 1:
            raise ValueError("simulation needs a non-empty path")
        self.world = world
        self.tree = tree
        self.original_path = [int(i) for i in path]
        self.orig_index = {nid: k for k, nid in enumerate(self.original_path)}
        self.path = list(self.original_path)
        self.obstacles = list(obstacles)
        self.obstacle_rng = obstacle_rng
        self.replan_rng = replan_rng
        self.margin = world.params.obstacle_speed if margin is None else margin
        self.horizon = PREDICTION_HORIZON if horizon is None else horizon
        self.on_replan = on_replan
        self.t = 0
        self.orig_cursor = 0
        self.failures = 0
        self.halted = False
        self.obstacle_invalid = np.empty(0, np.int64)
        # nodes of self.path that belong to the latest repair (0: none)
        self.sub_len = 0
        start = tree.position(self.path[0])
        self.robot = RobotState(start, Vector(0.0, 0.0), self.path[0], 0, start)
        self._retarget()
        self.trace = SimTrace(original_path=list(self.original_path),
                              original_xy=[tree.position(i) for i in self.original_path])
        self.trace.robot.append(start)
        self.trace.obstacles = [[(o.position, o.dest_vertex, False)] for o in self.obstacles]
        self._event("start", nodes=len(self.path), cost=tree.path_length(self.path))

    # helpers -------------------------------------------------------------
    def _event(self, kind, **detail):
        self.trace.events.append(Event(self.t, self.robot.position, kind, detail))

    def _retarget(self):
        r = self.robot
        if r.path_cursor + 1 < len(self.path):
            nxt = self.path[r.path_cursor + 1]
            r.destination_node = nxt
            r.destination = self.tree.position(nxt)
            r.velocity = _velocity(r.position, r.destination, self.world.params.robot_speed)
        else:
            r.destination_node = self.path[r.path_cursor]
            r.destination = r.position
            r.velocity = Vector(0.0, 0.0)

    def _finish(self, outcome: Outcome):
        self.trace.outcome = outcome
        self.trace.timesteps = self.t
        self._event("end", outcome=outcome.value)

    def _collides(self) -> int | None:
        """Id of an obstacle the robot overlaps (-1 for static), else None."""
        r = self.robot.position
        rr = self.world.params.robot_radius
        for o in self.obstacles:
            if distance(r, o.position) < rr + o.radius:
                return o.id
        if not is_static_free(Segment(r, r), self.world, 0.0):
            return -1
        return None

    # main loop -------------------------------------------------------------
    @property
    def done(self) -> bool:
        return self.trace.outcome is not None

    def step(self):
        if self.done:
            return
        w = self.world
        p = w.params
        self.t += 1
        for o in self.obstacles:
            update_obstacle(o, w.roadmap, self.obstacle_rng)
        self._move_robot()
        hit = self._collides()
        if hit is not None:
            self.trace.collision_steps += 1
            self._event("collision", obs=hit)
            self._record_obstacles()
            self._finish(Outcome.COLLISION)
            return
        # the final path node is the goal node; it lies within goal_radius of the goal
        if self.robot.path_cursor == len(self.path) - 1:
            self._record_obstacles()
            self._finish(Outcome.GOAL_REACHED)
            return
        visible = detect(self.robot.position, self.obstacles, w)
        self._record_obstacles()
        blockers = []
        for oid in visible:
            o = self.obstacles[oid]
            self._event("detect", obs=oid)
            if estimate_velocity(o) is None:
                continue
            blocked, cls = assess(self.robot, o, w)
            if blocked:
                cname = "Stationary" if cls is None else cls.value
                self._event("blocked", obs=oid, cls=cname)
                blockers.append((distance(self.robot.position, o.position), oid, cname))
        if blockers:
            blockers.sort()
            vis = [self.obstacles[i] for i in visible]
            if self._detour_clear(vis):
                self._event("keep_detour", obs=blockers[0][1])
            else:
                self._do_replan(vis, blockers[0])
        elif self.halted:
            self.halted = False
            self.failures = 0
            self._retarget()
        if not self.done and self.t >= p.max_steps:
            self._finish(Outcome.STEP_LIMIT)

    def _move_robot(self):
        r = self.robot
        if self.halted or r.path_cursor + 1 >= len(self.path):
            self._event("hold")
            self.trace.robot.append(r.position)
            return
        speed = self.world.params.robot_speed
        before = r.position
        if distance(r.position, r.destination) <= speed + _ARRIVE_EPS:
            r.position = r.destination
            r.path_cursor += 1
            k = self.orig_index.get(r.destination_node)
            if k is not None and k > self.orig_cursor:
                self.orig_cursor = k
            self._event("move", arrive=r.destination_node)
            self._retarget()
        else:
            r.position = Point(r.position.x + r.velocity.vi, r.position.y + r.velocity.vj)
            self._event("move", dest=r.destination_node)
        self.trace.executed_cost += distance(before, r.position)
        self.trace.robot.append(r.position)

    def _record_obstacles(self):
        for o, track in zip(self.obstacles, self.trace.obstacles):
            track.append((o.position, o.dest_vertex, o.visible))

    def _detour_clear(self, visible: list[MovingObstacle]) -> bool:
        """While still on a repair sub-path, is the rest of it clear of every
        visible obstacle, including its extrapolated positions?
        """
        r = self.robot
        if r.path_cursor + 1 >= self.sub_len:
            return False
        disks = obstacle_disks(visible, self.world.params.robot_radius, self.margin,
                               self.horizon, r.position)
        w = self.world
        pts = [r.position] + [self.tree.position(i) for i in self.path[r.path_cursor + 1:self.sub_len]]
        for a, b in zip(pts, pts[1:]):
            if not seg_free_k(a.x, a.y, b.x, b.y, w.rect_array, w.params.robot_radius,
                              w.bounds_array, disks):
                return False
        return True

    def _do_replan(self, visible: list[MovingObstacle], blocker):
        _, oid, cname = blocker
        tree = self.tree
        tree.valid[self.obstacle_invalid] = True
        ctx = ReplanContext(self.robot.position, self.original_path, self.orig_cursor,
                            visible, self.obstacles[oid])
        try:
            res = replan(tree, self.world, ctx, self.replan_rng, margin=self.margin, horizon=self.horizon)
        except ReplanFailure as e:
            self.failures += 1
            self.halted = True
            self.robot.velocity = Vector(0.0, 0.0)
            self._event("replan_failed", obs=oid, cls=cname, reason=str(e).replace(" ", "_"),
                        failures=self.failures)
            if self.failures >= MAX_REPLAN_FAILURES:
                self._finish(Outcome.REPLAN_EXHAUSTED)
            return
        self.obstacle_invalid = res.invalidated
        self.failures = 0
        self.halted = False
        self.path = res.path
        self.sub_len = len(res.sub_path)
        self.orig_cursor = max(self.orig_cursor, res.goal_index - 1)
        self.robot.path_cursor = 0
        self._retarget()
        rec = ReplanRecord(self.t, self.robot.position, oid, cname, res.goal_node, res.goal_index,
                           res.samples_added, res.sub_path_cost, list(res.sub_path), list(res.path))
        self.trace.replans.append(rec)
        self._event("replan", obs=oid, cls=cname, goal=res.goal_node, samples=res.samples_added,
                    cost=res.sub_path_cost, root=res.root)
        if self.on_replan is not None:
            self.on_replan(self, res)

    def run(self) -> SimTrace:
        while not self.done:
            self.step()
        return self.trace


def make_obstacles(world: World, n: int | None, spawn: str, path_points: Sequence[Point],
                   rng: np.random.Generator) -> list[MovingObstacle]:
    if n is None:
        if world.moving_obstacles:
            return spawn_from_world(world)
        n = 0
    if spawn == "encounter":
        return place_obstacles_on_path(world, n, path_points)
    if spawn == "random":
        return place_obstacles(world, n, rng)
    raise ValueError(f"unknown spawn preset {spawn!r}")


def run_simulation(world: World, tree: Tree, rng, path: Sequence[int] | None = None,
                   obstacles: int | None = None, spawn: str = "random",
                   margin: float | None = None, on_replan=None) -> SimTrace:
    """Simulate a robot following the best path of ``tree``.

    ``rng`` is an integer seed; obstacle motion and replan sampling draw
    from two independent streams derived from it.
    """
    from .planner import best_path
    if path is None:
        path = best_path(tree, world.goal, world.goal_radius)
    obs_rng = np.random.default_rng([int(rng), 1])
    rep_rng = RandomStream(np.random.default_rng([int(rng), 2]))
    if not path:
        trace = SimTrace(outcome=Outcome.NO_PATH)
        trace.events.append(Event(0, world.start, "end", {"outcome": Outcome.NO_PATH.value}))
        return trace
    pts = [tree.position(i) for i in path]
    obs = make_obstacles(world, obstacles, spawn, pts, obs_rng)
    sim = Simulation(world, tree, path, obs, obs_rng, rep_rng, margin=margin, on_replan=on_replan)
    return sim.run()


def simulate(world: World, seed: int | None = None, nodes: int | None = None, obstacles: int | None = None,
             spawn: str = "random", margin: float | None = None, on_replan=None, on_plan=None):
    """Plan from scratch and simulate; returns ``(tree, original_path, trace)``.

    ``on_plan(tree, path)`` runs after planning, before the first timestep.
    """
    if seed is None:
        seed = world.params.seed
    tree, path, _ = plan(world, seed=seed, nodes=nodes)
    if on_plan is not None:
        on_plan(tree, path)
    trace = run_simulation(world, tree, seed, path=path, obstacles=obstacles, spawn=spawn,
                           margin=margin, on_replan=on_replan)
    trace.header = {"scenario": world.name or "unnamed", "seed": seed,
                    "nodes": world.params.node_budget if nodes is None else nodes,
                    "obstacles": len(trace.obstacles), "spawn": spawn}
    return tree, path, trace
