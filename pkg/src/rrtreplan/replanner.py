"""Local repair of the planned path around moving obstacles.

On a blocked verdict the robot keeps the original tree. Nodes swallowed by
visible obstacles are invalidated, a rejoin node further along the original
path is picked, and a new root at the robot's position adopts every reachable
tree node in a box spanning robot and rejoin node. A short RRT* burst inside
that box then connects the new root to the rejoin node, and the resulting
sub-path is spliced in front of the rest of the original path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._accel import njit
from .dynamics import MovingObstacle
from .geometry import Point, Rect, distance, seg_free_k
from .planner import GROW_REACHED, GrowConfig, GrowResult, RandomStream, Tree, _grow, reparent_k
from .world import World


class ReplanFailure(RuntimeError):
    pass


@dataclass
class ReplanContext:
    """Inputs for one replan: robot position, the original path and progress on it."""

    robot_pos: Point
    original_path: list[int]
    path_cursor: int
    visible: list[MovingObstacle]
    blocking: MovingObstacle
    sampling_area: Rect | None = None
    goal_index: int | None = None


@dataclass
class ReplanResult:
    path: list[int]
    sub_path: list[int]
    root: int
    goal_node: int
    goal_index: int
    sampling_area: Rect
    samples_added: int
    sub_path_cost: float
    invalidated: np.ndarray = field(repr=False)
    grow: GrowResult | None = field(default=None, repr=False)


def obstacle_disks(obstacles: Sequence[MovingObstacle], robot_radius: float, margin: float = 0.0,
                   horizon: int = 0, robot: Point | None = None) -> np.ndarray:
    """Rows ``(x, y, r)``: each obstacle grown by robot radius plus ``margin``.

    With ``horizon`` > 0, obstacles with a velocity estimate also get disks
    at their extrapolated positions for that many steps ahead. Predicted
    disks that would already cover ``robot`` are left out.
    """
    from .dynamics import estimate_velocity
    rows = []
    for o in obstacles:
        r = o.radius + robot_radius + margin
        rows.append((o.position.x, o.position.y, r))
        v = estimate_velocity(o) if horizon > 0 else None
        if v is None or (v.vi == 0.0 and v.vj == 0.0):
            continue
        for k in range(1, horizon + 1):
            c = Point(o.position.x + k * v.vi, o.position.y + k * v.vj)
            if robot is not None and distance(c, robot) <= r:
                break
            rows.append((c.x, c.y, r))
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def invalidate_nodes(tree: Tree, obstacles: Sequence[MovingObstacle], world: World,
                     exempt: Sequence[int] = ()) -> np.ndarray:
    """Mark every valid node within obstacle radius + robot radius of an obstacle invalid.

    Returns the ids that were switched off (so the caller can restore them).
    """
    rr = world.params.robot_radius
    hit = np.zeros(tree.n, np.bool_)
    for o in obstacles:
        r = o.radius + rr
        dx = tree.px[: tree.n] - o.position.x
        dy = tree.py[: tree.n] - o.position.y
        hit |= dx * dx + dy * dy <= r * r
    hit &= tree.valid[: tree.n]
    for e in exempt:
        hit[e] = False
    ids = np.nonzero(hit)[0]
    tree.valid[ids] = False
    return ids


def _collides(p: Point, obstacles, robot_radius: float) -> bool:
    return any(distance(p, o.position) <= o.radius + robot_radius for o in obstacles)


def select_replan_goal(ctx: ReplanContext, tree: Tree, world: World) -> int:
    """Pick the rejoin node on the original path; returns its index in the path.

    Among path nodes ahead of the cursor that are farther from the robot than
    the blocking obstacle and clear of every visible obstacle, take the one
    closest to the blocking obstacle and rejoin at its successor (skipping
    invalid nodes). With no node farther away, rejoin at the final goal.
    """
    path = ctx.original_path
    last = len(path) - 1
    robot = ctx.robot_pos
    blk = ctx.blocking.position
    d_obs = distance(robot, blk)
    rr = world.params.robot_radius
    ahead = [k for k in range(ctx.path_cursor + 1, last + 1)
             if distance(robot, tree.position(path[k])) > d_obs]
    if not ahead:
        ctx.goal_index = last
        return last
    clear = [k for k in ahead if not _collides(tree.position(path[k]), ctx.visible, rr)]
    if not clear:
        raise ReplanFailure("every path node ahead is covered by an obstacle")
    k_star = min(clear, key=lambda k: (distance(tree.position(path[k]), blk), k))
    g = min(k_star + 1, last)
    while g < last and not tree.valid[path[g]]:
        g += 1
    ctx.goal_index = g
    return g


def sampling_limits(robot: Point, goal: Point, world: World) -> Rect:
    """Square centred between robot and rejoin node, half-extent equal to their distance.

    Never smaller than one obstacle diameter, clipped to the world bounds.
    """
    d = distance(robot, goal)
    half = max(d, 2.0 * world.params.obstacle_radius)
    cx = 0.5 * (robot.x + goal.x)
    cy = 0.5 * (robot.y + goal.y)
    b = world.bounds
    return Rect.from_bounds(max(b.min.x, cx - half), max(b.min.y, cy - half),
                            min(b.max.x, cx + half), min(b.max.y, cy + half))


def _in_area_mask(tree: Tree, area: Rect) -> np.ndarray:
    x = tree.px[: tree.n]
    y = tree.py[: tree.n]
    return (x >= area.min.x) & (x <= area.max.x) & (y >= area.min.y) & (y <= area.max.y)


@njit
def reroot_k(px, py, parent, cost, valid, fchild, nsib, cand, root, rects, inflate, bounds,
             disks, temp, stack):
    moved = 0
    nt = 0
    for k in range(cand.shape[0]):
        i = cand[k]
        if seg_free_k(px[root], py[root], px[i], py[i], rects, inflate, bounds, disks):
            reparent_k(px, py, parent, cost, fchild, nsib, i, root, stack)
            moved += 1
        else:
            valid[i] = False
            temp[nt] = i
            nt += 1
    return moved, nt


def reroot_and_rewire(tree: Tree, robot: Point, area: Rect, world: World,
                      disks: np.ndarray) -> tuple[int, np.ndarray]:
    """Add a root at the robot and hang every valid in-area node it can see under it.

    Nodes the new root cannot reach directly are switched off for the
    duration of the replan; their ids are returned for restoration.
    """
    root = tree.add_root(robot)
    mask = _in_area_mask(tree, area) & tree.valid[: tree.n]
    # earlier roots keep their role; only ordinary nodes move
    mask[tree.roots] = False
    cand = np.nonzero(mask)[0].astype(np.int64)
    temp = np.empty(cand.shape[0], np.int64)
    _, nt = reroot_k(tree.px, tree.py, tree.parent, tree.cost, tree.valid, tree.fchild, tree.nsib,
                     cand, root, world.rect_array, float(world.params.robot_radius),
                     world.bounds_array, disks, temp, np.empty(tree.n, np.int64))
    return root, temp[:nt].copy()


def _landing(tree: Tree, root: int, goal: int, world: World, disks: np.ndarray, allowed) -> tuple[int, float]:
    """Cheapest node of the new root's subtree that reaches the rejoin node."""
    gp = tree.position(goal)
    r = world.goal_radius
    clr = world.params.robot_radius
    best, best_cost = -1, np.inf
    for i in tree.nodes_within(gp, r):
        i = int(i)
        if not allowed[i] or tree.root_of(i) != root:
            continue
        if i == goal:
            c = float(tree.cost[i])
        elif seg_free_k(tree.px[i], tree.py[i], gp.x, gp.y, world.rect_array, clr,
                        world.bounds_array, disks):
            c = float(tree.cost[i]) + distance(tree.position(i), gp)
        else:
            continue
        if c < best_cost:
            best, best_cost = i, c
    return best, best_cost


def set_replan_path(tree: Tree, root: int, landing: int, goal_index: int,
                    original_path: Sequence[int]) -> tuple[list[int], list[int]]:
    """Splice root-to-rejoin sub-path with the original path past the rejoin node."""
    goal = original_path[goal_index]
    sub = tree.path_to(landing)
    if sub[0] != root:
        raise ReplanFailure("landing node is not under the replan root")
    if landing != goal:
        sub.append(goal)
    return sub, sub + list(original_path[goal_index + 1:])


def replan(tree: Tree, world: World, ctx: ReplanContext, rng: RandomStream,
           margin: float = 0.0, horizon: int = 0) -> ReplanResult:
    """Run one local replan. Raises ``ReplanFailure`` when no sub-path is found.

    Obstacle-invalidated nodes stay invalid on return (the caller restores
    them before the next replan); nodes disabled only because the new root
    could not see them are restored here. The new root stays in the tree.
    """
    p = world.params
    final = ctx.original_path[-1]
    invalid = invalidate_nodes(tree, ctx.visible, world, exempt=(final,))
    try:
        g = select_replan_goal(ctx, tree, world)
    except ReplanFailure:
        tree.valid[invalid] = True
        raise
    goal = ctx.original_path[g]
    goal_pos = tree.position(goal)
    area = sampling_limits(ctx.robot_pos, goal_pos, world)
    ctx.sampling_area = area
    disks = obstacle_disks(ctx.visible, p.robot_radius, margin, horizon, ctx.robot_pos)
    root, temp = reroot_and_rewire(tree, ctx.robot_pos, area, world, disks)
    res = None
    try:
        allowed = tree.valid[: tree.n] & _in_area_mask(tree, area)
        allowed[tree.roots[:-1]] = False
        landing, _ = _landing(tree, root, goal, world, disks, allowed)
        if landing < 0:
            cfg = GrowConfig.from_world(world, rng, node_budget=tree.n + p.replan_sample_budget,
                                        sampling_region=area,
                                        neighbor_fraction=p.replan_neighbor_fraction)
            res = _grow(tree, world, cfg, goal_pos, cfg.node_budget, True, disks=disks,
                        allowed=allowed, stop=(goal_pos.x, goal_pos.y, world.goal_radius))
            allowed = res.allowed
            landing, _ = _landing(tree, root, goal, world, disks, allowed)
        if landing < 0:
            raise ReplanFailure("replan budget spent without reaching the rejoin node")
        sub, path = set_replan_path(tree, root, landing, g, ctx.original_path)
    except ReplanFailure:
        tree.valid[invalid] = True
        raise
    finally:
        tree.valid[temp] = True
    return ReplanResult(path=path, sub_path=sub, root=root, goal_node=goal, goal_index=g,
                        sampling_area=area, samples_added=0 if res is None else res.added,
                        sub_path_cost=tree.path_length(sub), invalidated=invalid, grow=res)
