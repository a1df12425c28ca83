import math

import numpy as np
import pytest

from rrtreplan.dynamics import MovingObstacle
from rrtreplan.geometry import Point, Rect, Vector, distance, seg_free_k
from rrtreplan.planner import RandomStream, Tree, plan
from rrtreplan.replanner import (ReplanContext, ReplanFailure, invalidate_nodes, obstacle_disks,
                                 replan, reroot_and_rewire, sampling_limits, select_replan_goal,
                                 set_replan_path)
from rrtreplan.world import SimParams, World, empty_world


def obstacle(x, y, vel=(0.0, 0.0), oid=0, radius=2.0):
    p = Point(x, y)
    return MovingObstacle(id=oid, position=p, radius=radius, dest_vertex=0, velocity=Vector(*vel),
                          speed=math.hypot(*vel), prev_vertex=0, visible=True, last_seen_position=p,
                          observed_velocity=Vector(*vel), observation_age=2)


def chain(points):
    t = Tree(points[0])
    ids = [0]
    for p in points[1:]:
        ids.append(t.add_node(p, ids[-1]))
    return t, ids


# invalidation ---------------------------------------------------------------

def test_invalidate_nothing_visible():
    t, ids = chain([Point(10, 10), Point(20, 10)])
    assert invalidate_nodes(t, [], empty_world()).size == 0


def test_invalidate_node_at_obstacle_centre_and_keep_goal():
    t, ids = chain([Point(10, 10), Point(20, 10), Point(30, 10)])
    hit = invalidate_nodes(t, [obstacle(20, 10), obstacle(30, 11)], empty_world(), exempt=(ids[-1],))
    assert hit.tolist() == [ids[1]]
    assert not t.valid[ids[1]] and t.valid[ids[2]]
    assert t.n == 3


def test_invalidate_radius_is_obstacle_plus_robot():
    w = empty_world()
    t, _ = chain([Point(10, 10), Point(22.5, 10), Point(22.6, 10)])
    hit = invalidate_nodes(t, [obstacle(20, 10)], w)
    assert hit.tolist() == [1]


# rejoin node ------------------------------------------------------------------

FOLDED = [Point(x, 0.0) for x in range(0, 31, 5)] + [Point(30, 8), Point(22, 16), Point(14, 24), Point(6, 32)]


def _ctx(t, ids, robot, blocking, visible=None, cursor=0):
    return ReplanContext(robot, ids, cursor, [blocking] if visible is None else visible, blocking)


def test_rejoin_after_node_closest_to_obstacle():
    w = World(bounds=Rect.from_bounds(-5, -5, 50, 50), obstacles=(), start=Point(0, 0), goal=Point(6, 32))
    t, ids = chain(FOLDED)
    o = obstacle(27, 11)       # between path nodes 7 and 8, nearer to 7
    assert select_replan_goal(_ctx(t, ids, Point(0, 0), o), t, w) == 8


def test_obstacle_beyond_last_node_gives_final_goal():
    w = empty_world()
    t, ids = chain([Point(10, 10), Point(20, 10), Point(30, 10)])
    assert select_replan_goal(_ctx(t, ids, Point(10, 10), obstacle(60, 10)), t, w) == 2


def test_invalid_successor_is_skipped():
    w = empty_world()
    t, ids = chain([Point(x, 10.0) for x in range(10, 71, 10)])
    o = obstacle(35, 10)
    t.valid[ids[5]] = False
    # closest clear candidate ahead is node 3 (x=40) -> successor 4, valid
    assert select_replan_goal(_ctx(t, ids, Point(10, 10), o), t, w) == 4
    t.valid[ids[4]] = False
    assert select_replan_goal(_ctx(t, ids, Point(10, 10), o), t, w) == 6


def test_no_clear_candidate_is_a_failure():
    w = empty_world()
    t, ids = chain([Point(10, 10), Point(30, 10), Point(31, 10)])
    o = obstacle(30, 10)
    far = obstacle(31.5, 10, oid=1)
    ctx = ReplanContext(Point(10, 10), ids, 0, [o, far], o)
    with pytest.raises(ReplanFailure):
        select_replan_goal(ctx, t, w)


def test_rejoin_never_behind_cursor():
    w = empty_world()
    t, ids = chain([Point(x, 10.0) for x in range(10, 71, 10)])
    g = select_replan_goal(_ctx(t, ids, Point(45, 10), obstacle(47, 10), cursor=4), t, w)
    assert g > 4


# sampling area ----------------------------------------------------------------

def test_sampling_limits_examples():
    w = empty_world()
    a = sampling_limits(Point(10, 10), Point(20, 10), w)
    assert a.min.x <= 5 and a.min.y <= 5 and a.max.x >= 25 and a.max.y >= 15
    assert a.as_tuple() == (5, 0, 25, 20)
    d = sampling_limits(Point(50, 50), Point(50, 50), w)
    assert d.as_tuple() == (46, 46, 54, 54)
    edge = sampling_limits(Point(2, 2), Point(30, 2), w)
    assert edge.min.x == 0 and edge.min.y == 0


def test_sampling_area_contains_endpoints():
    w = empty_world()
    rng = np.random.default_rng(0)
    for _ in range(500):
        a, b = Point(*rng.uniform(0, 100, 2)), Point(*rng.uniform(0, 100, 2))
        area = sampling_limits(a, b, w)
        assert area.contains(a) and area.contains(b)


# reroot -------------------------------------------------------------------------

def test_reroot_empty_area():
    w = empty_world()
    t, _ = chain([Point(10, 10), Point(90, 90)])
    root, temp = reroot_and_rewire(t, Point(50, 50), Rect.from_bounds(45, 45, 55, 55), w, np.zeros((0, 3)))
    assert t.parent[root] == -1 and t.cost[root] == 0 and temp.size == 0
    assert t.children(root) == []


def test_reroot_adopts_visible_nodes():
    w = empty_world()
    t, ids = chain([Point(10, 10), Point(52, 50), Point(53, 53)])
    root, temp = reroot_and_rewire(t, Point(50, 50), Rect.from_bounds(45, 45, 55, 55), w, np.zeros((0, 3)))
    assert t.parent[ids[1]] == root and t.cost[ids[1]] == pytest.approx(2.0)
    assert t.parent[ids[2]] == root and t.cost[ids[2]] == pytest.approx(distance(Point(50, 50), Point(53, 53)))
    assert t.check_invariants(w) == []


WALLED = World(bounds=Rect.from_bounds(0, 0, 100, 100), obstacles=(Rect.from_bounds(54, 40, 56, 60),),
               start=Point(10, 50), goal=Point(90, 50))


def test_node_behind_wall_is_disabled_during_reroot():
    t, ids = chain([Point(10, 50), Point(40, 30), Point(60, 30), Point(60, 50)])
    root, temp = reroot_and_rewire(t, Point(50, 50), Rect.from_bounds(40, 40, 65, 60), WALLED,
                                   np.zeros((0, 3)))
    assert temp.tolist() == [ids[3]]
    assert not t.valid[ids[3]]
    assert t.parent[ids[3]] == ids[2]


def test_node_behind_wall_is_restored_after_replan():
    tree, path, _ = plan(WALLED, seed=0, nodes=1500)
    robot = tree.position(path[len(path) // 3])
    # put the robot right in front of the wall
    robot = Point(50, 50) if robot.x > 55 else robot
    before = tree.valid[: tree.n].copy()
    blocker = obstacle(robot.x + 3, robot.y)
    k = max(i for i, nid in enumerate(path) if tree.px[nid] < robot.x)
    ctx = ReplanContext(robot, path, k, [blocker], blocker)
    res = replan(tree, WALLED, ctx, RandomStream(1))
    after = tree.valid[: before.shape[0]]
    outside = np.ones(before.shape[0], bool)
    outside[res.invalidated] = False
    assert np.array_equal(after[outside], before[outside])
    assert not after[res.invalidated].any()


# full replan ----------------------------------------------------------------------

TWO_CORRIDORS = World(bounds=Rect.from_bounds(0, 0, 60, 28), obstacles=(Rect.from_bounds(20, 8, 40, 20),),
                      start=Point(5, 4), goal=Point(55, 4), params=SimParams(obstacle_radius=4.0))


def _corridor_setup():
    tree, path, _ = plan(TWO_CORRIDORS, seed=3, nodes=3000)
    assert max(tree.py[i] for i in path) < 8       # plan uses the lower corridor
    k = max(i for i, nid in enumerate(path) if tree.px[nid] <= 15)
    robot = tree.position(path[k])
    blocker = obstacle(30, 4, vel=(-0.6, 0.0), radius=4.0)
    return tree, path, k, robot, blocker


def test_blocked_corridor_detours_through_the_other():
    tree, path, k, robot, blocker = _corridor_setup()
    n_before = tree.n
    ctx = ReplanContext(robot, path, k, [blocker], blocker)
    res = replan(tree, TWO_CORRIDORS, ctx, RandomStream(7))
    sub = [tree.position(i) for i in res.sub_path]
    assert sub[0] == robot
    assert max(p.y for p in sub) > 20
    assert res.path[len(res.sub_path) - 1] == path[res.goal_index]
    assert tree.n >= n_before
    assert tree.check_invariants(TWO_CORRIDORS) == []
    disks = obstacle_disks([blocker], TWO_CORRIDORS.params.robot_radius)
    w = TWO_CORRIDORS
    for a, b in zip(sub, sub[1:]):
        assert seg_free_k(a.x, a.y, b.x, b.y, w.rect_array, w.params.robot_radius, w.bounds_array, disks)


def test_replan_is_deterministic():
    out = []
    for _ in range(2):
        tree, path, k, robot, blocker = _corridor_setup()
        res = replan(tree, TWO_CORRIDORS, ReplanContext(robot, path, k, [blocker], blocker), RandomStream(7))
        out.append(([tree.position(i) for i in res.sub_path], tree.dump()))
    assert out[0] == out[1]


def test_visible_rejoin_connects_without_growth():
    w = empty_world()
    t, ids = chain([Point(x, 50.0) for x in range(10, 91, 10)])
    o = obstacle(45, 60, vel=(0.0, -0.6))
    res = replan(t, w, ReplanContext(Point(30, 50), ids, 2, [o], o), RandomStream(0))
    assert res.samples_added <= 5
    assert res.sub_path[0] == res.root


def test_splice_to_final_goal_has_no_remainder():
    t, ids = chain([Point(10, 10), Point(20, 10), Point(30, 10)])
    root = t.add_root(Point(15, 12))
    t.reparent(ids[2], root)
    sub, full = set_replan_path(t, root, ids[2], 2, ids)
    assert full == sub == [root, ids[2]]


def test_splice_point_appears_once():
    t, ids = chain([Point(x, 10.0) for x in range(10, 61, 10)])
    root = t.add_root(Point(25, 14))
    land = t.add_node(Point(38, 12), root)
    sub, full = set_replan_path(t, root, land, 3, ids)
    assert sub == [root, land, ids[3]]
    assert full == [root, land, ids[3], ids[4], ids[5]]
    assert full.count(ids[3]) == 1


def test_failed_replan_restores_validity():
    w = empty_world()
    t, ids = chain([Point(10, 10), Point(30, 10), Point(31, 10)])
    before = t.valid[: t.n].copy()
    o = obstacle(30, 10)
    far = obstacle(31.5, 10, oid=1)
    with pytest.raises(ReplanFailure):
        replan(t, w, ReplanContext(Point(10, 10), ids, 0, [o, far], o), RandomStream(0))
    assert np.array_equal(t.valid[: before.shape[0]], before)


def test_prediction_disks():
    o = obstacle(50, 50, vel=(0.6, 0.0))
    plain = obstacle_disks([o], 0.5)
    assert plain.tolist() == [[50, 50, 2.5]]
    ahead = obstacle_disks([o], 0.5, margin=0.6, horizon=3)
    assert ahead.shape == (4, 3)
    assert ahead[:, 0].tolist() == pytest.approx([50, 50.6, 51.2, 51.8])
    # predicted disks that already cover the robot are dropped
    near = obstacle_disks([o], 0.5, margin=0.0, horizon=3, robot=Point(53.5, 50))
    assert near.shape == (2, 3)
