"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""
import math
import statistics
import time

import numpy as np

from conftest import C_STAR, FIXTURES, random_rect_world, run_fixture, run_specs
from test_obstruction import _cls, _rot, brute_force, random_case
from rrtreplan.geometry import Point
from rrtreplan.oracle import DisconnectedError, grid_shortest_path, visibility_shortest_path
from rrtreplan.planner import GrowConfig, RandomStream, Tree, best_path, grow_rrt_star, plan
from rrtreplan.simulator import simulate
from rrtreplan.spatial_index import KDIndex
from rrtreplan.world import default_map, load_scenario_file

SEEDS = range(20)


def _best(tree, path):
    return float(tree.cost[path[-1]]) if path else math.inf


def test_cost_ratio_against_oracle(streets, report):
    costs, times = [], []
    for s in SEEDS:
        t0 = time.perf_counter()
        tree, path, _ = plan(streets, seed=s, nodes=5000)
        times.append(time.perf_counter() - t0)
        costs.append(_best(tree, path))
    good = sum(c <= 1.10 * C_STAR for c in costs)
    ok = good >= 15 and max(times) <= 30.0
    report("cost ratio <= 1.10 C* (5000 nodes)", ok,
           f"{good}/20 seeds, worst ratio {max(costs) / C_STAR:.4f}, slowest trial {max(times):.2f}s")
    assert ok


def test_rrt_star_beats_rrt(streets, report):
    wins, gains = 0, []
    for s in SEEDS:
        a = _best(*plan(streets, seed=s, nodes=2000)[:2])
        b = _best(*plan(streets, seed=s, nodes=2000, algorithm="rrt")[:2])
        wins += a < b
        gains.append((b - a) / b)
    med = statistics.median(gains)
    ok = wins >= 16 and med >= 0.05
    report("RRT* cheaper than RRT (2000 nodes)", ok, f"{wins}/20 strict wins, median improvement {med:.1%}")
    assert ok


def test_best_cost_never_increases(streets, report):
    bad = []
    for s in range(10):
        tree = Tree(streets.start, capacity=5064)
        cfg = GrowConfig.from_world(streets, RandomStream(s), node_budget=0)
        seen = []
        for n in range(100, 5001, 100):
            cfg.node_budget = n
            grow_rrt_star(tree, streets, cfg)
            path = best_path(tree, streets.goal, streets.goal_radius)
            if path:
                seen.append(float(tree.cost[path[-1]]))
            elif seen:
                bad.append((s, n, "lost connection"))
        if not seen:
            bad.append((s, None, "never connected"))
        bad += [(s, k, "increase") for k in range(1, len(seen)) if seen[k] > seen[k - 1]]
    report("best-cost monotonicity (10 seeds, every 100 nodes)", not bad, f"{len(bad)} violations")
    assert not bad


def test_tree_invariants_after_growth_and_replans(streets, report):
    errors = []
    checks = 0

    def audit(label, tree, world):
        nonlocal checks
        checks += 1
        errors.extend(f"{label}: {e}" for e in tree.check_invariants(world))

    # growth on the bundled map, with the no-cost-increase check between chunks
    for s in range(5):
        tree = Tree(streets.start, capacity=3064)
        cfg = GrowConfig.from_world(streets, RandomStream(s), node_budget=0)
        prev = None
        for n in range(500, 3001, 500):
            cfg.node_budget = n
            grow_rrt_star(tree, streets, cfg)
            cost = tree.cost[: tree.n].copy()
            if prev is not None and np.any(cost[: prev.shape[0]] > prev):
                errors.append(f"growth seed {s}: a node cost increased")
            prev = cost
            audit(f"growth seed {s} n={n}", tree, streets)

    # after every replan of every simulated scenario
    def hook_for(label, world):
        return lambda sim, res: audit(f"{label} t={sim.t}", sim.tree, world)

    runs = []
    for spec in run_specs():
        world = default_map() if spec.get("scenario") is None else load_scenario_file(FIXTURES / spec["scenario"])
        runs.append((spec["name"], world, dict(seed=spec.get("seed"), nodes=spec.get("nodes"),
                                               obstacles=spec.get("obstacles"),
                                               spawn=spec.get("spawn", "random"))))
    for s in range(5):
        runs.append((f"encounter seed {s}", streets, dict(seed=s, nodes=2000, obstacles=2, spawn="encounter")))
        runs.append((f"random3 seed {s}", streets, dict(seed=s, nodes=5000, obstacles=3)))
    replans = 0
    for label, world, kw in runs:
        tree, _, trace = simulate(world, on_replan=hook_for(label, world), **kw)
        replans += trace.replan_count
        audit(f"{label} final", tree, world)
    ok = not errors and replans > 0
    report("tree invariant suite", ok, f"{checks} audits incl. {replans} replans, {len(errors)} violations")
    assert ok, errors[:5]


def test_oracle_matches_dense_grid(report):
    rng = np.random.default_rng(0)
    worst, done, mismatched = 0.0, 0, 0
    while done < 50:
        w = random_rect_world(rng)
        try:
            exact = visibility_shortest_path(w).cost
        except DisconnectedError:
            try:
                grid_shortest_path(w)
                mismatched += 1
            except DisconnectedError:
                pass
            continue
        worst = max(worst, abs(grid_shortest_path(w) - exact) / exact)
        done += 1
    ok = worst <= 0.005 and mismatched == 0
    report("oracle vs 0.25 grid (50 worlds)", ok, f"worst gap {worst:.3%}, connectivity mismatches {mismatched}")
    assert ok


def test_classifier_against_brute_force(report):
    rng = np.random.default_rng(7)
    agree = compared = invariance_fail = 0
    for _ in range(100_000):
        rp, rv, op, ov = random_case(rng)
        th = 30.0 if rng.random() < 0.5 else float(rng.uniform(5, 85))
        want = brute_force(rp, rv, op, ov, th)
        if want is None:
            continue
        got = _cls(rp, rv, op, ov, th)
        compared += 1
        agree += got is want
        a = rng.uniform(0, 2 * math.pi)
        c, s = math.cos(a), math.sin(a)
        rotated = (_rot(rp, c, s), _rot(rv, c, s), _rot(op, c, s), _rot(ov, c, s))
        if brute_force(*rotated, th) is not None and _cls(*rotated, th) is not got:
            invariance_fail += 1
        shift = rng.uniform(-1e3, 1e3, 2)
        if _cls(rp + shift, rv, op + shift, ov, th) is not got:
            invariance_fail += 1
    ok = agree == compared and invariance_fail == 0 and compared > 90_000
    report("obstruction classifier (1e5 cases)", ok,
           f"{agree}/{compared} agree, {invariance_fail} invariance violations")
    assert ok


def test_spatial_index_against_linear_scan(report):
    rng = np.random.default_rng(3)
    # a coarse lattice forces many exact distance ties
    pts = rng.integers(0, 200, size=(10_000, 2)).astype(float) / 2.0
    ids = rng.permutation(10_000)
    idx = KDIndex(16)
    for i, (x, y) in zip(ids, pts):
        idx.insert(int(i), Point(x, y))
    keep = rng.random(10_000) < 0.8
    xs, ys = pts[:, 0], pts[:, 1]
    bad = 0
    for q in range(1000):
        qp = Point(*(rng.integers(0, 200, 2) / 2.0)) if q % 2 else Point(*rng.uniform(-5, 105, 2))
        k = int(rng.integers(1, 30))
        flt = keep if q % 3 == 0 else None
        d2 = (xs - qp.x) ** 2 + (ys - qp.y) ** 2
        order = np.lexsort((ids, d2))
        if flt is not None:
            order = order[flt[ids[order]]]
        want = ids[order[:k]].tolist()
        got = [e.node_id for e in idx.k_nearest(qp, k, flt)]
        bad += got != want
    report("spatial index (1e4 entries x 1e3 queries)", bad == 0, f"{bad} mismatching queries")
    assert bad == 0


def _on_original_path(trace):
    orig = set(trace.original_path)
    return all(r.goal_node in orig for r in trace.replans)


def test_end_to_end_replanning(streets, report):
    enc_ok, off_path = 0, 0
    for s in SEEDS:
        tree, _, tr = simulate(streets, seed=s, nodes=2000, obstacles=2, spawn="encounter")
        enc_ok += tr.outcome == "GoalReached" and tr.replan_count >= 1 and tr.collision_steps == 0
        off_path += not _on_original_path(tr)
    rnd_ok = 0
    for s in SEEDS:
        tree, _, tr = simulate(streets, seed=s, nodes=5000, obstacles=3)
        rnd_ok += tr.outcome == "GoalReached"
        off_path += not _on_original_path(tr)
    ok = enc_ok >= 18 and rnd_ok >= 17 and off_path == 0
    report("end-to-end replanning", ok,
           f"encounter {enc_ok}/20, three-obstacle {rnd_ok}/20, traces with off-path rejoin {off_path}")
    assert ok


def test_fixture_traces_are_byte_identical(report):
    same = [run_fixture(spec).text() == run_fixture(spec).text() for spec in run_specs()]
    report("determinism (fixture traces)", all(same), f"{sum(same)}/{len(same)} fixtures byte-equal")
    assert all(same)
