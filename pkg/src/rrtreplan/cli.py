"""Command-line entry point: ``rrtreplan {plan,simulate,benchmark,oracle,render}``.

Exit status: 0 success / goal reached, 1 usage or I/O error, 2 no path,
3 collision, 4 replanning exhausted, 5 step limit.
"""
from __future__ import annotations

import argparse
import os
import statistics
import sys
import time

from .world import ScenarioError, default_map, load_scenario_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_PATH = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, nodes=True):
    p.add_argument("--scenario", help="scenario JSON file (default: bundled street map)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: scenario params.seed)")
    if nodes:
        p.add_argument("--nodes", type=int, default=None, help="tree node budget")
    p.add_argument("--out", help="output directory")
    p.add_argument("--svg", action="store_true", help="also write SVG snapshots")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rrtreplan", description="RRT/RRT* planning and dynamic replanning simulator")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="grow a tree and report the best path")
    _common(p)
    p.add_argument("--algo", choices=("rrt", "rrtstar"), default="rrtstar")
    p.add_argument("--step-limit", type=float, default=None, help="max edge length (default: unbounded)")

    p = sub.add_parser("simulate", help="plan, then drive the robot among moving obstacles")
    _common(p)
    p.add_argument("--obstacles", type=int, default=None,
                   help="number of moving obstacles (default: those listed in the scenario)")
    p.add_argument("--spawn", choices=("random", "encounter"), default="random")

    p = sub.add_parser("benchmark", help="paired RRT vs RRT* trials")
    _common(p, nodes=False)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--budgets", default="2000", help="comma-separated node budgets")

    p = sub.add_parser("oracle", help="exact shortest path via the visibility graph")
    _common(p, nodes=False)
    p.add_argument("--grid", action="store_true", help="cross-check with the dense lattice search")

    p = sub.add_parser("render", help="SVG of a trace or tree dump")
    _common(p, nodes=False)
    p.add_argument("--trace", help="trace file written by simulate")
    p.add_argument("--tree", help="tree dump written by plan")
    return ap


def _world(args):
    w = default_map() if args.scenario is None else load_scenario_file(args.scenario)
    return w


def _seed(args, world) -> int:
    s = world.params.seed if args.seed is None else args.seed
    if s < 0:
        raise ValueError("--seed must be non-negative")
    return s


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def cmd_plan(args) -> int:
    from .planner import plan
    from .render import render_svg, tree_edges
    world = _world(args)
    seed = _seed(args, world)
    t0 = time.perf_counter()
    tree, path, res = plan(world, seed=seed, nodes=args.nodes, algorithm=args.algo,
                           step_limit=args.step_limit)
    dt = time.perf_counter() - t0
    if args.out:
        _write(args.out, "tree.csv", tree.dump())
        _write(args.out, "path.csv", "".join(f"{i},{tree.px[i]!r},{tree.py[i]!r}\n" for i in path))
        if args.svg:
            pts = [tree.position(i) for i in path]
            _write(args.out, "plan.svg", render_svg(world, tree_edges=tree_edges(tree), original_path=pts))
    if not path:
        print(f"no path ({tree.n} nodes, {res.attempts} samples)")
        return EXIT_NO_PATH
    print(f"cost {float(tree.cost[path[-1]])!r}")
    print(f"nodes {tree.n} waypoints {len(path)} time {dt:.3f}s")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .render import render_svg, render_trace, tree_edges
    from .simulator import EXIT_CODES, simulate
    world = _world(args)
    seed = _seed(args, world)
    frames = []

    def snap(sim, res):
        if not (args.out and args.svg):
            return
        tree = sim.tree
        tr = sim.trace
        frames.append(render_svg(
            world, tree_edges=tree_edges(tree),
            original_path=tr.original_xy,
            executed_path=list(tr.robot) + [tree.position(i) for i in res.path],
            obstacle_tracks=[[p for p, _, _ in track] for track in tr.obstacles],
            replan_points=[r.position for r in tr.replans] + [sim.robot.position],
            title=f"replan at t={sim.t}"))

    def planned(tree, path):
        if args.out and args.svg:
            frames.append(render_svg(world, tree_edges=tree_edges(tree),
                                     original_path=[tree.position(i) for i in path]))

    tree, path, trace = simulate(world, seed=seed, nodes=args.nodes, obstacles=args.obstacles,
                                 spawn=args.spawn, on_replan=snap, on_plan=planned)
    text = trace.text()
    if args.out:
        _write(args.out, "trace.csv", text)
        if args.svg:
            _write(args.out, "plan.svg", frames.pop(0))
            for k, f in enumerate(frames):
                _write(args.out, f"replan_{k:03d}.svg", f)
            _write(args.out, "final.svg", render_trace(world, text))
    print(f"outcome {trace.outcome}")
    print(f"executed_cost {trace.executed_cost!r}")
    print(f"replans {trace.replan_count} timesteps {trace.timesteps}")
    return EXIT_CODES[trace.outcome]


def cmd_benchmark(args) -> int:
    from .planner import plan
    world = _world(args)
    base = _seed(args, world)
    try:
        budgets = [int(b) for b in args.budgets.split(",") if b.strip()]
    except ValueError:
        raise ValueError(f"--budgets must be a comma-separated list of integers, got {args.budgets!r}")
    if not budgets or any(b < 1 for b in budgets) or args.seeds < 1:
        raise ValueError("need at least one seed and positive budgets")
    rows = ["algo,budget,seed,cost,time_s,success"]
    summary = ["algo,budget,median_cost,median_time_s,successes"]
    for budget in budgets:
        for algo in ("rrt", "rrtstar"):
            costs, times, ok = [], [], 0
            for k in range(args.seeds):
                seed = base + k
                t0 = time.perf_counter()
                tree, path, _ = plan(world, seed=seed, nodes=budget, algorithm=algo)
                dt = time.perf_counter() - t0
                cost = float(tree.cost[path[-1]]) if path else float("inf")
                ok += bool(path)
                costs.append(cost)
                times.append(dt)
                rows.append(f"{algo},{budget},{seed},{cost!r},{dt:.6f},{int(bool(path))}")
            summary.append(f"{algo},{budget},{statistics.median(costs)!r},"
                           f"{statistics.median(times):.6f},{ok}")
    text = "\n".join(rows) + "\n\n" + "\n".join(summary) + "\n"
    if args.out:
        _write(args.out, "benchmark.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import DisconnectedError, grid_shortest_path, visibility_shortest_path
    world = _world(args)
    try:
        res = visibility_shortest_path(world)
    except DisconnectedError as e:
        print(f"no path: {e}")
        return EXIT_NO_PATH
    print(f"cost {res.cost!r}")
    print("path " + " ".join(f"{p.x!r},{p.y!r}" for p in res.path))
    if args.grid:
        g = grid_shortest_path(world)
        print(f"grid_cost {g!r} rel_diff {(g - res.cost) / res.cost:.6f}")
    if args.out:
        _write(args.out, "oracle.csv", "".join(f"{p.x!r},{p.y!r}\n" for p in res.path))
    return EXIT_OK


def cmd_render(args) -> int:
    from .planner import parse_dump
    from .render import render_svg, render_trace, tree_edges_from_arrays
    world = _world(args)
    edges = ()
    if args.tree:
        with open(args.tree, encoding="utf-8") as fh:
            xy, parent, _, valid = parse_dump(fh.read())
        edges = tree_edges_from_arrays(xy, parent, valid)
    if args.trace:
        with open(args.trace, encoding="utf-8") as fh:
            svg = render_trace(world, fh.read(), edges)
    else:
        svg = render_svg(world, tree_edges=edges)
    if args.out:
        _write(args.out, "render.svg", svg)
    else:
        sys.stdout.write(svg)
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "oracle": cmd_oracle,
    "render": cmd_render,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (ScenarioError, OSError, ValueError) as e:
        print(f"rrtreplan: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
