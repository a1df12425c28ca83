"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter (the switch is read at import
time). Both must produce identical tree dumps and traces; only the timings
may differ.

    python3 benchmarks/bench_backends.py --seeds 3 --nodes 2000,5000
"""
import argparse
import hashlib
import json
import os
import subprocess
import sys

WORKER = r"""
import hashlib, json, sys, time
from rrtreplan import backend_name
from rrtreplan.planner import plan
from rrtreplan.simulator import simulate
from rrtreplan.world import default_map

seeds, budgets = json.loads(sys.argv[1])
w = default_map()
t0 = time.perf_counter()
plan(w, seed=0, nodes=50)                      # compile / warm up
warm = time.perf_counter() - t0
rows = []
for n in budgets:
    for s in range(seeds):
        t0 = time.perf_counter()
        tree, path, _ = plan(w, seed=s, nodes=n)
        dt = time.perf_counter() - t0
        rows.append({"kind": "plan", "nodes": n, "seed": s, "time": dt,
                     "digest": hashlib.sha1(tree.dump().encode()).hexdigest()})
for s in range(seeds):
    t0 = time.perf_counter()
    _, _, tr = simulate(w, seed=s, nodes=2000, obstacles=2, spawn="encounter")
    dt = time.perf_counter() - t0
    rows.append({"kind": "simulate", "nodes": 2000, "seed": s, "time": dt,
                 "digest": hashlib.sha1(tr.text().encode()).hexdigest()})
print(json.dumps({"backend": backend_name(), "warmup": warm, "rows": rows}))
"""


def run(backend, seeds, budgets):
    env = dict(os.environ)
    env.pop("RRTREPLAN_NO_NUMBA", None)
    if backend == "numpy":
        env["RRTREPLAN_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, json.dumps([seeds, budgets])],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--nodes", default="2000,5000")
    args = ap.parse_args(argv)
    budgets = [int(x) for x in args.nodes.split(",")]
    res = {b: run(b, args.seeds, budgets) for b in ("numba", "numpy")}

    print("kind,nodes,seed,numba_s,numpy_s,speedup,identical")
    mismatches = 0
    for a, b in zip(res["numba"]["rows"], res["numpy"]["rows"]):
        same = a["digest"] == b["digest"]
        mismatches += not same
        print(f"{a['kind']},{a['nodes']},{a['seed']},{a['time']:.4f},{b['time']:.4f},"
              f"{b['time'] / a['time']:.1f},{int(same)}")
    print(f"# warm-up (compile or cache load): numba {res['numba']['warmup']:.2f}s, "
          f"numpy {res['numpy']['warmup']:.2f}s")
    if mismatches:
        print(f"# {mismatches} outputs differ between backends", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
