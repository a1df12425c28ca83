import hashlib
import json
import os
import subprocess
import sys

import pytest

from conftest import GOLDEN, TESTS, run_fixture, run_specs
from rrtreplan.planner import plan
from rrtreplan.world import default_map

SPECS = run_specs()


@pytest.mark.parametrize("spec", SPECS, ids=[s["name"] for s in SPECS])
def test_fixture_trace_matches_golden(spec):
    a = run_fixture(spec).text()
    b = run_fixture(spec).text()
    assert a == b
    assert a == (GOLDEN / f"{spec['name']}.trace").read_text(encoding="utf-8")


def test_goldens_cover_every_fixture():
    assert sorted(p.stem for p in GOLDEN.glob("*.trace")) == sorted(s["name"] for s in SPECS)


def _digest(text):
    return hashlib.sha256(text.encode()).hexdigest()


_PROBE = r"""
import hashlib, json, sys
sys.path.insert(0, sys.argv[1])
from conftest import run_fixture, run_specs
from rrtreplan._accel import backend_name
from rrtreplan.planner import plan
from rrtreplan.world import default_map
h = lambda s: hashlib.sha256(s.encode()).hexdigest()
out = {"backend": backend_name()}
for spec in run_specs():
    out[spec["name"]] = h(run_fixture(spec).text())
for algo in ("rrt", "rrtstar"):
    out["tree_" + algo] = h(plan(default_map(), seed=9, nodes=1500, algorithm=algo)[0].dump())
print(json.dumps(out))
"""


def test_numpy_fallback_matches_compiled_backend():
    env = dict(os.environ, RRTREPLAN_NO_NUMBA="1")
    p = subprocess.run([sys.executable, "-c", _PROBE, str(TESTS)], env=env,
                       capture_output=True, text=True, timeout=600)
    assert p.returncode == 0, p.stderr
    got = json.loads(p.stdout)
    assert got.pop("backend") == "numpy"
    want = {s["name"]: _digest((GOLDEN / f"{s['name']}.trace").read_text(encoding="utf-8"))
            for s in SPECS}
    for algo in ("rrt", "rrtstar"):
        want["tree_" + algo] = _digest(plan(default_map(), seed=9, nodes=1500, algorithm=algo)[0].dump())
    assert got == want
