"""Regenerate the committed golden traces under tests/golden/.

Run only when a trace change is intended; the determinism tests compare
fresh runs against these files byte for byte.
"""
import json
import pathlib

from rrtreplan.simulator import simulate
from rrtreplan.world import default_map, load_scenario_file

ROOT = pathlib.Path(__file__).resolve().parents[1]
FIX = ROOT / "tests" / "fixtures"
GOLD = ROOT / "tests" / "golden"


def run_fixture(spec):
    world = default_map() if spec.get("scenario") is None else load_scenario_file(FIX / spec["scenario"])
    _, _, trace = simulate(world, seed=spec.get("seed"), nodes=spec.get("nodes"),
                           obstacles=spec.get("obstacles"), spawn=spec.get("spawn", "random"))
    return trace


def main():
    GOLD.mkdir(exist_ok=True)
    for spec in json.loads((FIX / "runs.json").read_text()):
        text = run_fixture(spec).text()
        (GOLD / f"{spec['name']}.trace").write_text(text, encoding="utf-8")
        print(f"{spec['name']}: {len(text.splitlines())} lines")


if __name__ == "__main__":
    main()
