import json
import pathlib

import pytest

from rrtreplan.world import default_map, load_scenario_file

TESTS = pathlib.Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"

# visibility-graph optimum on the bundled map at robot radius 0.5
C_STAR = 134.1009744573979


def fixture_world(name):
    return load_scenario_file(FIXTURES / name)


def run_specs():
    return json.loads((FIXTURES / "runs.json").read_text())


def run_fixture(spec):
    """Trace of one entry of runs.json."""
    from rrtreplan.simulator import simulate
    world = default_map() if spec.get("scenario") is None else fixture_world(spec["scenario"])
    _, _, trace = simulate(world, seed=spec.get("seed"), nodes=spec.get("nodes"),
                           obstacles=spec.get("obstacles"), spawn=spec.get("spawn", "random"))
    return trace


@pytest.fixture(scope="session")
def streets():
    return default_map()


def random_rect_world(rng, size=40.0, max_obstacles=5):
    """Random world of up to ``max_obstacles`` rectangles with every coordinate on a 0.5 lattice.

    Start and goal are lattice points too, so the dense-grid oracle can use them.
    """
    from rrtreplan.geometry import Point, Rect
    from rrtreplan.world import ScenarioError, World

    def lat(lo, hi):
        return float(rng.integers(int(lo * 2), int(hi * 2) + 1)) / 2.0

    while True:
        rects = []
        for _ in range(int(rng.integers(1, max_obstacles + 1))):
            x, y = lat(2, size - 8), lat(2, size - 8)
            rects.append(Rect.from_bounds(x, y, x + lat(1, size / 3), y + lat(1, size / 3)))
        start = Point(lat(1, size / 4), lat(1, size - 1))
        goal = Point(lat(3 * size / 4, size - 1), lat(1, size - 1))
        try:
            return World(bounds=Rect.from_bounds(0, 0, size, size), obstacles=tuple(rects),
                         start=start, goal=goal)
        except ScenarioError:
            continue


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, before its assertions run."""
    def _report(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
