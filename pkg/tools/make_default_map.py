"""Regenerate src/rrtreplan/data/default_map.json.

Street grid with centerlines at 5, 28, 50, 72, 95 on both axes. One block is
left open as a plaza, two blocks are merged, two streets are pinched to
3-unit robot-only passages and the right edge has a dead-end pocket
(y 45..55, closed at x=100).
"""
import itertools
import json
from pathlib import Path

from rrtreplan.geometry import Point, Rect, Segment
from rrtreplan.world import RoadmapGraph, SimParams, World, is_static_free, scenario_to_dict

LINES = (5.0, 28.0, 50.0, 72.0, 95.0)

BLOCKS = [
    # bottom row
    (10, 10, 23, 23), (33, 10, 45, 23), (55, 10, 67, 23), (77, 10, 90, 23),
    # second row; x=28 street pinched to 26.5..29.5
    (10, 33, 26.5, 45), (29.5, 33, 45, 45), (55, 33, 67, 45), (77, 33, 100, 45),
    # third row; plaza at 55..67; right block reaches the boundary
    (10, 55, 23, 67), (33, 55, 45, 67), (77, 55, 100, 67),
    # top row; two middle blocks merged, x=72 street pinched to 70.5..73.5
    (10, 77, 23, 90), (33, 77, 70.5, 90), (73.5, 77, 90, 90),
]


def build():
    rects = tuple(Rect.from_bounds(*map(float, b)) for b in BLOCKS)
    params = SimParams()
    probe = World(bounds=Rect.from_bounds(0.0, 0.0, 100.0, 100.0), obstacles=rects,
                  start=Point(5.0, 5.0), goal=Point(95.0, 95.0), params=params)
    # the intersection inside the dead-end pocket is not a corridor crossing
    verts = [Point(x, y) for y in LINES for x in LINES if (x, y) != (95.0, 50.0)]
    index = {(v.x, v.y): i for i, v in enumerate(verts)}
    edges = []
    for v in verts:
        for dx, dy in ((1, 0), (0, 1)):
            k = LINES.index(v.x) + dx, LINES.index(v.y) + dy
            if k[0] >= len(LINES) or k[1] >= len(LINES):
                continue
            other = (LINES[k[0]], LINES[k[1]])
            if other not in index:
                continue
            if is_static_free(Segment(v, Point(*other)), probe, params.obstacle_radius):
                edges.append((index[(v.x, v.y)], index[other]))
    world = probe.replace(roadmap=RoadmapGraph(tuple(verts), tuple(edges)), name="default")
    return world


if __name__ == "__main__":
    w = build()
    out = Path(__file__).resolve().parents[1] / "src/rrtreplan/data/default_map.json"
    doc = scenario_to_dict(w)
    out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"{len(w.obstacles)} obstacles, {len(w.roadmap.vertices)} vertices, "
          f"{len(w.roadmap.edges)} edges -> {out}")
