import re
import xml.etree.ElementTree as ET

from conftest import GOLDEN
from rrtreplan.geometry import Point
from rrtreplan.planner import plan
from rrtreplan.render import render_svg, render_trace, tree_edges
from rrtreplan.world import default_map

NS = "{http://www.w3.org/2000/svg}"


def _numbers(svg):
    root = ET.fromstring(svg)
    _, _, w, h = map(float, root.get("viewBox").split())
    out = []
    for el in root.iter():
        tag = el.tag.replace(NS, "")
        if tag == "line":
            out += [("x", el.get("x1")), ("y", el.get("y1")), ("x", el.get("x2")), ("y", el.get("y2"))]
        elif tag == "polyline":
            for pair in el.get("points").split():
                x, y = pair.split(",")
                out += [("x", x), ("y", y)]
        elif tag == "rect":
            x, y = float(el.get("x")), float(el.get("y"))
            out += [("x", x), ("y", y), ("x", x + float(el.get("width"))), ("y", y + float(el.get("height")))]
        elif tag == "circle":
            cx, cy, r = float(el.get("cx")), float(el.get("cy")), float(el.get("r"))
            out += [("x", cx - r), ("x", cx + r), ("y", cy - r), ("y", cy + r)]
    return w, h, [(k, float(v)) for k, v in out]


def test_empty_trace_gives_bare_map(streets):
    svg = render_trace(streets, "")
    root = ET.fromstring(svg)
    tags = [el.tag.replace(NS, "") for el in root]
    assert "polyline" not in tags
    assert tags.count("rect") == 1 + len(streets.obstacles)
    assert svg == render_svg(streets)


def test_rendering_is_deterministic(streets):
    tree, path, _ = plan(streets, seed=0, nodes=400)
    pts = [tree.position(i) for i in path]
    a = render_svg(streets, tree_edges=tree_edges(tree), original_path=pts, title="t")
    b = render_svg(streets, tree_edges=tree_edges(tree), original_path=pts, title="t")
    assert a == b
    text = (GOLDEN / "streets_three.trace").read_text()
    assert render_trace(streets, text) == render_trace(streets, text)


def test_every_coordinate_inside_viewbox(streets):
    text = (GOLDEN / "streets_three.trace").read_text()
    wild = render_svg(streets, original_path=[Point(-50, -50), Point(150, 150)],
                      obstacle_tracks=[[Point(99.5, 99.5)]], replan_points=[Point(0, 0)])
    for svg in (render_trace(streets, text), wild):
        w, h, nums = _numbers(svg)
        for axis, v in nums:
            assert 0 <= v <= (w if axis == "x" else h) + 1e-9


def test_trace_render_draws_paths_and_tracks(streets):
    text = (GOLDEN / "streets_three.trace").read_text()
    root = ET.fromstring(render_trace(streets, text))
    polylines = [el for el in root if el.tag == NS + "polyline"]
    # original path, executed path, one track per obstacle
    assert len(polylines) == 2 + 3


def test_title_is_escaped():
    svg = render_svg(default_map(), title="a<b & c")
    assert "<title>a&lt;b &amp; c</title>" in svg
    assert re.search(r'viewBox="0 0 600\.000 600\.000"', svg)
