"""Deterministic SVG scenes: map, tree, paths and obstacle tracks.

World y points up; SVG y points down, so every y is flipped against the top
bound. Coordinates are clamped into the world bounds and printed with fixed
precision, so identical inputs give identical bytes.
"""
from __future__ import annotations

from typing import Sequence

from .geometry import Point
from .world import World

COLORS = {
    "obstacle": "#6b6b6b",
    "roadmap": "#d9c9a3",
    "tree": "#b8c4d6",
    "original": "#1f4fd1",
    "executed": "#d11fbd",
    "track": "#e08a00",
    "disk": "#e08a00",
    "start": "#1a9e3a",
    "goal": "#c62828",
    "replan": "#000000",
}


class _Canvas:
    def __init__(self, world: World, scale: float):
        b = world.bounds
        self.b = b
        self.scale = scale
        self.parts: list[str] = []

    def _xy(self, x: float, y: float) -> tuple[str, str]:
        b = self.b
        x = min(max(x, b.min.x), b.max.x)
        y = min(max(y, b.min.y), b.max.y)
        return f"{(x - b.min.x) * self.scale:.3f}", f"{(b.max.y - y) * self.scale:.3f}"

    def add(self, s: str):
        self.parts.append(s)

    def line(self, a: Point, c: Point, color: str, width: float, extra: str = ""):
        x1, y1 = self._xy(a.x, a.y)
        x2, y2 = self._xy(c.x, c.y)
        self.add(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" '
                 f'stroke-width="{width:.2f}"{extra}/>')

    def polyline(self, pts: Sequence[Point], color: str, width: float, extra: str = ""):
        if len(pts) < 2:
            return
        coords = " ".join(",".join(self._xy(p.x, p.y)) for p in pts)
        self.add(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                 f'stroke-width="{width:.2f}"{extra}/>')

    def rect(self, xmin, ymin, xmax, ymax, fill: str, extra: str = ""):
        x0, y1 = self._xy(xmin, ymax)
        x1, y0 = self._xy(xmax, ymin)
        w = float(x1) - float(x0)
        h = float(y0) - float(y1)
        self.add(f'<rect x="{x0}" y="{y1}" width="{w:.3f}" height="{h:.3f}" fill="{fill}"{extra}/>')

    def circle(self, c: Point, r: float, fill: str, stroke: str = "none", extra: str = ""):
        x, y = self._xy(c.x, c.y)
        # keep the whole circle inside the frame
        b = self.b
        r = max(0.0, min(r, c.x - b.min.x, b.max.x - c.x, c.y - b.min.y, b.max.y - c.y))
        self.add(f'<circle cx="{x}" cy="{y}" r="{r * self.scale:.3f}" fill="{fill}" '
                 f'stroke="{stroke}"{extra}/>')

    def svg(self) -> str:
        w = self.b.width * self.scale
        h = self.b.height * self.scale
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
                f'viewBox="0 0 {w:.3f} {h:.3f}">')
        return "\n".join([head, *self.parts, "</svg>"]) + "\n"


def render_svg(world: World, *, tree_edges: Sequence[tuple[Point, Point]] = (),
               original_path: Sequence[Point] = (), executed_path: Sequence[Point] = (),
               obstacle_tracks: Sequence[Sequence[Point]] = (), replan_points: Sequence[Point] = (),
               show_roadmap: bool = True, scale: float = 6.0, title: str | None = None) -> str:
    cv = _Canvas(world, scale)
    if title:
        cv.add(f"<title>{_escape(title)}</title>")
    b = world.bounds
    cv.rect(b.min.x, b.min.y, b.max.x, b.max.y, "#ffffff", ' stroke="#000000" stroke-width="1.00"')
    if show_roadmap:
        v = world.roadmap.vertices
        for i, j in world.roadmap.edges:
            cv.line(v[i], v[j], COLORS["roadmap"], 1.5, ' stroke-dasharray="4 3"')
    for r in world.obstacles:
        cv.rect(r.min.x, r.min.y, r.max.x, r.max.y, COLORS["obstacle"])
    for a, c in tree_edges:
        cv.line(a, c, COLORS["tree"], 0.5)
    cv.polyline(original_path, COLORS["original"], 2.0)
    cv.polyline(executed_path, COLORS["executed"], 2.0)
    rad = world.params.obstacle_radius
    for track in obstacle_tracks:
        cv.polyline(track, COLORS["track"], 1.0, ' stroke-dasharray="2 2"')
        if track:
            cv.circle(track[-1], rad, COLORS["disk"], extra=' fill-opacity="0.45"')
    for p in replan_points:
        cv.circle(p, 0.8, "none", COLORS["replan"], ' stroke-width="1.50"')
    cv.circle(world.goal, world.goal_radius, "none", COLORS["goal"], ' stroke-width="1.50"')
    cv.circle(world.start, 1.0, COLORS["start"])
    cv.circle(world.goal, 0.6, COLORS["goal"])
    return cv.svg()


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def tree_edges_from_arrays(xy, parent, valid=None) -> list[tuple[Point, Point]]:
    out = []
    for i in range(len(parent)):
        p = int(parent[i])
        if p < 0 or (valid is not None and not valid[i]):
            continue
        out.append((Point(float(xy[p][0]), float(xy[p][1])), Point(float(xy[i][0]), float(xy[i][1]))))
    return out


def tree_edges(tree) -> list[tuple[Point, Point]]:
    n = tree.n
    xy = list(zip(tree.px[:n].tolist(), tree.py[:n].tolist()))
    return tree_edges_from_arrays(xy, tree.parent[:n], tree.valid[:n])


def render_trace(world: World, trace_text: str, edges: Sequence[tuple[Point, Point]] = ()) -> str:
    """SVG for a trace file, optionally over tree edges. An empty trace gives the bare map."""
    from .simulator import parse_trace
    if not trace_text.strip():
        return render_svg(world, tree_edges=edges)
    data = parse_trace(trace_text)
    executed = [Point(x, y) for t, x, y, kind, _ in data["events"] if kind in ("start", "move")]
    replans = [Point(x, y) for t, x, y, kind, _ in data["events"] if kind == "replan"]
    tracks = [[Point(x, y) for _, x, y, _, _ in tr] for tr in data["obstacles"]]
    orig = []
    for tok in data["summary"].get("original_path_xy", "").split():
        x, y = tok.split(";")
        orig.append(Point(float(x), float(y)))
    return render_svg(world, tree_edges=edges, original_path=orig, executed_path=executed,
                      obstacle_tracks=tracks, replan_points=replans)
