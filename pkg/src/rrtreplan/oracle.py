"""Ground-truth shortest paths for rectangle worlds.

Two independent routes:

* ``visibility_shortest_path`` - exact optimum: Dijkstra over start, goal and
  the corners of the obstacles grown by the robot radius (square corners,
  matching the planner's collision model).
* ``grid_shortest_path`` - dense lattice search with long-range moves, used
  to cross-check the first one.

Both treat obstacle boundaries as traversable (open rectangles), so their
costs are infima of what the closed-obstacle planner can achieve.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point, seg_rect_open_k
from .world import World


class DisconnectedError(RuntimeError):
    pass


@dataclass
class VisibilityGraph:
    vertices: list[Point]
    edges: list[tuple[int, int, float]]

    def adjacency(self):
        adj = [[] for _ in self.vertices]
        for i, j, w in self.edges:
            adj[i].append((j, w))
            adj[j].append((i, w))
        return adj


@dataclass
class OracleResult:
    cost: float
    path: list[Point]


def _inflated(world: World, clearance: float):
    r = world.rect_array.copy()
    r[:, :2] -= clearance
    r[:, 2:] += clearance
    b = world.bounds_array.copy()
    b[:2] += clearance
    b[2:] -= clearance
    return r, b


def _in_box(p, b):
    return b[0] <= p.x <= b[2] and b[1] <= p.y <= b[3]


def _visible(a: Point, c: Point, rects, box) -> bool:
    if not (_in_box(a, box) and _in_box(c, box)):
        return False
    for r in rects:
        if seg_rect_open_k(a.x, a.y, c.x, c.y, r[0], r[1], r[2], r[3]):
            return False
    return True


def visibility_graph(world: World, clearance: float | None = None) -> VisibilityGraph:
    clr = world.params.robot_radius if clearance is None else clearance
    rects, box = _inflated(world, clr)
    verts = [world.start, world.goal]
    for r in rects:
        for x, y in ((r[0], r[1]), (r[2], r[1]), (r[2], r[3]), (r[0], r[3])):
            p = Point(float(x), float(y))
            if _in_box(p, box) and not any(o[0] < p.x < o[2] and o[1] < p.y < o[3] for o in rects):
                verts.append(p)
    edges = []
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            if _visible(verts[i], verts[j], rects, box):
                dx = verts[j].x - verts[i].x
                dy = verts[j].y - verts[i].y
                edges.append((i, j, math.sqrt(dx * dx + dy * dy)))
    return VisibilityGraph(verts, edges)


def visibility_shortest_path(world: World, clearance: float | None = None) -> OracleResult:
    g = visibility_graph(world, clearance)
    adj = g.adjacency()
    dist = [math.inf] * len(g.vertices)
    prev = [-1] * len(g.vertices)
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == 1:
            break
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if math.isinf(dist[1]):
        raise DisconnectedError("start and goal are not connected")
    path = [1]
    while path[-1] != 0:
        path.append(prev[path[-1]])
    return OracleResult(dist[1], [g.vertices[i] for i in reversed(path)])


# --------------------------------------------------------------------------
# dense lattice cross-check

def _directions(reach: int):
    out = []
    for dx in range(0, reach + 1):
        for dy in range(-reach, reach + 1):
            if (dx == 0 and dy <= 0) or math.gcd(dx, abs(dy)) != 1:
                continue
            out.append((dx, dy))
    return out


def _open_hits(ax, ay, dx, dy, r):
    # vectorised seg_rect_open_k over many segment origins, one direction
    lo = np.full(ax.shape, -np.inf)
    hi = np.full(ax.shape, np.inf)
    ok = np.ones(ax.shape, dtype=bool)
    if dx == 0.0:
        ok &= (r[0] < ax) & (ax < r[2])
    else:
        ta = (r[0] - ax) / dx
        tb = (r[2] - ax) / dx
        lo = np.maximum(lo, np.minimum(ta, tb))
        hi = np.minimum(hi, np.maximum(ta, tb))
    if dy == 0.0:
        ok &= (r[1] < ay) & (ay < r[3])
    else:
        ta = (r[1] - ay) / dy
        tb = (r[3] - ay) / dy
        lo = np.maximum(lo, np.minimum(ta, tb))
        hi = np.minimum(hi, np.maximum(ta, tb))
    return ok & (lo < hi) & (lo < 1.0) & (hi > 0.0)


def grid_shortest_path(world: World, spacing: float = 0.25, reach: int = 6,
                       clearance: float | None = None) -> float:
    """Shortest start-goal cost on a lattice with moves up to ``reach`` cells.

    Start and goal must sit on lattice points. Every move is checked as an
    exact segment, so the result is a feasible path length and therefore an
    upper bound on the true optimum; with reach 6 the angular discretisation
    error is below 0.35 %.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    clr = world.params.robot_radius if clearance is None else clearance
    rects, box = _inflated(world, clr)
    x0, y0, x1, y1 = world.bounds.as_tuple()
    nx = int(round((x1 - x0) / spacing)) + 1
    ny = int(round((y1 - y0) / spacing)) + 1

    def lattice(p):
        i = (p.x - x0) / spacing
        j = (p.y - y0) / spacing
        if abs(i - round(i)) > 1e-9 or abs(j - round(j)) > 1e-9:
            raise ValueError(f"{p} is not on the lattice")
        return int(round(i)) * ny + int(round(j))

    s_idx, g_idx = lattice(world.start), lattice(world.goal)
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    gx = (x0 + ii * spacing).ravel()
    gy = (y0 + jj * spacing).ravel()
    free = (gx >= box[0]) & (gx <= box[2]) & (gy >= box[1]) & (gy <= box[3])
    for r in rects:
        free &= ~((r[0] < gx) & (gx < r[2]) & (r[1] < gy) & (gy < r[3]))
    fi = ii.ravel()
    fj = jj.ravel()
    rows, cols, wts = [], [], []
    for dx, dy in _directions(reach):
        ti = fi + dx
        tj = fj + dy
        ok = free & (ti < nx) & (tj >= 0) & (tj < ny)
        src = np.nonzero(ok)[0]
        dst = ti[src] * ny + tj[src]
        keep = free[dst]
        src = src[keep]
        dst = dst[keep]
        ax = gx[src]
        ay = gy[src]
        ddx = dx * spacing
        ddy = dy * spacing
        blocked = np.zeros(src.shape, dtype=bool)
        for r in rects:
            blocked |= _open_hits(ax, ay, ddx, ddy, r)
        src = src[~blocked]
        dst = dst[~blocked]
        rows.append(src)
        cols.append(dst)
        wts.append(np.full(src.shape, math.sqrt(ddx * ddx + ddy * ddy)))
    n = nx * ny
    graph = coo_matrix((np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(n, n)).tocsr()
    dist = dijkstra(graph, directed=False, indices=s_idx)
    d = float(dist[g_idx])
    if math.isinf(d):
        raise DisconnectedError("start and goal are not connected on the lattice")
    return d
