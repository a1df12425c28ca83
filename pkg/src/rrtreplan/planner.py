"""Search tree plus RRT / RRT* growth.

Node storage is a set of flat arrays (positions live in the tree's k-d index)
so that the growth loop can run as a single compiled kernel. Children are kept
as first-child / next-sibling links, which makes cost propagation after a
rewire proportional to the size of the moved subtree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit
from .geometry import Point, Rect, distance, seg_free_k
from .spatial_index import KDIndex, kd_insert_k, kd_knn_k
from .world import World

NO_STEP_LIMIT = -1.0

# grow_k status codes
GROW_DONE = 0
GROW_NEED_DRAWS = 1
GROW_EXHAUSTED = 2
GROW_REACHED = 3
GROW_NO_NODES = 4

DRAWS_PER_SAMPLE = 3
_NO_DISKS = np.zeros((0, 3))


class RandomStream:
    """Buffered uniform draws from a seeded numpy Generator.

    Kernels read ``buf`` starting at ``pos`` and report how far they got; the
    sequence of values consumed never depends on how calls are chunked.
    """

    def __init__(self, seed_or_rng=0, block: int = 3 * 4096):
        if isinstance(seed_or_rng, np.random.Generator):
            self.rng = seed_or_rng
        else:
            self.rng = np.random.default_rng(seed_or_rng)
        self.block = block
        self.buf = np.empty(0)
        self.pos = 0

    def ensure(self, n: int):
        if self.buf.shape[0] - self.pos >= n:
            return
        fresh = self.rng.random(max(self.block, n))
        self.buf = np.concatenate([self.buf[self.pos:], fresh])
        self.pos = 0

    def take(self, n: int) -> np.ndarray:
        self.ensure(n)
        out = self.buf[self.pos:self.pos + n].copy()
        self.pos += n
        return out


@dataclass
class GrowConfig:
    node_budget: int
    sampling_region: Rect
    rng: RandomStream
    goal_bias: float = 0.05
    neighbor_fraction: float = 0.01
    step_limit: float | None = None
    clearance: float = 0.5

    @classmethod
    def from_world(cls, world: World, rng: RandomStream | int | None = None, **overrides):
        p = world.params
        if rng is None:
            rng = p.seed
        if not isinstance(rng, RandomStream):
            rng = RandomStream(rng)
        kw = dict(node_budget=p.node_budget, sampling_region=world.bounds, rng=rng,
                  goal_bias=p.goal_bias, neighbor_fraction=p.neighbor_fraction,
                  clearance=p.robot_radius)
        kw.update(overrides)
        return cls(**kw)


@dataclass
class GrowResult:
    added: int = 0
    attempts: int = 0
    rewires: int = 0
    status: int = GROW_DONE
    no_path: bool = False
    allowed: np.ndarray | None = field(default=None, repr=False)


# --------------------------------------------------------------------------
# kernels

@njit
def _attach(parent, fchild, nsib, node, p):
    parent[node] = p
    nsib[node] = fchild[p]
    fchild[p] = node


@njit
def _detach(parent, fchild, nsib, node):
    p = parent[node]
    if p < 0:
        return
    c = fchild[p]
    if c == node:
        fchild[p] = nsib[node]
    else:
        while nsib[c] != node:
            c = nsib[c]
        nsib[c] = nsib[node]
    parent[node] = -1
    nsib[node] = -1


@njit
def propagate_k(px, py, cost, fchild, nsib, node, stack):
    """Recompute costs of every descendant of ``node`` from its (new) cost."""
    stack[0] = node
    sp = 1
    while sp > 0:
        sp -= 1
        u = stack[sp]
        c = fchild[u]
        while c >= 0:
            dx = px[c] - px[u]
            dy = py[c] - py[u]
            cost[c] = cost[u] + math.sqrt(dx * dx + dy * dy)
            stack[sp] = c
            sp += 1
            c = nsib[c]


@njit
def reparent_k(px, py, parent, cost, fchild, nsib, node, new_parent, stack):
    _detach(parent, fchild, nsib, node)
    _attach(parent, fchild, nsib, node, new_parent)
    dx = px[node] - px[new_parent]
    dy = py[node] - py[new_parent]
    cost[node] = cost[new_parent] + math.sqrt(dx * dx + dy * dy)
    propagate_k(px, py, cost, fchild, nsib, node, stack)


@njit
def choose_parent_k(px, py, cost, qx, qy, nbrs, m, q_nearest, rects, inflate, bounds, disks):
    best = q_nearest
    dx = qx - px[best]
    dy = qy - py[best]
    cmin = cost[best] + math.sqrt(dx * dx + dy * dy)
    for i in range(m):
        nb = nbrs[i]
        if nb == q_nearest:
            continue
        dx = qx - px[nb]
        dy = qy - py[nb]
        c = cost[nb] + math.sqrt(dx * dx + dy * dy)
        if c < cmin or (c == cmin and nb < best):
            # collision check only for candidates that would win
            if seg_free_k(px[nb], py[nb], qx, qy, rects, inflate, bounds, disks):
                best = nb
                cmin = c
    return best, cmin


@njit
def rewire_k(px, py, parent, cost, fchild, nsib, nbrs, m, new, rects, inflate, bounds, disks, stack):
    count = 0
    for i in range(m):
        nb = nbrs[i]
        if nb == new or nb == parent[new]:
            continue
        dx = px[nb] - px[new]
        dy = py[nb] - py[new]
        c = cost[new] + math.sqrt(dx * dx + dy * dy)
        if c < cost[nb]:
            if seg_free_k(px[new], py[new], px[nb], py[nb], rects, inflate, bounds, disks):
                _detach(parent, fchild, nsib, nb)
                _attach(parent, fchild, nsib, nb, new)
                cost[nb] = c
                propagate_k(px, py, cost, fchild, nsib, nb, stack)
                count += 1
    return count


@njit
def insert_node_k(px, py, parent, cost, valid, fchild, nsib, left, right, split, ids,
                  slot, x, y, p, c):
    px[slot] = x
    py[slot] = y
    ids[slot] = slot
    cost[slot] = c
    valid[slot] = True
    fchild[slot] = -1
    nsib[slot] = -1
    parent[slot] = -1
    if p >= 0:
        _attach(parent, fchild, nsib, slot, p)
    kd_insert_k(px, py, left, right, split, slot)


@njit
def grow_k(px, py, parent, cost, valid, fchild, nsib, left, right, split, ids, allowed,
           n0, target_n, draws, dpos, region, goal_x, goal_y, goal_bias, nbr_frac,
           step_limit, star, rects, inflate, bounds, disks,
           attempts0, max_attempts, stop_x, stop_y, stop_r, nbr_buf, d2_buf, stack):
    n = n0
    attempts = attempts0
    rewires = 0
    status = 0
    rw = region[2] - region[0]
    rh = region[3] - region[1]
    while n < target_n:
        if attempts >= max_attempts:
            status = 2
            break
        if dpos + 3 > draws.shape[0]:
            status = 1
            break
        u0 = draws[dpos]
        u1 = draws[dpos + 1]
        u2 = draws[dpos + 2]
        dpos += 3
        attempts += 1
        if u0 < goal_bias:
            sx = goal_x
            sy = goal_y
        else:
            sx = region[0] + u1 * rw
            sy = region[1] + u2 * rh
        if not seg_free_k(sx, sy, sx, sy, rects, inflate, bounds, disks):
            continue
        k = 1
        if star:
            k = int(math.ceil(nbr_frac * n))
            if k < 1:
                k = 1
            if k > nbr_buf.shape[0]:
                k = nbr_buf.shape[0]
        m = kd_knn_k(px, py, left, right, split, ids, n, sx, sy, k, allowed, nbr_buf, d2_buf)
        if m == 0:
            status = 4
            break
        qn = nbr_buf[0]
        qx = sx
        qy = sy
        truncated = False
        if step_limit > 0.0:
            dx = sx - px[qn]
            dy = sy - py[qn]
            d = math.sqrt(dx * dx + dy * dy)
            if d > step_limit:
                qx = px[qn] + dx * (step_limit / d)
                qy = py[qn] + dy * (step_limit / d)
                truncated = True
        if qx == px[qn] and qy == py[qn]:
            continue
        if not seg_free_k(px[qn], py[qn], qx, qy, rects, inflate, bounds, disks):
            continue
        if star:
            if truncated:
                m = kd_knn_k(px, py, left, right, split, ids, n, qx, qy, k, allowed, nbr_buf, d2_buf)
            p, c = choose_parent_k(px, py, cost, qx, qy, nbr_buf, m, qn,
                                   rects, inflate, bounds, disks)
        else:
            p = qn
            dx = qx - px[qn]
            dy = qy - py[qn]
            c = cost[qn] + math.sqrt(dx * dx + dy * dy)
        insert_node_k(px, py, parent, cost, valid, fchild, nsib, left, right, split, ids,
                      n, qx, qy, p, c)
        allowed[n] = True
        new = n
        n += 1
        if star:
            rewires += rewire_k(px, py, parent, cost, fchild, nsib, nbr_buf, m, new,
                                rects, inflate, bounds, disks, stack)
        if stop_r >= 0.0:
            dx = qx - stop_x
            dy = qy - stop_y
            if dx * dx + dy * dy <= stop_r * stop_r:
                if seg_free_k(qx, qy, stop_x, stop_y, rects, inflate, bounds, disks):
                    status = 3
                    break
    return n, dpos, attempts, rewires, status


@njit
def best_goal_node_k(px, py, cost, valid, n, gx, gy, r):
    best = -1
    bc = np.inf
    r2 = r * r
    for i in range(n):
        if not valid[i]:
            continue
        dx = px[i] - gx
        dy = py[i] - gy
        if dx * dx + dy * dy <= r2 and cost[i] < bc:
            bc = cost[i]
            best = i
    return best


# --------------------------------------------------------------------------
# tree

class Tree:
    """RRT search tree (a forest once replanning adds extra roots)."""

    def __init__(self, root: Point, capacity: int = 1024):
        self.index = KDIndex(capacity)
        cap = self.index.px.shape[0]
        self.parent = np.empty(cap, np.int64)
        self.cost = np.empty(cap)
        self.valid = np.empty(cap, np.bool_)
        self.fchild = np.empty(cap, np.int64)
        self.nsib = np.empty(cap, np.int64)
        self.n = 0
        self.roots: list[int] = []
        self.add_root(root)

    # array views -----------------------------------------------------------
    @property
    def px(self):
        return self.index.px

    @property
    def py(self):
        return self.index.py

    @property
    def root_id(self) -> int:
        return self.roots[0]

    def __len__(self):
        return self.n

    def reserve(self, total: int):
        if total <= self.parent.shape[0]:
            return
        self.index.reserve(total)
        cap = self.index.px.shape[0]
        for name in ("parent", "cost", "valid", "fchild", "nsib"):
            old = getattr(self, name)
            arr = np.empty(cap, old.dtype)
            arr[: self.n] = old[: self.n]
            setattr(self, name, arr)

    # mutation ----------------------------------------------------------------
    def _insert(self, pos: Point, parent: int, cost: float) -> int:
        self.reserve(self.n + 1)
        i = self.n
        idx = self.index
        insert_node_k(idx.px, idx.py, self.parent, self.cost, self.valid, self.fchild, self.nsib,
                      idx.left, idx.right, idx.split, idx.ids, i, float(pos.x), float(pos.y),
                      int(parent), float(cost))
        idx.n += 1
        idx._id_set.add(i)
        self.n += 1
        return i

    def add_root(self, pos: Point) -> int:
        i = self._insert(pos, -1, 0.0)
        self.roots.append(i)
        return i

    def add_node(self, pos: Point, parent: int) -> int:
        if not (0 <= parent < self.n):
            raise IndexError(f"no node {parent}")
        return self._insert(pos, parent, self.cost[parent] + distance(self.position(parent), pos))

    def reparent(self, node: int, new_parent: int):
        """Move ``node`` (and its subtree) under ``new_parent``, updating costs."""
        a = self._ancestor_chain(new_parent)
        if node in a:
            raise ValueError("reparenting would create a cycle")
        reparent_k(self.px, self.py, self.parent, self.cost, self.fchild, self.nsib,
                   int(node), int(new_parent), np.empty(self.n, np.int64))

    # queries -------------------------------------------------------------
    def position(self, i: int) -> Point:
        return Point(float(self.px[i]), float(self.py[i]))

    def children(self, i: int) -> list[int]:
        out = []
        c = self.fchild[i]
        while c >= 0:
            out.append(int(c))
            c = self.nsib[c]
        return sorted(out)

    def _ancestor_chain(self, i: int) -> list[int]:
        chain = [int(i)]
        while self.parent[chain[-1]] >= 0:
            chain.append(int(self.parent[chain[-1]]))
            if len(chain) > self.n:
                raise RuntimeError("cycle in parent links")
        return chain

    def path_to(self, i: int) -> list[int]:
        """Node ids from the owning root down to ``i``."""
        return self._ancestor_chain(i)[::-1]

    def root_of(self, i: int) -> int:
        return self._ancestor_chain(i)[-1]

    def path_length(self, path) -> float:
        return sum(distance(self.position(a), self.position(b)) for a, b in zip(path, path[1:]))

    def nodes_within(self, center: Point, radius: float) -> np.ndarray:
        dx = self.px[: self.n] - center.x
        dy = self.py[: self.n] - center.y
        return np.nonzero(dx * dx + dy * dy <= radius * radius)[0]

    def dump(self) -> str:
        """Text dump, one ``id,x,y,parent,cost,valid`` line per node."""
        lines = []
        for i in range(self.n):
            p = int(self.parent[i])
            lines.append(f"{i},{float(self.px[i])!r},{float(self.py[i])!r},"
                         f"{p if p >= 0 else ''},{float(self.cost[i])!r},{int(self.valid[i])}")
        return "\n".join(lines) + "\n"

    def copy(self) -> "Tree":
        t = Tree.__new__(Tree)
        t.index = KDIndex(1)
        for name in ("px", "py", "left", "right", "split", "ids"):
            setattr(t.index, name, getattr(self.index, name).copy())
        t.index.n = self.index.n
        t.index._id_set = set(self.index._id_set)
        for name in ("parent", "cost", "valid", "fchild", "nsib"):
            setattr(t, name, getattr(self, name).copy())
        t.n = self.n
        t.roots = list(self.roots)
        return t

    def check_invariants(self, world: World | None = None, clearance: float | None = None,
                         rel_tol: float = 1e-9) -> list[str]:
        """Return a list of violated invariants (empty when healthy).

        Checks acyclicity, root costs, cost consistency and, when ``world`` is
        given, that every edge is clear of static obstacles.
        """
        errs = []
        n = self.n
        parent = self.parent[:n]
        roots = set(self.roots)
        for i in range(n):
            if parent[i] < 0 and i not in roots:
                errs.append(f"node {i} has no parent but is not a root")
        for r in roots:
            if parent[r] >= 0:
                errs.append(f"root {r} has a parent")
            if self.cost[r] != 0.0:
                errs.append(f"root {r} has cost {self.cost[r]}")
        # acyclicity: memoised walk to a root
        depth = np.full(n, -1, np.int64)
        for i in range(n):
            chain = []
            u = i
            while u >= 0 and depth[u] < 0:
                chain.append(u)
                if len(chain) > n:
                    errs.append(f"cycle through node {i}")
                    return errs
                u = parent[u]
            base = 0 if u < 0 else depth[u] + 1
            for v in reversed(chain):
                depth[v] = base
                base += 1
        for i in range(n):
            p = parent[i]
            if p < 0:
                continue
            expect = self.cost[p] + distance(self.position(p), self.position(i))
            if abs(self.cost[i] - expect) > rel_tol * max(1.0, abs(expect)):
                errs.append(f"node {i}: cost {self.cost[i]!r} != {expect!r}")
            if self.cost[i] < 0:
                errs.append(f"node {i}: negative cost")
        # child lists mirror parent links
        for i in range(n):
            for c in self.children(i):
                if parent[c] != i:
                    errs.append(f"child list of {i} holds {c} whose parent is {parent[c]}")
        if world is not None:
            clr = world.params.robot_radius if clearance is None else clearance
            for i in range(n):
                p = parent[i]
                if p >= 0 and not seg_free_k(self.px[p], self.py[p], self.px[i], self.py[i],
                                             world.rect_array, clr, world.bounds_array, _NO_DISKS):
                    errs.append(f"edge {p}->{i} collides with a static obstacle")
        return errs


def parse_dump(text: str):
    """Parse a tree dump back into arrays ``(xy, parent, cost, valid)``."""
    xy, parent, cost, valid = [], [], [], []
    for k, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6 or int(parts[0]) != len(xy):
            raise ValueError(f"malformed tree dump line {k + 1}: {line!r}")
        xy.append((float(parts[1]), float(parts[2])))
        parent.append(int(parts[3]) if parts[3] else -1)
        cost.append(float(parts[4]))
        valid.append(parts[5] == "1")
    return (np.array(xy).reshape(-1, 2), np.array(parent, np.int64),
            np.array(cost), np.array(valid, np.bool_))


# --------------------------------------------------------------------------
# operations

def random_sample(cfg: GrowConfig, goal: Point) -> Point:
    """Goal with probability ``goal_bias``, else uniform over the sampling region.

    Always consumes exactly three draws from ``cfg.rng``.
    """
    u0, u1, u2 = cfg.rng.take(DRAWS_PER_SAMPLE)
    if u0 < cfg.goal_bias:
        return goal
    r = cfg.sampling_region
    return Point(r.min.x + u1 * (r.max.x - r.min.x), r.min.y + u2 * (r.max.y - r.min.y))


def steer(frm: Point, to: Point, step_limit: float | None = None) -> Point:
    if step_limit is None:
        return to
    d = distance(frm, to)
    if d <= step_limit:
        return to
    return Point(frm.x + (to.x - frm.x) * (step_limit / d), frm.y + (to.y - frm.y) * (step_limit / d))


def neighborhood_size(fraction: float, node_count: int) -> int:
    return max(1, math.ceil(fraction * node_count))


def choose_parent(tree: Tree, q_rand: Point, neighbors, q_nearest: int, world: World,
                  clearance: float) -> tuple[int, float]:
    nbrs = np.asarray(list(neighbors), dtype=np.int64)
    p, c = choose_parent_k(tree.px, tree.py, tree.cost, float(q_rand.x), float(q_rand.y),
                           nbrs, nbrs.shape[0], int(q_nearest), world.rect_array, clearance,
                           world.bounds_array, _NO_DISKS)
    return int(p), float(c)


def rewire(tree: Tree, neighbors, new_id: int, world: World, clearance: float) -> int:
    nbrs = np.asarray(list(neighbors), dtype=np.int64)
    return int(rewire_k(tree.px, tree.py, tree.parent, tree.cost, tree.fchild, tree.nsib,
                        nbrs, nbrs.shape[0], int(new_id), world.rect_array, clearance,
                        world.bounds_array, _NO_DISKS, np.empty(tree.n, np.int64)))


def _grow(tree: Tree, world: World, cfg: GrowConfig, goal: Point, target_n: int, star: bool,
          *, disks=None, allowed=None, stop: tuple[float, float, float] | None = None,
          max_attempts: int | None = None) -> GrowResult:
    if tree.n < 1:
        raise ValueError("tree must contain at least one node")
    res = GrowResult()
    if target_n <= tree.n:
        return res
    disks = _NO_DISKS if disks is None else np.asarray(disks, dtype=np.float64).reshape(-1, 3)
    if max_attempts is None:
        max_attempts = 50 * (target_n - tree.n)
    tree.reserve(target_n)
    cap = tree.parent.shape[0]
    if allowed is None:
        allowed = tree.valid
    elif allowed.shape[0] < cap:
        grown = np.zeros(cap, np.bool_)
        grown[: allowed.shape[0]] = allowed
        allowed = grown
    kmax = neighborhood_size(cfg.neighbor_fraction, target_n) if star else 1
    nbr_buf = np.empty(kmax, np.int64)
    d2_buf = np.empty(kmax)
    stack = np.empty(cap, np.int64)
    region = np.array(cfg.sampling_region.as_tuple())
    step = NO_STEP_LIMIT if cfg.step_limit is None else float(cfg.step_limit)
    sx, sy, sr = stop if stop is not None else (0.0, 0.0, -1.0)
    first = tree.n
    idx = tree.index
    while True:
        cfg.rng.ensure(DRAWS_PER_SAMPLE * min(4096, 2 * (target_n - tree.n) + 64))
        n, dpos, attempts, rewires, status = grow_k(
            idx.px, idx.py, tree.parent, tree.cost, tree.valid, tree.fchild, tree.nsib,
            idx.left, idx.right, idx.split, idx.ids, allowed,
            tree.n, target_n, cfg.rng.buf, cfg.rng.pos, region,
            float(goal.x), float(goal.y), float(cfg.goal_bias), float(cfg.neighbor_fraction),
            step, star, world.rect_array, float(cfg.clearance), world.bounds_array, disks,
            res.attempts, max_attempts, float(sx), float(sy), float(sr), nbr_buf, d2_buf, stack)
        res.added += n - tree.n
        tree.n = n
        idx.n = n
        cfg.rng.pos = dpos
        res.attempts = attempts
        res.rewires += rewires
        res.status = status
        if status != GROW_NEED_DRAWS:
            break
    idx._note_bulk_insert(first, tree.n - first)
    res.allowed = allowed
    return res


def grow_rrt_star(tree: Tree, world: World, cfg: GrowConfig, goal: Point | None = None,
                  goal_radius: float | None = None) -> GrowResult:
    """Grow ``tree`` with RRT* until it holds ``cfg.node_budget`` nodes."""
    goal = world.goal if goal is None else goal
    res = _grow(tree, world, cfg, goal, cfg.node_budget, True)
    res.no_path = not best_path(tree, goal, world.goal_radius if goal_radius is None else goal_radius)
    return res


def grow_rrt(tree: Tree, world: World, cfg: GrowConfig, goal: Point | None = None,
             goal_radius: float | None = None) -> GrowResult:
    """Plain RRT: parent is always the nearest node, no rewiring."""
    goal = world.goal if goal is None else goal
    res = _grow(tree, world, cfg, goal, cfg.node_budget, False)
    res.no_path = not best_path(tree, goal, world.goal_radius if goal_radius is None else goal_radius)
    return res


def best_path(tree: Tree, goal: Point, goal_radius: float) -> list[int]:
    """Root-to-node chain of the cheapest valid node within ``goal_radius``."""
    i = best_goal_node_k(tree.px, tree.py, tree.cost, tree.valid, tree.n,
                         float(goal.x), float(goal.y), float(goal_radius))
    if i < 0:
        return []
    return tree.path_to(int(i))


def plan(world: World, seed: int | None = None, nodes: int | None = None,
         algorithm: str = "rrtstar", step_limit: float | None = None):
    """Grow a fresh tree rooted at ``world.start``; return ``(tree, path, result)``."""
    p = world.params
    cfg = GrowConfig.from_world(world, RandomStream(p.seed if seed is None else seed),
                                node_budget=p.node_budget if nodes is None else nodes,
                                step_limit=step_limit)
    tree = Tree(world.start, capacity=cfg.node_budget + 64)
    if algorithm == "rrtstar":
        res = grow_rrt_star(tree, world, cfg)
    elif algorithm == "rrt":
        res = grow_rrt(tree, world, cfg)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return tree, best_path(tree, world.goal, world.goal_radius), res
