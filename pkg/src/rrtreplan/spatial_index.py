"""Exact nearest / k-nearest queries over 2-D points with incremental insertion.

An unbalanced k-d tree stored in flat arrays: each inserted point becomes a
node splitting on x or y alternately with depth. Queries take an ``allowed``
mask instead of supporting deletion, so invalidated planner nodes can be
skipped without rebuilding anything. Ordering is by squared distance, ties
broken by the smaller id.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from ._accel import njit
from .geometry import Point


class IndexEntry(NamedTuple):
    node_id: int
    position: Point


@njit
def kd_insert_k(px, py, left, right, split, slot):
    left[slot] = -1
    right[slot] = -1
    if slot == 0:
        split[0] = 0
        return
    node = 0
    while True:
        if split[node] == 0:
            go_right = px[slot] >= px[node]
        else:
            go_right = py[slot] >= py[node]
        child = right[node] if go_right else left[node]
        if child < 0:
            if go_right:
                right[node] = slot
            else:
                left[node] = slot
            split[slot] = 1 - split[node]
            return
        node = child


@njit
def kd_knn_k(px, py, left, right, split, ids, n, qx, qy, k, allowed, out_slot, out_d2):
    """Fill ``out_slot[:m]`` / ``out_d2[:m]`` with the k best allowed slots; return m."""
    if n == 0 or k <= 0:
        return 0
    cnt = 0
    stack_node = np.empty(n, np.int64)
    stack_bound = np.empty(n, np.float64)
    stack_node[0] = 0
    stack_bound[0] = 0.0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        bound = stack_bound[sp]
        if cnt == k and bound > out_d2[k - 1]:
            continue
        if allowed[node]:
            dx = px[node] - qx
            dy = py[node] - qy
            d2 = dx * dx + dy * dy
            nid = ids[node]
            better = cnt < k
            if not better:
                w = out_d2[k - 1]
                better = d2 < w or (d2 == w and nid < ids[out_slot[k - 1]])
            if better:
                pos = cnt if cnt < k else k - 1
                while pos > 0:
                    pd = out_d2[pos - 1]
                    if pd > d2 or (pd == d2 and ids[out_slot[pos - 1]] > nid):
                        out_d2[pos] = pd
                        out_slot[pos] = out_slot[pos - 1]
                        pos -= 1
                    else:
                        break
                out_d2[pos] = d2
                out_slot[pos] = node
                if cnt < k:
                    cnt += 1
        if split[node] == 0:
            diff = qx - px[node]
        else:
            diff = qy - py[node]
        if diff < 0.0:
            near = left[node]
            far = right[node]
        else:
            near = right[node]
            far = left[node]
        if far >= 0:
            b = diff * diff
            stack_node[sp] = far
            stack_bound[sp] = b if b > bound else bound
            sp += 1
        if near >= 0:
            stack_node[sp] = near
            stack_bound[sp] = bound
            sp += 1
    return cnt


class KDIndex:
    """Incrementally built k-d tree.

    The arrays are public so the planner kernels can share them; slot ``i``
    holds the ``i``-th inserted entry and ``ids[i]`` its node id.
    """

    def __init__(self, capacity: int = 64):
        capacity = max(1, int(capacity))
        self.px = np.empty(capacity)
        self.py = np.empty(capacity)
        self.left = np.empty(capacity, np.int64)
        self.right = np.empty(capacity, np.int64)
        self.split = np.empty(capacity, np.int8)
        self.ids = np.empty(capacity, np.int64)
        self.n = 0
        self._id_set: set[int] = set()

    def __len__(self):
        return self.n

    def reserve(self, total: int):
        cap = self.px.shape[0]
        if total <= cap:
            return
        new_cap = max(total, 2 * cap)
        for name in ("px", "py", "left", "right", "split", "ids"):
            old = getattr(self, name)
            arr = np.empty(new_cap, old.dtype)
            arr[: self.n] = old[: self.n]
            setattr(self, name, arr)

    def insert(self, node_id: int, position: Point):
        node_id = int(node_id)
        if node_id < 0:
            raise ValueError("node ids must be non-negative")
        if node_id in self._id_set:
            raise KeyError(f"duplicate node id {node_id}")
        self.reserve(self.n + 1)
        s = self.n
        self.px[s] = position.x
        self.py[s] = position.y
        self.ids[s] = node_id
        kd_insert_k(self.px, self.py, self.left, self.right, self.split, s)
        self._id_set.add(node_id)
        self.n += 1

    def _note_bulk_insert(self, first_slot: int, count: int):
        # planner kernels insert directly into the arrays
        self._id_set.update(int(i) for i in self.ids[first_slot:first_slot + count])

    def _mask(self, filter) -> np.ndarray:
        n = self.n
        if filter is None:
            return np.ones(n, dtype=np.bool_)
        if callable(filter):
            return np.fromiter((bool(filter(int(i))) for i in self.ids[:n]), dtype=np.bool_, count=n)
        arr = np.asarray(filter, dtype=np.bool_)
        return arr[self.ids[:n]]

    def k_nearest(self, q: Point, k: int,
                  filter: Callable[[int], bool] | np.ndarray | None = None) -> list[IndexEntry]:
        """Up to ``k`` entries passing ``filter`` ordered by (distance, id).

        ``filter`` is a predicate over node ids or a boolean array indexed by id.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        k = min(int(k), max(self.n, 1))
        out_slot = np.empty(k, np.int64)
        out_d2 = np.empty(k)
        m = kd_knn_k(self.px, self.py, self.left, self.right, self.split, self.ids, self.n,
                     float(q.x), float(q.y), k, self._mask(filter), out_slot, out_d2)
        return [IndexEntry(int(self.ids[s]), Point(float(self.px[s]), float(self.py[s])))
                for s in out_slot[:m]]

    def nearest(self, q: Point, filter=None) -> IndexEntry:
        found = self.k_nearest(q, 1, filter)
        if not found:
            raise LookupError("no entry satisfies the filter")
        return found[0]
