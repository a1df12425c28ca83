"""2-D primitives: points, vectors, segments, axis-aligned rectangles.

Angles are in degrees everywhere. The scalar functions here are the public
API; the ``*_k`` kernels below operate on raw floats / arrays and are what the
planner's inner loops call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, njit


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite coordinate: {v!r}")


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        _check_finite(self.x, self.y)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, slots=True)
class Vector:
    """Velocity in units per timestep."""

    vi: float
    vj: float

    def __post_init__(self):
        _check_finite(self.vi, self.vj)

    def __iter__(self):
        yield self.vi
        yield self.vj

    def norm(self) -> float:
        return math.hypot(self.vi, self.vj)


@dataclass(frozen=True, slots=True)
class Segment:
    a: Point
    b: Point

    def length(self) -> float:
        return distance(self.a, self.b)


@dataclass(frozen=True, slots=True)
class Rect:
    min: Point
    max: Point

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y:
            raise ValueError(f"invalid rectangle: min={self.min} max={self.max}")

    @classmethod
    def from_bounds(cls, xmin, ymin, xmax, ymax) -> "Rect":
        return cls(Point(xmin, ymin), Point(xmax, ymax))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.min.x, self.min.y, self.max.x, self.max.y)

    def contains(self, p: Point) -> bool:
        return self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y


def distance(a: Point, b: Point) -> float:
    dx = b.x - a.x
    dy = b.y - a.y
    return math.sqrt(dx * dx + dy * dy)


def normalize_angle(deg: float) -> float:
    """Wrap an angle into (-180, 180]."""
    _check_finite(deg)
    r = math.fmod(deg, 360.0)
    if r > 180.0:
        r -= 360.0
    elif r <= -180.0:
        r += 360.0
    return r


def segment_intersects_rect(s: Segment, r: Rect, inflate: float = 0.0) -> bool:
    """Closed test against ``r`` grown by ``inflate`` on every side (square corners)."""
    return seg_rect_closed_k(s.a.x, s.a.y, s.b.x, s.b.y,
                             r.min.x - inflate, r.min.y - inflate,
                             r.max.x + inflate, r.max.y + inflate)


def segment_intersects_disk(s: Segment, center: Point, radius: float) -> bool:
    if radius < 0:
        raise ValueError("radius must be non-negative")
    return seg_disk_k(s.a.x, s.a.y, s.b.x, s.b.y, center.x, center.y, radius)


def point_segment_distance(p: Point, s: Segment) -> float:
    return math.sqrt(point_seg_dist2_k(p.x, p.y, s.a.x, s.a.y, s.b.x, s.b.y))


def rects_to_array(rects) -> np.ndarray:
    """Stack rectangles into an ``(n, 4)`` float array of xmin, ymin, xmax, ymax."""
    out = np.empty((len(rects), 4), dtype=np.float64)
    for i, r in enumerate(rects):
        out[i] = r.as_tuple()
    return out


# --------------------------------------------------------------------------
# kernels

@njit
def seg_rect_closed_k(ax, ay, bx, by, xmin, ymin, xmax, ymax):
    # Liang-Barsky clip against the closed box
    t0 = 0.0
    t1 = 1.0
    dx = bx - ax
    dy = by - ay
    if dx == 0.0:
        if ax < xmin or ax > xmax:
            return False
    else:
        ta = (xmin - ax) / dx
        tb = (xmax - ax) / dx
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    if dy == 0.0:
        if ay < ymin or ay > ymax:
            return False
    else:
        ta = (ymin - ay) / dy
        tb = (ymax - ay) / dy
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    return t0 <= t1


@njit
def seg_rect_open_k(ax, ay, bx, by, xmin, ymin, xmax, ymax):
    """True iff the closed segment meets the open interior of the box."""
    lo = -np.inf
    hi = np.inf
    dx = bx - ax
    dy = by - ay
    if dx == 0.0:
        if not (xmin < ax < xmax):
            return False
    else:
        ta = (xmin - ax) / dx
        tb = (xmax - ax) / dx
        if ta > tb:
            ta, tb = tb, ta
        lo = max(lo, ta)
        hi = min(hi, tb)
    if dy == 0.0:
        if not (ymin < ay < ymax):
            return False
    else:
        ta = (ymin - ay) / dy
        tb = (ymax - ay) / dy
        if ta > tb:
            ta, tb = tb, ta
        lo = max(lo, ta)
        hi = min(hi, tb)
    # open interval (lo, hi) must overlap [0, 1]
    return lo < hi and lo < 1.0 and hi > 0.0


@njit
def point_seg_dist2_k(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    if ll == 0.0:
        ex = px - ax
        ey = py - ay
        return ex * ex + ey * ey
    t = ((px - ax) * dx + (py - ay) * dy) / ll
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return ex * ex + ey * ey


@njit
def seg_disk_k(ax, ay, bx, by, cx, cy, r):
    return point_seg_dist2_k(cx, cy, ax, ay, bx, by) <= r * r


@njit
def _seg_hits_rects_loop(ax, ay, bx, by, rects, inflate):
    for i in range(rects.shape[0]):
        if seg_rect_closed_k(ax, ay, bx, by,
                             rects[i, 0] - inflate, rects[i, 1] - inflate,
                             rects[i, 2] + inflate, rects[i, 3] + inflate):
            return True
    return False


def _seg_hits_rects_numpy(ax, ay, bx, by, rects, inflate):
    # vectorized twin of _seg_hits_rects_loop; same arithmetic per element
    if rects.shape[0] == 0:
        return False
    xmin = rects[:, 0] - inflate
    ymin = rects[:, 1] - inflate
    xmax = rects[:, 2] + inflate
    ymax = rects[:, 3] + inflate
    dx = bx - ax
    dy = by - ay
    t0 = np.zeros(rects.shape[0])
    t1 = np.ones(rects.shape[0])
    ok = np.ones(rects.shape[0], dtype=np.bool_)
    if dx == 0.0:
        ok &= (ax >= xmin) & (ax <= xmax)
    else:
        ta = (xmin - ax) / dx
        tb = (xmax - ax) / dx
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    if dy == 0.0:
        ok &= (ay >= ymin) & (ay <= ymax)
    else:
        ta = (ymin - ay) / dy
        tb = (ymax - ay) / dy
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    return bool(np.any(ok & (t0 <= t1)))


@njit
def seg_disk_escape_k(ax, ay, bx, by, cx, cy, r):
    """Disk test that lets a segment starting inside the disk leave it.

    A segment whose start lies in the closed disk counts as a hit unless it
    has nonzero length and points away from the centre (distance to the
    centre then grows monotonically along it).
    """
    ex = ax - cx
    ey = ay - cy
    if ex * ex + ey * ey <= r * r:
        dx = bx - ax
        dy = by - ay
        if dx == 0.0 and dy == 0.0:
            return True
        return dx * ex + dy * ey < 0.0
    return seg_disk_k(ax, ay, bx, by, cx, cy, r)


@njit
def _seg_hits_disks_loop(ax, ay, bx, by, disks):
    for i in range(disks.shape[0]):
        if seg_disk_escape_k(ax, ay, bx, by, disks[i, 0], disks[i, 1], disks[i, 2]):
            return True
    return False


def _seg_hits_disks_numpy(ax, ay, bx, by, disks):
    # vectorized twin of _seg_hits_disks_loop
    if disks.shape[0] == 0:
        return False
    cx = disks[:, 0]
    cy = disks[:, 1]
    r2 = disks[:, 2] * disks[:, 2]
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    sx = ax - cx
    sy = ay - cy
    inside = sx * sx + sy * sy <= r2
    if ll == 0.0:
        ex = cx - ax
        ey = cy - ay
        escape = np.zeros(disks.shape[0], dtype=np.bool_)
    else:
        t = np.clip(((cx - ax) * dx + (cy - ay) * dy) / ll, 0.0, 1.0)
        ex = cx - (ax + t * dx)
        ey = cy - (ay + t * dy)
        escape = dx * sx + dy * sy >= 0.0
    hit = np.where(inside, ~escape, ex * ex + ey * ey <= r2)
    return bool(np.any(hit))


if USE_NUMBA:
    seg_hits_rects_k = _seg_hits_rects_loop
    seg_hits_disks_k = _seg_hits_disks_loop
else:
    seg_hits_rects_k = _seg_hits_rects_numpy
    seg_hits_disks_k = _seg_hits_disks_numpy


@njit
def seg_static_free_k(ax, ay, bx, by, rects, inflate, bounds):
    """Inside ``bounds`` shrunk by ``inflate`` and clear of every inflated rect."""
    lo_x = bounds[0] + inflate
    lo_y = bounds[1] + inflate
    hi_x = bounds[2] - inflate
    hi_y = bounds[3] - inflate
    if ax < lo_x or ax > hi_x or bx < lo_x or bx > hi_x:
        return False
    if ay < lo_y or ay > hi_y or by < lo_y or by > hi_y:
        return False
    return not seg_hits_rects_k(ax, ay, bx, by, rects, inflate)


@njit
def seg_free_k(ax, ay, bx, by, rects, inflate, bounds, disks):
    """Static test plus moving-obstacle disks (rows cx, cy, r; escape rule applies)."""
    if not seg_static_free_k(ax, ay, bx, by, rects, inflate, bounds):
        return False
    if disks.shape[0] > 0 and seg_hits_disks_k(ax, ay, bx, by, disks):
        return False
    return True
