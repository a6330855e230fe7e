"""2D primitives on the cylinder T x R: points, segments, crossing counts."""

import math
from dataclasses import dataclass

PARALLEL_EPS = 1e-12
POINT_TOL = 1e-9
UNIT_TOL = 1e-12


class OverlapDetected(Exception):
    """Two segments (or translates) share a subsegment of positive length."""


@dataclass(frozen=True)
class Point2:
    """Point with x on the unit torus (canonical rep in [0,1)) and free y."""
    x: float
    y: float


@dataclass(frozen=True)
class UnitVec:
    vx: float
    vy: float

    def __post_init__(self):
        if abs(self.vx * self.vx + self.vy * self.vy - 1.0) > UNIT_TOL:
            raise ValueError("direction is not unit length")


@dataclass(frozen=True)
class Segment:
    """Straight segment in lifted coordinates (x not wrapped)."""
    a: Point2
    b: Point2

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError("segment must have positive length")

    @property
    def length(self):
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


@dataclass(frozen=True)
class IntersectionResult:
    kind: str  # none | point | overlap
    point: Point2 = None


def wrap_x(p):
    """Canonical torus representative: returns (wrapped point, translations applied)."""
    n = math.floor(p.x)
    frac = p.x - n
    if frac >= 1.0:
        # x just below an integer: the offset rounds up to 1.0, so the
        # point is indistinguishable from the boundary of the next cell
        n += 1
        frac = 0.0
    return Point2(frac, p.y), -n


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _intersect_core(ax, ay, bx, by, cx, cy, dx, dy):
    """Float-level intersection: (kind, px, py), kind 0 none / 1 point / 2 overlap."""
    rx, ry = bx - ax, by - ay
    sx, sy = dx - cx, dy - cy
    denom = rx * sy - ry * sx
    scale = math.hypot(rx, ry) * math.hypot(sx, sy)
    if abs(denom) <= PARALLEL_EPS * scale:
        # parallel; intersection possible only if collinear
        off = _cross(ax, ay, bx, by, cx, cy)
        if abs(off) > PARALLEL_EPS * scale:
            return 0, 0.0, 0.0
        # collinear: project the second segment's endpoints on the first
        rr = rx * rx + ry * ry
        t0 = ((cx - ax) * rx + (cy - ay) * ry) / rr
        t1 = ((dx - ax) * rx + (dy - ay) * ry) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        span_tol = POINT_TOL / math.sqrt(rr)
        if hi < lo - span_tol:
            return 0, 0.0, 0.0
        if hi - lo <= span_tol:
            t = 0.5 * (lo + hi)
            return 1, ax + t * rx, ay + t * ry
        return 2, 0.0, 0.0
    qpx, qpy = cx - ax, cy - ay
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return 1, ax + t * rx, ay + t * ry
    return 0, 0.0, 0.0


def segment_intersect(a, b):
    """Intersection of two closed segments: none, a single point, or overlap."""
    if a.length <= 0.0 or b.length <= 0.0:
        raise ValueError("zero-length segment")
    kind, px, py = _intersect_core(a.a.x, a.a.y, a.b.x, a.b.y,
                                   b.a.x, b.a.y, b.b.x, b.b.y)
    if kind == 2:
        return IntersectionResult("overlap")
    if kind == 1:
        return IntersectionResult("point", Point2(px, py))
    return IntersectionResult("none")


def _torus_dist(x0, x1):
    d = abs(x0 - x1) % 1.0
    return min(d, 1.0 - d)


def modz_intersection_count(a, b, cell_span, wrap_y=None):
    """Crossings of a with the vertical translates b + (0,k), |k| <= cell_span,
    together with all horizontal wraps.

    Counted as distinct points of the projected traces: on the cylinder when
    cell_span == 0 and wrap_y is None, on the quotient torus otherwise.
    Raises OverlapDetected on a collinear-overlapping translate pair.
    """
    if cell_span < 0:
        raise ValueError("cell_span must be >= 0")
    identify_y = wrap_y if wrap_y is not None else cell_span > 0
    ax_lo, ax_hi = min(a.a.x, a.b.x), max(a.a.x, a.b.x)
    bx_lo, bx_hi = min(b.a.x, b.b.x), max(b.a.x, b.b.x)
    ay_lo, ay_hi = min(a.a.y, a.b.y), max(a.a.y, a.b.y)
    by_lo, by_hi = min(b.a.y, b.b.y), max(b.a.y, b.b.y)
    m_lo = math.floor(ax_lo - bx_hi)
    m_hi = math.ceil(ax_hi - bx_lo)
    k_lo = max(-cell_span, math.floor(ay_lo - by_hi))
    k_hi = min(cell_span, math.ceil(ay_hi - by_lo))
    points = []
    for m in range(m_lo, m_hi + 1):
        for k in range(k_lo, k_hi + 1):
            shifted = Segment(Point2(b.a.x + m, b.a.y + k),
                              Point2(b.b.x + m, b.b.y + k))
            res = segment_intersect(a, shifted)
            if res.kind == "overlap":
                raise OverlapDetected(f"overlapping translate pair m={m} k={k}")
            if res.kind == "point":
                points.append(res.point)
    count = 0
    kept = []
    for p in points:
        dup = False
        for q in kept:
            dy = _torus_dist(p.y, q.y) if identify_y else abs(p.y - q.y)
            if _torus_dist(p.x, q.x) <= POINT_TOL and dy <= POINT_TOL:
                dup = True
                break
        if not dup:
            kept.append(p)
            count += 1
    return count
