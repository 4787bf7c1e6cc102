"""Planar geometry primitives for tract polygons and network segments.

All coordinates are projected planar meters. A polygon is a sequence of
exterior-ring (x, y) vertices in either winding order; a repeated closing
vertex is accepted and dropped. No geodesic math anywhere.
"""

from __future__ import annotations

import math
from typing import Sequence

Point = tuple[float, float]

# On-boundary tolerance in meters. Grid inputs hit boundaries exactly; this
# only absorbs float noise from upstream arithmetic.
EPS = 1e-9


def normalize_ring(points: Sequence[Point]) -> list[Point]:
    """Return the ring as floats without a closing vertex; require >= 3 vertices."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise ValueError(f"polygon ring needs >= 3 distinct vertices, got {len(pts)}")
    return pts


def polygon_area(points: Sequence[Point]) -> float:
    """Unsigned shoelace area of a simple polygon."""
    pts = normalize_ring(points)
    acc = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        acc += x0 * y1 - x1 * y0
    return abs(acc) / 2.0


def polygon_centroid(points: Sequence[Point]) -> Point:
    """Area-weighted centroid; falls back to the vertex mean for degenerate area."""
    pts = normalize_ring(points)
    a2 = 0.0
    cx = 0.0
    cy = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        cross = x0 * y1 - x1 * y0
        a2 += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    if abs(a2) < 1e-30:
        n = len(pts)
        return (sum(p[0] for p in pts) / n, sum(p[1] for p in pts) / n)
    return (cx / (3.0 * a2), cy / (3.0 * a2))


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Euclidean distance from p to the closed segment ab."""
    px, py = p
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    dd = dx * dx + dy * dy
    if dd == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / dd
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_on_segment(p: Point, a: Point, b: Point, eps: float = EPS) -> bool:
    return point_segment_distance(p, a, b) <= eps


def point_in_polygon(p: Point, points: Sequence[Point], include_boundary: bool = True) -> bool:
    """Even-odd containment test; boundary points resolved by `include_boundary`."""
    pts = normalize_ring(points)
    for a, b in zip(pts, pts[1:] + pts[:1]):
        if point_on_segment(p, a, b):
            return include_boundary
    px, py = p
    inside = False
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        if (y0 > py) != (y1 > py):
            x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < x_cross:
                inside = not inside
        x0, y0 = x1, y1
    return inside


def segment_param_hits(p0: Point, p1: Point, a: Point, b: Point, eps: float = EPS) -> list[float]:
    """Parameters t in [0, 1] along p0->p1 where it meets segment ab.

    A transversal crossing yields one t; a collinear overlap yields the two
    overlap endpoints. No hit yields an empty list.
    """
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    ex = b[0] - a[0]
    ey = b[1] - a[1]
    rx = a[0] - p0[0]
    ry = a[1] - p0[1]
    denom = dx * ey - dy * ex
    d_len = math.hypot(dx, dy)
    e_len = math.hypot(ex, ey)
    if d_len == 0.0:
        return [0.0] if point_on_segment(p0, a, b, eps) else []
    if abs(denom) > eps * d_len * max(e_len, 1.0):
        t = (rx * ey - ry * ex) / denom
        s = (rx * dy - ry * dx) / denom
        slack_t = eps / d_len
        slack_s = eps / e_len if e_len > 0 else 0.0
        if -slack_t <= t <= 1.0 + slack_t and -slack_s <= s <= 1.0 + slack_s:
            return [min(1.0, max(0.0, t))]
        return []
    # Parallel: distance from a to the p-line decides collinearity.
    if abs(rx * dy - ry * dx) / d_len > eps:
        return []
    dd = dx * dx + dy * dy
    ta = (rx * dx + ry * dy) / dd
    tb = ((b[0] - p0[0]) * dx + (b[1] - p0[1]) * dy) / dd
    lo = max(0.0, min(ta, tb))
    hi = min(1.0, max(ta, tb))
    if lo > hi:
        return []
    return [lo, hi] if hi > lo else [lo]


def segments_intersect(p0: Point, p1: Point, a: Point, b: Point, eps: float = EPS) -> bool:
    """True when the closed segments share at least one point (touching counts)."""
    return bool(segment_param_hits(p0, p1, a, b, eps))


def segment_segment_distance(p0: Point, p1: Point, a: Point, b: Point) -> float:
    if segments_intersect(p0, p1, a, b):
        return 0.0
    return min(
        point_segment_distance(p0, a, b),
        point_segment_distance(p1, a, b),
        point_segment_distance(a, p0, p1),
        point_segment_distance(b, p0, p1),
    )


def segment_polygon_breakpoints(p0: Point, p1: Point, points: Sequence[Point]) -> list[float]:
    """All parameters where p0->p1 crosses or touches the polygon boundary."""
    pts = normalize_ring(points)
    hits: list[float] = []
    for a, b in zip(pts, pts[1:] + pts[:1]):
        hits.extend(segment_param_hits(p0, p1, a, b))
    return sorted(hits)


def clip_segment_to_polygon(p0: Point, p1: Point, points: Sequence[Point]) -> list[tuple[float, float]]:
    """Parameter intervals of p0->p1 lying inside the polygon (boundary inclusive).

    Robust for non-convex rings: split at every boundary hit, then classify
    each piece by its midpoint.
    """
    ts = sorted({0.0, 1.0, *segment_polygon_breakpoints(p0, p1, points)})
    dedup = [ts[0]]
    for t in ts[1:]:
        if t - dedup[-1] > 1e-12:
            dedup.append(t)
    intervals: list[tuple[float, float]] = []
    for lo, hi in zip(dedup, dedup[1:]):
        mid = ((p0[0] + (p1[0] - p0[0]) * (lo + hi) / 2.0),
               (p0[1] + (p1[1] - p0[1]) * (lo + hi) / 2.0))
        if point_in_polygon(mid, points, include_boundary=True):
            if intervals and abs(intervals[-1][1] - lo) <= 1e-12:
                intervals[-1] = (intervals[-1][0], hi)
            else:
                intervals.append((lo, hi))
    return intervals


def segment_intersects_polygon(p0: Point, p1: Point, points: Sequence[Point]) -> bool:
    """True when the segment shares any point with the closed polygon region."""
    if point_in_polygon(p0, points) or point_in_polygon(p1, points):
        return True
    return bool(segment_polygon_breakpoints(p0, p1, points))


def polyline_intersects_polygon(line: Sequence[Point], points: Sequence[Point]) -> bool:
    if len(line) == 1:
        return point_in_polygon(line[0], points)
    return any(segment_intersects_polygon(a, b, points) for a, b in zip(line, line[1:]))


def polyline_polygon_distance(line: Sequence[Point], points: Sequence[Point]) -> float:
    """Minimum distance between a polyline and the closed polygon region."""
    if polyline_intersects_polygon(line, points):
        return 0.0
    pts = normalize_ring(points)
    edges = list(zip(pts, pts[1:] + pts[:1]))
    best = math.inf
    segs = [(line[0], line[0])] if len(line) == 1 else list(zip(line, line[1:]))
    for p0, p1 in segs:
        for a, b in edges:
            best = min(best, segment_segment_distance(p0, p1, a, b))
    return best


def bounding_box(points: Sequence[Point]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (min(xs), min(ys), max(xs), max(ys))


def boxes_overlap(b1: tuple[float, float, float, float],
                  b2: tuple[float, float, float, float],
                  pad: float = EPS) -> bool:
    return not (b1[2] + pad < b2[0] or b2[2] + pad < b1[0]
                or b1[3] + pad < b2[1] or b2[3] + pad < b1[1])
