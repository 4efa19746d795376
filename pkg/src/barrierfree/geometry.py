"""Crosswalk zones and point containment.

Coordinates are image pixels for camera zones and metres for the simulated
ground plane; nothing here depends on which.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple


class Point(NamedTuple):
    x: float
    y: float


_TOL = 1e-9


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p, a, b, tol=_TOL):
    scale = max(1.0, abs(b[0] - a[0]), abs(b[1] - a[1]))
    if abs(_cross(a, b, p)) > tol * scale * scale:
        return False
    return (
        min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
        and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol
    )


def _segments_intersect(p1, p2, q1, q2):
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    return (
        _on_segment(p1, q1, q2) or _on_segment(p2, q1, q2)
        or _on_segment(q1, p1, p2) or _on_segment(q2, p1, p2)
    )


def signed_area(vertices):
    n = len(vertices)
    return 0.5 * sum(
        vertices[i][0] * vertices[(i + 1) % n][1] - vertices[(i + 1) % n][0] * vertices[i][1]
        for i in range(n)
    )


@dataclass(frozen=True)
class PolygonZone:
    """Simple polygon with non-zero area. Build through :func:`validate_polygon`."""

    vertices: tuple
    zone_id: str = ""

    @property
    def area(self):
        return abs(signed_area(self.vertices))


def validate_polygon(vertices, zone_id=""):
    """Check vertex count, area and simplicity; return a :class:`PolygonZone`.

    Raises ValueError for fewer than three vertices, non-finite coordinates,
    zero area, or any pair of non-adjacent edges that touch.
    """
    pts = tuple(Point(float(x), float(y)) for x, y in vertices)
    if len(pts) < 3:
        raise ValueError(f"polygon needs at least 3 vertices, got {len(pts)}")
    if not all(math.isfinite(c) for p in pts for c in p):
        raise ValueError("polygon vertices must be finite")
    if abs(signed_area(pts)) <= _TOL:
        raise ValueError("polygon has zero area")
    n = len(pts)
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        if edges[i][0] == edges[i][1]:
            raise ValueError(f"repeated vertex at index {i}")
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                # adjacent edges share one endpoint; they must not fold back onto each other
                a, b = edges[i]
                c, d = edges[j]
                shared, far_i, far_j = (b, a, d) if j == i + 1 else (a, b, c)
                if abs(_cross(shared, far_i, far_j)) <= _TOL and (
                    _on_segment(far_j, shared, far_i) or _on_segment(far_i, shared, far_j)
                ):
                    raise ValueError(f"edges {i} and {j} overlap")
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                raise ValueError(f"polygon self-intersects (edges {i} and {j})")
    return PolygonZone(pts, zone_id)


def contains(zone, p):
    """Ray-casting parity test; points on the boundary count as inside."""
    px, py = p
    verts = zone.vertices
    n = len(verts)
    inside = False
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        if _on_segment((px, py), a, b):
            return True
        if (a[1] > py) != (b[1] > py):
            x_cross = a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if px < x_cross:
                inside = not inside
    return inside
