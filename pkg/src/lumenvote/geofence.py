"""Office-presence geofence: a simple polygon over (lat, lon).

Votes only count from inside the office, enforced against
browser-asserted coordinates.  Containment is ray casting with points
on an edge counted as inside; coordinates are treated as planar, which
is fine at room-to-building scale.
"""

from __future__ import annotations

from dataclasses import dataclass

Point = tuple[float, float]


class GeoFenceError(ValueError):
    """Degenerate or self-intersecting fence polygon."""


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point, eps: float = 1e-12) -> bool:
    if abs(_orient(a, b, p)) > eps:
        return False
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def _segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Proper intersection of open segments ab and cd."""
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


@dataclass(frozen=True)
class GeoFence:
    """Closed polygon of (latitude, longitude) vertices."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        n = len(self.vertices)
        if n < 3:
            raise GeoFenceError(f"fence needs at least 3 vertices, got {n}")
        if len(set(self.vertices)) != n:
            raise GeoFenceError("fence vertices must be distinct")
        edges = [
            (self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)
        ]
        for i in range(n):
            for j in range(i + 1, n):
                # Adjacent edges share an endpoint; only proper crossings
                # between non-adjacent edges make the polygon invalid.
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(*edges[i], *edges[j]):
                    raise GeoFenceError("fence polygon is self-intersecting")

    @classmethod
    def box(
        cls, lat_min: float, lon_min: float, lat_max: float, lon_max: float
    ) -> "GeoFence":
        if lat_min >= lat_max or lon_min >= lon_max:
            raise GeoFenceError("box bounds must satisfy min < max")
        return cls(
            (
                (lat_min, lon_min),
                (lat_min, lon_max),
                (lat_max, lon_max),
                (lat_max, lon_min),
            )
        )

    def contains(self, lat: float, lon: float) -> bool:
        p = (lat, lon)
        n = len(self.vertices)
        inside = False
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            if _on_segment(a, b, p):
                return True
            if (a[1] > lon) != (b[1] > lon):
                x_cross = a[0] + (lon - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                if p[0] < x_cross:
                    inside = not inside
        return inside

    def centroid(self) -> Point:
        n = len(self.vertices)
        return (
            sum(v[0] for v in self.vertices) / n,
            sum(v[1] for v in self.vertices) / n,
        )
