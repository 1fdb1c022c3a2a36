"""2D primitives: points, axis-aligned rectangles, distances.

Rectangles use half-open membership (``min <= p < max``).  The world root is
the one exception; callers that need closed max edges pass ``close_x`` /
``close_y`` to :meth:`Rect.contains`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

# Edge identifiers, also the tie-break priority for closest_border_point.
LEFT, RIGHT, BOTTOM, TOP = "left", "right", "bottom", "top"
EDGES = (LEFT, RIGHT, BOTTOM, TOP)


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Vec2(self.x - other.x, self.y - other.y)

    def scale(self, k: float) -> "Vec2":
        return Vec2(self.x * k, self.y * k)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y)


def vec2(x: float, y: float) -> Vec2:
    """Build a Vec2, rejecting NaN and infinities."""
    x = float(x)
    y = float(y)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point ({x}, {y})")
    return Vec2(x, y)


@dataclass(frozen=True, slots=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        # chained comparisons also reject NaN and infinities
        if not (-math.inf < self.xmin < self.xmax < math.inf
                and -math.inf < self.ymin < self.ymax < math.inf):
            raise ValueError(f"degenerate or non-finite rect {self.as_tuple()}")

    @classmethod
    def from_points(cls, lo, hi) -> "Rect":
        return cls(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @property
    def min(self) -> Vec2:
        return Vec2(self.xmin, self.ymin)

    @property
    def max(self) -> Vec2:
        return Vec2(self.xmax, self.ymax)

    @property
    def center(self) -> Vec2:
        return Vec2((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, p, close_x: bool = False, close_y: bool = False) -> bool:
        x, y = p
        if x < self.xmin or y < self.ymin:
            return False
        in_x = x < self.xmax or (close_x and x == self.xmax)
        in_y = y < self.ymax or (close_y and y == self.ymax)
        return in_x and in_y

    def contains_closed(self, p) -> bool:
        x, y = p
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def quadrants(self) -> tuple["Rect", "Rect", "Rect", "Rect"]:
        """Child rectangles split at the midlines, in NW, NE, SW, SE order."""
        mx = (self.xmin + self.xmax) / 2.0
        my = (self.ymin + self.ymax) / 2.0
        return (
            Rect(self.xmin, my, mx, self.ymax),
            Rect(mx, my, self.xmax, self.ymax),
            Rect(self.xmin, self.ymin, mx, my),
            Rect(mx, self.ymin, self.xmax, my),
        )

    def corners(self) -> dict[tuple[str, str], Vec2]:
        return {
            (LEFT, BOTTOM): Vec2(self.xmin, self.ymin),
            (RIGHT, BOTTOM): Vec2(self.xmax, self.ymin),
            (LEFT, TOP): Vec2(self.xmin, self.ymax),
            (RIGHT, TOP): Vec2(self.xmax, self.ymax),
        }

    def edge_distances(self, p) -> dict[str, float]:
        x, y = p
        return {
            LEFT: x - self.xmin,
            RIGHT: self.xmax - x,
            BOTTOM: y - self.ymin,
            TOP: self.ymax - y,
        }

    def clip(self, other: "Rect") -> Optional["Rect"]:
        """Intersection with ``other``; None when it has no area."""
        x0 = max(self.xmin, other.xmin)
        y0 = max(self.ymin, other.ymin)
        x1 = min(self.xmax, other.xmax)
        y1 = min(self.ymax, other.ymax)
        if x0 < x1 and y0 < y1:
            return Rect(x0, y0, x1, y1)
        return None

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)


def distance(a, b) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


def dist_to_rect_border(p, r: Rect) -> float:
    """Shortest perpendicular distance from ``p`` to any of the four edges.

    Points on the max edges are accepted so that robots sitting on the
    closed world boundary can still be measured.
    """
    if not r.contains_closed(p):
        raise ValueError(f"point {tuple(p)} lies outside {r.as_tuple()}")
    x, y = p
    return min(x - r.xmin, r.xmax - x, y - r.ymin, r.ymax - y)


def segment_rect_exit_point(p0, p1, r: Rect) -> Optional[Vec2]:
    """First point where the segment p0->p1 reaches the border of ``r``.

    Returns None if the segment stays strictly inside.  The limiting
    coordinate is snapped onto the border exactly.
    """
    x0, y0 = p0
    dx = p1[0] - x0
    dy = p1[1] - y0
    tx = ty = math.inf
    bx = by = None
    if dx > 0:
        bx = r.xmax
        tx = (bx - x0) / dx
    elif dx < 0:
        bx = r.xmin
        tx = (bx - x0) / dx
    if dy > 0:
        by = r.ymax
        ty = (by - y0) / dy
    elif dy < 0:
        by = r.ymin
        ty = (by - y0) / dy
    t = min(tx, ty)
    if t > 1.0:
        return None
    t = max(t, 0.0)
    x = bx if tx == t else x0 + t * dx
    y = by if ty == t else y0 + t * dy
    return Vec2(x, y)


def polyline_exit_point(points, r: Rect) -> Optional[Vec2]:
    """Exit point of a polyline, checking each segment in order."""
    for a, b in zip(points, points[1:]):
        hit = segment_rect_exit_point(a, b, r)
        if hit is not None:
            return hit
    return None


def closest_edge(p, r: Rect) -> str:
    """Nearest edge; ties go to left, right, bottom, top in that order."""
    x, y = p
    best_edge = LEFT
    best = x - r.xmin
    for edge, d in ((RIGHT, r.xmax - x), (BOTTOM, y - r.ymin), (TOP, r.ymax - y)):
        if d < best:
            best, best_edge = d, edge
    return best_edge


def closest_border_point(p, r: Rect) -> Vec2:
    return project_to_edge(p, r, closest_edge(p, r))


def project_to_edge(p, r: Rect, edge: str) -> Vec2:
    x, y = p
    if edge == LEFT:
        return Vec2(r.xmin, y)
    if edge == RIGHT:
        return Vec2(r.xmax, y)
    if edge == BOTTOM:
        return Vec2(x, r.ymin)
    if edge == TOP:
        return Vec2(x, r.ymax)
    raise ValueError(f"unknown edge {edge!r}")


def edges_at(p, r: Rect, tol: float = 1e-9) -> list[str]:
    """Edges of ``r`` that the border point ``p`` lies on."""
    x, y = p
    found = []
    if abs(x - r.xmin) <= tol:
        found.append(LEFT)
    if abs(x - r.xmax) <= tol:
        found.append(RIGHT)
    if abs(y - r.ymin) <= tol:
        found.append(BOTTOM)
    if abs(y - r.ymax) <= tol:
        found.append(TOP)
    return found


def rects_intersect(a: Rect, b: Rect) -> bool:
    return (
        a.xmin < b.xmax
        and b.xmin < a.xmax
        and a.ymin < b.ymax
        and b.ymin < a.ymax
    )
