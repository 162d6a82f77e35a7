"""
Planar primitives for triangle and cyclic-quadrilateral tiles.

Vertices are stored in the clockwise order ``A, B, C`` (or ``A, B, C, D``).
Side labels follow the usual convention:

* triangle: ``a = BC``, ``b = CA``, ``c = AB`` (side ``a`` is opposite ``A``);
* quadrilateral: ``a = AB``, ``b = BC``, ``c = CD``, ``d = DA``.

Side vectors point from the first to the second vertex of the label, so that
``a + b + c = 0`` for triangles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DegeneratePolygon, NonConvex, NotCyclic

EPS = 1e-9
TWO_PI = 2.0 * math.pi

# (start, end) vertex indices of each side, in label order
TRIANGLE_SIDES = ((1, 2), (2, 0), (0, 1))
QUAD_SIDES = ((0, 1), (1, 2), (2, 3), (3, 0))
SIDE_NAMES = {3: "abc", 4: "abcd"}


class Kind(enum.Enum):
    TRIANGLE = "triangle"
    CYCLIC_QUAD = "quad"


class Location(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


def vec(x, y) -> np.ndarray:
    return np.array([float(x), float(y)])


def cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def angle_of(v) -> float:
    """Direction of ``v`` in ``[0, 2*pi)``."""
    return math.atan2(v[1], v[0]) % TWO_PI


def wrap(theta: float) -> float:
    return theta % TWO_PI


def circular_distance(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def line_reflection(direction) -> np.ndarray:
    """Linear reflection across the line spanned by ``direction``."""
    t = np.asarray(direction, dtype=float)
    t = t / math.hypot(t[0], t[1])
    return 2.0 * np.outer(t, t) - np.eye(2)


@dataclass(frozen=True)
class Edge:
    p: np.ndarray
    q: np.ndarray
    index: int = -1

    def __post_init__(self):
        if math.dist(self.p, self.q) <= EPS:
            raise DegeneratePolygon("edge endpoints coincide")

    @property
    def direction(self) -> np.ndarray:
        d = self.q - self.p
        return d / math.hypot(d[0], d[1])

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p + self.q)

    @property
    def length(self) -> float:
        return math.dist(self.p, self.q)


def reflect_direction(d, edge: Edge) -> np.ndarray:
    """Mirror the direction ``d`` across the line carrying ``edge``."""
    t = edge.direction
    d = np.asarray(d, dtype=float)
    return 2.0 * float(d @ t) * t - d


def _circumcircle_of_three(p, q, r):
    ax, ay = p
    bx, by = q
    cx, cy = r
    den = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    scale = max(math.dist(p, q), math.dist(q, r), math.dist(r, p)) ** 2
    if abs(den) <= EPS * scale:
        raise DegeneratePolygon("vertices are (nearly) collinear")
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / den
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / den
    center = vec(ux, uy)
    return center, math.dist(center, p)


def _interior_angles(pts: np.ndarray) -> np.ndarray:
    n = len(pts)
    out = np.empty(n)
    for i in range(n):
        u = pts[i - 1] - pts[i]
        w = pts[(i + 1) % n] - pts[i]
        out[i] = math.atan2(abs(cross(u, w)), float(u @ w))
    return out


def _check_convex_clockwise(pts: np.ndarray) -> None:
    n = len(pts)
    for i in range(n):
        e1 = pts[(i + 1) % n] - pts[i]
        e2 = pts[(i + 2) % n] - pts[(i + 1) % n]
        if cross(e1, e2) >= -EPS * max(1.0, float(e1 @ e1)):
            raise NonConvex("vertices are not in strictly convex clockwise position")


@dataclass(frozen=True, eq=False)
class CyclicPolygon:
    """A triangle or cyclic quadrilateral given by clockwise vertices."""

    vertices: np.ndarray
    kind: Kind = field(init=False)

    def __post_init__(self):
        pts = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if len(pts) not in (3, 4):
            raise ValueError("only triangles and quadrilaterals are supported")
        if not np.all(np.isfinite(pts)):
            raise ValueError("vertex coordinates must be finite")
        object.__setattr__(self, "vertices", pts)
        object.__setattr__(self, "kind", Kind.TRIANGLE if len(pts) == 3 else Kind.CYCLIC_QUAD)
        # touches the circumcircle so that degenerate input fails at construction
        center, radius = self.circumcircle
        _check_convex_clockwise(pts)
        defect = max(abs(math.dist(v, center) - radius) for v in pts)
        if defect > 1e-7 * radius:
            raise NotCyclic(f"vertices are not concyclic (defect {defect:.3g})")

    def __len__(self):
        return len(self.vertices)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def side_indices(self):
        return TRIANGLE_SIDES if self.n == 3 else QUAD_SIDES

    @cached_property
    def circumcircle(self):
        return _circumcircle_of_three(*self.vertices[:3])

    @property
    def center(self) -> np.ndarray:
        return self.circumcircle[0]

    @property
    def radius(self) -> float:
        return self.circumcircle[1]

    @cached_property
    def sides(self) -> np.ndarray:
        """Side vectors in label order (``a, b, c[, d]``)."""
        v = self.vertices
        return np.array([v[j] - v[i] for i, j in self.side_indices])

    @cached_property
    def angles(self) -> np.ndarray:
        """Interior angles at ``A, B, C[, D]``."""
        return _interior_angles(self.vertices)

    def edge(self, k: int) -> Edge:
        i, j = self.side_indices[k]
        return Edge(self.vertices[i].copy(), self.vertices[j].copy(), k)

    def edges(self) -> list[Edge]:
        return [self.edge(k) for k in range(self.n)]

    @property
    def barycenter(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def translated(self, v) -> "CyclicPolygon":
        return CyclicPolygon(self.vertices + np.asarray(v, dtype=float))

    def point_reflected(self, c) -> "CyclicPolygon":
        # central symmetry keeps clockwise order
        return CyclicPolygon(2.0 * np.asarray(c, dtype=float) - self.vertices)


def circumcircle(poly: CyclicPolygon):
    """Return ``(center, radius)`` of the circle through the tile's vertices."""
    return poly.center.copy(), poly.radius


def is_cyclic(quad: Sequence, tol: float = 1e-9) -> bool:
    pts = np.array(quad, dtype=float).reshape(4, 2)
    _check_convex_clockwise(pts)
    ang = _interior_angles(pts)
    return abs(ang[0] + ang[2] - math.pi) <= tol


def contains_circumcenter(poly: CyclicPolygon, tol: float = EPS) -> Location:
    o = poly.center
    dmin = math.inf
    for e in poly.edges():
        # clockwise polygon: interior lies to the right of each edge
        d = -cross(e.direction, o - e.p)
        dmin = min(dmin, d)
    if abs(dmin) <= tol * poly.radius:
        return Location.BOUNDARY
    return Location.INSIDE if dmin > 0 else Location.OUTSIDE


def edge_distances(poly: CyclicPolygon, point) -> np.ndarray:
    """Signed distances from ``point`` to each side line, positive inside."""
    p = np.asarray(point, dtype=float)
    return np.array([-cross(e.direction, p - e.p) for e in poly.edges()])


def triangle_from_angles(alpha: float, beta: float, gamma: float, side: float | None = None) -> CyclicPolygon:
    """Triangle with the given angles (radians) at ``A, B, C``.

    The circumcenter sits at the origin, ``AB`` points along ``+x`` and ``C``
    lies below it.  ``side`` is the length of ``c = AB``; by default the
    circumradius is 1.
    """
    if min(alpha, beta, gamma) <= 0 or abs(alpha + beta + gamma - math.pi) > 1e-9:
        raise DegeneratePolygon("triangle angles must be positive and sum to pi")
    r = 1.0 if side is None else side / (2.0 * math.sin(gamma))
    pa = math.pi / 2 + gamma
    pb = pa - 2 * gamma
    pc = pb - 2 * alpha
    return CyclicPolygon(r * np.array([unit(pa), unit(pb), unit(pc)]))


def quad_from_positions(positions: Sequence[float], radius: float = 1.0, center=(0.0, 0.0)) -> CyclicPolygon:
    """Cyclic quadrilateral with ``A..D`` at the given angular positions.

    Positions (radians) must run clockwise, i.e. strictly decrease modulo
    ``2*pi`` and wind exactly once.
    """
    p = [float(x) for x in positions]
    if len(p) != 4:
        raise ValueError("need exactly four angular positions")
    gaps = [(p[i] - p[(i + 1) % 4]) % TWO_PI for i in range(4)]
    if min(gaps) <= 1e-9 or abs(sum(gaps) - TWO_PI) > 1e-9:
        raise NonConvex("positions must be distinct and in clockwise order")
    c = np.asarray(center, dtype=float)
    return CyclicPolygon(c + radius * np.array([unit(x) for x in p]))
