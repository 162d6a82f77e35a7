"""
Global folding of the tiling onto the circumdisk of the base tile.

Crossing an edge folds the next tile over the crease, so the fold of a tile
is the composition of edge reflections along any path from ``P0``.  For the
periodic tilings handled here the result only depends on the endpoint, and a
translate of a tile folds like the tile itself followed by a rotation about
the circumcenter of ``P0``.  The two generator rotations are obtained by
walking short paths, everything else follows in closed form.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import TangentChord
from .geom import EPS, TWO_PI, angle_of, line_reflection, rotation, unit
from .tiling import ORIGIN, Color, TileAddress, Tiling


@dataclass(frozen=True)
class FoldIsometry:
    """Planar isometry ``x -> linear @ x + offset``."""

    linear: np.ndarray
    offset: np.ndarray

    @property
    def reverses(self) -> bool:
        return bool(np.linalg.det(self.linear) < 0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.linear @ x + self.offset
        return x @ self.linear.T + self.offset

    def compose(self, other: "FoldIsometry") -> "FoldIsometry":
        """``self o other``."""
        return FoldIsometry(self.linear @ other.linear, self.linear @ other.offset + self.offset)

    def inverse(self) -> "FoldIsometry":
        lin = self.linear.T
        return FoldIsometry(lin, -lin @ self.offset)

    @property
    def rotation_angle(self) -> float:
        """Angle of the linear part (for reflections: twice the mirror angle)."""
        return math.atan2(self.linear[1, 0], self.linear[0, 0]) % TWO_PI

    @staticmethod
    def identity() -> "FoldIsometry":
        return FoldIsometry(np.eye(2), np.zeros(2))

    @staticmethod
    def reflection(p, q) -> "FoldIsometry":
        """Reflection across the line through ``p`` and ``q``."""
        p = np.asarray(p, dtype=float)
        lin = line_reflection(np.asarray(q, dtype=float) - p)
        return FoldIsometry(lin, p - lin @ p)

    def allclose(self, other: "FoldIsometry", atol: float = 1e-9) -> bool:
        return np.allclose(self.linear, other.linear, atol=atol) and np.allclose(self.offset, other.offset, atol=atol)


def fold_along_path(t: Tiling, sides: Iterable[int], start: TileAddress = ORIGIN,
                    iso: FoldIsometry | None = None) -> tuple[TileAddress, FoldIsometry]:
    """Fold edge by edge, crossing side ``k`` of the current tile for each ``k``."""
    addr = TileAddress(*start)
    f = FoldIsometry.identity() if iso is None else iso
    for k in sides:
        e = t.edge_of(addr, k)
        f = f.compose(FoldIsometry.reflection(e.p, e.q))
        addr = t.neighbor(addr, k)
    return addr, f


def _bfs_folds(t: Tiling, targets, max_depth: int = 8) -> dict:
    seen = {ORIGIN: FoldIsometry.identity()}
    queue = deque([(ORIGIN, 0)])
    targets = set(targets)
    while queue and not targets <= seen.keys():
        addr, depth = queue.popleft()
        if depth >= max_depth:
            continue
        for k in range(t.n_sides):
            nxt, f = fold_along_path(t, [k], addr, seen[addr])
            if nxt not in seen:
                seen[nxt] = f
                queue.append((nxt, depth + 1))
    return seen


@lru_cache(maxsize=256)
def generator_rotations(t: Tiling) -> tuple[float, float]:
    """Fold rotation angles of the translates ``P0 + v1`` and ``P0 + v2``."""
    g1 = TileAddress(1, 0, Color.WHITE)
    g2 = TileAddress(0, 1, Color.WHITE)
    folds = _bfs_folds(t, [g1, g2])
    return folds[g1].rotation_angle, folds[g2].rotation_angle


def folding_isometry(t: Tiling, addr: TileAddress) -> FoldIsometry:
    """Fold of tile ``addr`` (``P0`` is fixed pointwise)."""
    m, n, color = addr
    r1, r2 = generator_rotations(t)
    rot = rotation(m * r1 + n * r2)
    o = t.base.center
    w = t.lattice_vector(m, n)
    # x -> rot @ (g(x - w) - o) + o, with g the fold of the cell-(0,0) tile
    if color == Color.WHITE:
        lin = rot
        off = o - rot @ (w + o)
    else:
        e = t.base.edge(t.glue_side)
        g = FoldIsometry.reflection(e.p, e.q)
        lin = rot @ g.linear
        off = rot @ (g.offset - g.linear @ w - o) + o
    return FoldIsometry(lin, off)


def fold_to_disk(t: Tiling, addr: TileAddress, x) -> np.ndarray:
    """Folded image of ``x`` (a point of tile ``addr``) in disk coordinates."""
    return t.to_disk(folding_isometry(t, addr)(x))


def phi(t: Tiling, v: tuple[int, int]) -> float:
    """Shift of the angle parameter between a tile and its translate by ``v``.

    ``f_{P+v}(theta) - f_P(theta)`` for same-colored tiles, in ``[0, 2*pi)``.
    """
    r1, r2 = generator_rotations(t)
    return (-(v[0] * r1 + v[1] * r2)) % TWO_PI


def angle_in_tile(t: Tiling, theta0: float, addr: TileAddress) -> float:
    """Direction (relative to ``AB`` of ``P0``) inside tile ``addr`` of the
    trajectories whose direction in ``P0`` is ``theta0``.

    Folding reverses the traversal on grey tiles, hence the extra ``pi``.
    """
    f = folding_isometry(t, addr)
    ref = t.reference_angle
    u = unit(theta0 + ref)
    if addr[2] == Color.GREY:
        u = -u
    d = f.linear.T @ u
    return (angle_of(d) - ref) % TWO_PI


def theta_of_segment(t: Tiling, addr: TileAddress, direction) -> float:
    """Angle parameter ``theta(gamma, P0)`` of a segment with the given
    direction inside tile ``addr``."""
    f = folding_isometry(t, addr)
    u = f.linear @ np.asarray(direction, dtype=float)
    if addr[2] == Color.GREY:
        u = -u
    return (angle_of(u) - t.reference_angle) % TWO_PI


@dataclass(frozen=True)
class Chord:
    """Oriented line in the unit disk.

    ``theta`` is its direction and ``tau`` the signed distance to the
    center, positive when the center lies on the left.
    """

    tau: float
    theta: float

    @property
    def direction(self) -> np.ndarray:
        return unit(self.theta)

    @property
    def foot(self) -> np.ndarray:
        """Point of the line closest to the center."""
        return self.tau * np.array([math.sin(self.theta), -math.cos(self.theta)])

    def offset(self, p) -> float:
        """Signed distance of ``p`` from the line (positive on the right)."""
        d = self.direction
        return -float(d[0] * p[1] - d[1] * p[0]) - self.tau

    @property
    def forward_angle(self) -> float:
        return (self.theta - math.asin(self.tau)) % TWO_PI

    @property
    def backward_angle(self) -> float:
        return (self.theta + math.pi + math.asin(self.tau)) % TWO_PI


def chord_of(c: Chord) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints ``(back, front)`` on the unit circle."""
    if abs(c.tau) >= 1.0 - EPS:
        raise TangentChord(f"|tau| = {abs(c.tau)} does not define a proper chord")
    h = math.sqrt(1.0 - c.tau * c.tau)
    f = c.foot
    d = c.direction
    return f - h * d, f + h * d


def clip_chord(c: Chord, polygon: np.ndarray) -> tuple[float, float] | None:
    """Parameter interval (along ``c.direction`` from the foot) of the chord
    inside a convex polygon given in disk coordinates, or ``None``."""
    d = c.direction
    f = c.foot
    lo, hi = -math.inf, math.inf
    n = len(polygon)
    for i in range(n):
        p, q = polygon[i], polygon[(i + 1) % n]
        e = q - p
        # interior of a clockwise polygon is on the right: -cross(e, x - p) >= 0
        a = -(e[0] * (f[1] - p[1]) - e[1] * (f[0] - p[0]))
        b = -(e[0] * d[1] - e[1] * d[0])
        if abs(b) < 1e-15:
            if a < 0:
                return None
            continue
        s = -a / b
        if b > 0:
            lo = max(lo, s)
        else:
            hi = min(hi, s)
    if hi - lo <= 1e-12:
        return None
    return lo, hi


def polygon_order(t: Tiling, addr: TileAddress) -> np.ndarray:
    """Tile vertices in disk coordinates, clockwise after folding."""
    img = np.array([fold_to_disk(t, addr, v) for v in t.tile_vertices(addr)])
    if addr[2] == Color.GREY:
        img = img[::-1]
    return img


def segment_in_tile(t: Tiling, addr: TileAddress, tau: float, theta: float):
    """Preimage in tile ``addr`` of the chord ``(tau, theta)``.

    Returns ``(start, end)`` in plane coordinates oriented as the billiard
    trajectory runs, or ``None`` when the chord misses the folded tile.
    """
    c = Chord(tau, theta)
    hit = clip_chord(c, polygon_order(t, addr))
    if hit is None:
        return None
    d, f = c.direction, c.foot
    inv = folding_isometry(t, addr).inverse()
    p0 = t.from_disk(f + hit[0] * d)
    p1 = t.from_disk(f + hit[1] * d)
    a, b = inv(p0), inv(p1)
    return (b, a) if addr[2] == Color.GREY else (a, b)
