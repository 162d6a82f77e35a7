"""
Triply periodic surface swept by the trajectories of a fixed energy.

A point ``(X, Theta)`` of ``R^2 x R`` lies on the surface when the fold of
``X`` sits on the unoriented line at signed distance ``tau`` from the center
with direction ``Theta``.  Level sets of ``Theta`` are therefore the
trajectories of energy ``tau`` and angle parameter ``Theta``.  The surface is
never meshed: everything is computed from this predicate and from the fold
images of tiling vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NearVertex, OnEdge, OnVertex, RightAngledDegenerate, SingularLattice
from .folding import fold_to_disk, folding_isometry, generator_rotations, segment_in_tile, theta_of_segment
from .geom import EPS, TWO_PI, Location, angle_of, contains_circumcenter, cross, unit
from .tiling import ORIGIN, Color, TileAddress, Tiling

MEMBERSHIP_EPS = 1e-7


@dataclass(frozen=True)
class Saddle:
    vertex_class: int
    point: np.ndarray
    theta: float
    prongs: int
    same_color_tiles: int

    @property
    def index(self) -> int:
        return 1 - self.prongs // 2

    def to_dict(self) -> dict:
        return {
            "vertex_class": self.vertex_class,
            "point": [float(x) for x in self.point],
            "theta": float(self.theta),
            "prongs": self.prongs,
            "same_color_tiles": self.same_color_tiles,
            "index": self.index,
        }


def period_lattice(t: Tiling) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Periods ``(v1, dTheta1)``, ``(v2, dTheta2)`` and ``(0, 0, 2*pi)`` of the surface.

    The angle shifts are the fold rotations of the translated tiles, so that
    ``(X + v, Theta + dTheta)`` lies on the surface whenever ``(X, Theta)`` does.
    """
    r1, r2 = generator_rotations(t)
    v1 = np.array([*t.v1, r1 % TWO_PI])
    v2 = np.array([*t.v2, r2 % TWO_PI])
    v3 = np.array([0.0, 0.0, TWO_PI])
    return v1, v2, v3


def rectify(t: Tiling) -> tuple[np.ndarray, np.ndarray]:
    """Matrix sending the three periods to the standard basis, and the unit
    covector whose level planes are the images of ``Theta = const``."""
    V = np.column_stack(period_lattice(t))
    scale = max(1.0, float(np.abs(V).max()))
    if abs(np.linalg.det(V)) <= 1e-12 * scale ** 3:
        raise SingularLattice("period vectors are linearly dependent")
    A = np.linalg.inv(V)
    # Theta = e3 . x = e3 . V y, so the covector on the image is the third row of V
    h = V[2].copy()
    return A, h / np.linalg.norm(h)


@dataclass(frozen=True, eq=False)
class HelicoidModel:
    tiling: Tiling
    tau: float
    periods: tuple = field(init=False)
    matrix: np.ndarray = field(init=False)
    covector: np.ndarray = field(init=False)

    def __post_init__(self):
        if not abs(self.tau) < 1.0:
            raise ValueError("energy must satisfy |tau| < 1")
        object.__setattr__(self, "periods", period_lattice(self.tiling))
        A, h = rectify(self.tiling)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "covector", h)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def rectified(self, x, theta) -> np.ndarray:
        return self.matrix @ np.array([x[0], x[1], theta], dtype=float)

    def to_dict(self, with_saddles: bool = True) -> dict:
        out = {
            "tau": float(self.tau),
            "periods": [[float(c) for c in v] for v in self.periods],
            "matrix": [[float(c) for c in row] for row in self.matrix],
            "determinant": self.determinant,
            "covector": [float(c) for c in self.covector],
            "connectedness_assumed": True,
        }
        if with_saddles:
            sd = saddles(self.tiling, self.tau)
            out["saddles"] = [s.to_dict() for s in sd]
            if self.tau == 0.0 and contains_circumcenter(self.tiling.base) != Location.BOUNDARY:
                chi, g = euler_genus(self.tiling)
                out["euler_characteristic"] = chi
                out["genus"] = g
        return out


def membership_defect(model: HelicoidModel, x, theta: float, eps: float = EPS) -> float:
    """Distance (in circumradii) from the fold of ``x`` to the line ``(tau, theta)``."""
    t = model.tiling
    x = np.asarray(x, dtype=float)
    try:
        addr = t.locate(x, eps)
    except OnVertex as exc:
        raise NearVertex(f"{x} is within {eps} of a tiling vertex") from exc
    except OnEdge:
        # the fold is continuous, so either side of the edge will do
        addr = t.locate_loose(x)
    y = fold_to_disk(t, addr, x)
    return abs(cross(unit(theta), y) + model.tau)


def surface_membership(model: HelicoidModel, p, eps: float = MEMBERSHIP_EPS) -> bool:
    x, theta = p
    return membership_defect(model, x, theta) <= eps


def _vertex_classes(t: Tiling) -> list[np.ndarray]:
    """One representative per lattice class of tiling vertices."""
    reps: list[np.ndarray] = []
    for color in (Color.WHITE, Color.GREY):
        for v in t.base_vertices[color]:
            fresh = True
            for r in reps:
                c = t.lattice_coords(v - r)
                if np.allclose(c, np.rint(c), atol=1e-7):
                    fresh = False
                    break
            if fresh:
                reps.append(v.copy())
    return reps


def _incident(t: Tiling, p) -> list[tuple[TileAddress, int]]:
    h = 1e-6 * t.base.radius
    found = t.vertices_in_region(p - h, p + h)
    if len(found) != 1:
        raise RuntimeError("vertex lookup failed")  # pragma: no cover
    return found[0][1]


def _prongs(t: Tiling, p, incident, inward) -> int:
    """Number of tile corners at ``p`` whose folded cone contains ``inward``."""
    count = 0
    for addr, i in incident:
        verts = t.tile_vertices(addr)
        n = len(verts)
        f = folding_isometry(t, addr)
        apex = f(verts[i])
        u = f(verts[(i + 1) % n]) - apex
        w = f(verts[i - 1]) - apex
        lin = t._to_disk
        u, w = lin @ u, lin @ w
        if cross(u, w) < 0:
            u, w = w, u
        tol = 1e-9
        if cross(u, inward) > tol * np.linalg.norm(u) and cross(inward, w) > tol * np.linalg.norm(w):
            count += 1
    return count


def saddles(t: Tiling, tau: float) -> list[Saddle]:
    """Singular points of the level function ``Theta`` on the surface of energy ``tau``.

    For every vertex class the chord through the vertex's fold image is
    found at two levels.  Each incident corner whose folded cone contains
    the chord contributes one half-leaf; ``2k`` half-leaves give index ``1 - k``.
    Regular points (two half-leaves) are omitted.
    """
    if not abs(tau) < 1.0:
        raise ValueError("energy must satisfy |tau| < 1")
    s = math.asin(tau)
    out = []
    for cls, p in enumerate(_vertex_classes(t)):
        inc = _incident(t, p)
        addr0 = inc[0][0]
        nu = angle_of(fold_to_disk(t, addr0, p))
        white = sum(1 for a, _ in inc if a[2] == Color.WHITE)
        # nu is the forward end of the first chord and the backward end of the second
        for theta, sign in (((nu + s) % TWO_PI, -1.0), ((nu + math.pi - s) % TWO_PI, 1.0)):
            r = _prongs(t, p, inc, sign * unit(theta))
            if r not in (0, 2):
                out.append(Saddle(cls, p.copy(), theta, r, white))
    out.sort(key=lambda q: (q.vertex_class, q.theta))
    return out


def euler_genus(t: Tiling, tau: float = 0.0) -> tuple[int, int]:
    """Euler characteristic of the quotient surface and its genus (connectedness assumed)."""
    if tau != 0.0:
        raise ValueError("the genus is only computed for tau = 0")
    if contains_circumcenter(t.base) == Location.BOUNDARY:
        raise RightAngledDegenerate("circumcenter lies on the boundary of the tile")
    chi = sum(s.index for s in saddles(t, 0.0))
    return chi, (2 - chi) // 2


def sample_surface(model: HelicoidModel, n: int, rng: np.random.Generator, radius: int = 2):
    """``n`` points ``(X, Theta)`` on the surface near the base tile."""
    t = model.tiling
    pts = []
    addrs = [TileAddress(m, k, c) for m in range(-radius, radius + 1)
             for k in range(-radius, radius + 1) for c in (Color.WHITE, Color.GREY)]
    while len(pts) < n:
        addr = addrs[rng.integers(len(addrs))]
        theta = rng.uniform(0.0, TWO_PI)
        seg = segment_in_tile(t, addr, model.tau, theta)
        if seg is None:
            continue
        lam = rng.uniform(0.05, 0.95)
        x = seg[0] + lam * (seg[1] - seg[0])
        pts.append((x, theta, addr, seg[1] - seg[0]))
    return pts


@dataclass
class SymmetryReport:
    n_samples: int
    central_defect: float
    flip_defect: float
    flip_expected: bool
    period_defects: list[float]
    pairing_defect: float
    midpoint_defect: float

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "central_defect": self.central_defect,
            "flip_defect": self.flip_defect,
            "flip_expected": self.flip_expected,
            "period_defects": list(self.period_defects),
            "pairing_defect": self.pairing_defect,
            "midpoint_defect": self.midpoint_defect,
        }


def check_symmetries(model: HelicoidModel, n_samples: int = 200, seed: int = 0) -> SymmetryReport:
    """Largest membership defects of symmetric images of sampled surface points.

    * central symmetry ``(X, Theta) -> (2m - X, -Theta)`` (any energy);
    * ``Theta -> Theta + pi`` (a symmetry only at ``tau = 0``);
    * the three periods;
    * a trajectory and its mirror image through ``m`` (same energy) have
      opposite angle parameters, measured from ``AB``.

    ``midpoint_defect`` is the defect of ``(m, pi/2)``, the direction
    orthogonal to the glue side through its midpoint; it vanishes iff
    ``tau = 0``.
    """
    rng = np.random.default_rng(seed)
    t = model.tiling
    m = t.midpoint
    central = flip = pairing = 0.0
    per = [0.0, 0.0, 0.0]
    for x, theta, addr, d in sample_surface(model, n_samples, rng):
        central = max(central, membership_defect(model, 2.0 * m - x, -theta))
        flip = max(flip, membership_defect(model, x, theta + math.pi))
        for j, v in enumerate(model.periods):
            per[j] = max(per[j], membership_defect(model, x + v[:2], theta + v[2]))
        th = theta_of_segment(t, addr, d)
        mirror = TileAddress(-addr[0], -addr[1], Color(1 - addr[2]))
        th2 = theta_of_segment(t, mirror, -d)
        pairing = max(pairing, abs((th + th2 + math.pi) % TWO_PI - math.pi))
    mid = membership_defect(model, m, midpoint_theta(t))
    return SymmetryReport(n_samples, central, flip, model.tau == 0.0, per, pairing, mid)


def midpoint_theta(t: Tiling) -> float:
    """Level of the line through ``m`` orthogonal to the glue side."""
    e = t.base.edge(t.glue_side).direction
    return (angle_of(e) - t.reference_angle + math.pi / 2) % math.pi
