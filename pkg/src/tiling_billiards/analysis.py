"""
Experiments built on the simulator: the subtractive simplex algorithm for
triangle shapes, checks on the regions enclosed by periodic orbits, escape
rate fits and seeded parameter sweeps.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np
import shapely
from shapely.geometry import LinearRing, LineString, Polygon

from .billiard import Status, TrajectoryRecord, displacement_curve, growth_exponent, trace, trace_chord
from .errors import NoSingularLeaf, OnEdge, OnVertex, SelfIntersecting, TangentCrossing
from .folding import angle_in_tile
from .geom import TWO_PI, CyclicPolygon, quad_from_positions, triangle_from_angles, unit
from .tiling import Color, TileAddress, Tiling

THREADS_ENV = "TILING_BILLIARDS_THREADS"
TIE = 1e-12


# ---------------------------------------------------------------- simplex

class _Exit:
    def __repr__(self):
        return "EXIT"


EXIT = _Exit()


def rauzy_step(x):
    """One fully subtractive step on the simplex, or :data:`EXIT`.

    The coordinate above ``1/2`` loses the other two and the point is
    renormalised.  A coordinate equal to ``1/2`` (within ``1e-12``) exits.
    """
    x = tuple(float(c) for c in x)
    for i in range(3):
        if x[i] > 0.5 + TIE:
            j, k = (i + 1) % 3, (i + 2) % 3
            rest = x[j] + x[k]
            y = [0.0, 0.0, 0.0]
            y[i] = x[i] - rest
            total = y[i] + rest
            y[i] /= total
            y[j] = x[j] / total
            y[k] = x[k] / total
            return tuple(y)
    return EXIT


def gasket_depth(x, N: int) -> int:
    """Number of successful steps before exiting, capped at ``N``."""
    depth = 0
    while depth < N:
        x = rauzy_step(x)
        if x is EXIT:
            break
        depth += 1
    return depth


def triangle_point(angles) -> tuple[float, float, float] | None:
    """Simplex point of a triangle: ``1 - 2*angle/pi`` for each angle.

    Defined for non-obtuse triangles; ``None`` when an angle exceeds ``pi/2``.
    """
    a = [float(x) for x in angles]
    y = tuple(1.0 - 2.0 * x / math.pi for x in a)
    if min(y) < -TIE:
        return None
    return y


def triangle_depth(angles, N: int) -> int:
    """Gasket depth of a triangle given by its angles (0 for obtuse triangles)."""
    y = triangle_point(angles)
    return 0 if y is None else gasket_depth(y, N)


def gasket_depths(points: np.ndarray, N: int) -> np.ndarray:
    """Vectorised :func:`gasket_depth` for an ``(M, 3)`` array (same arithmetic)."""
    x = np.array(points, dtype=float)
    depth = np.zeros(len(x), dtype=np.int64)
    alive = np.ones(len(x), dtype=bool)
    for _ in range(N):
        big = x > 0.5 + TIE
        step = alive & big.any(axis=1)
        alive = step
        if not step.any():
            break
        depth[step] += 1
        xs = x[step]
        i = np.argmax(xs > 0.5 + TIE, axis=1)
        r = np.arange(len(xs))
        xj = xs[r, (i + 1) % 3]
        xk = xs[r, (i + 2) % 3]
        rest = xj + xk
        yi = xs[r, i] - rest
        total = yi + rest
        out = np.empty_like(xs)
        out[r, i] = yi / total
        out[r, (i + 1) % 3] = xj / total
        out[r, (i + 2) % 3] = xk / total
        x[step] = out
    return depth


def gasket_grid(size: int, N: int) -> np.ndarray:
    """Depth map on the simplex, ``size x size``.

    Pixel ``(r, c)`` is the point ``(c, r, n - r - c) / n`` with
    ``n = size - 1``; pixels with ``r + c > n`` lie outside and hold ``-1``.
    Integer barycentric coordinates make every coordinate permutation an
    exact symmetry of the grid.
    """
    n = size - 1
    r, c = np.mgrid[0:size, 0:size]
    inside = r + c <= n
    ijk = np.stack([c[inside], r[inside], n - r[inside] - c[inside]], axis=1)
    out = np.full((size, size), -1, dtype=np.int64)
    out[inside] = gasket_depths(ijk / float(n) if n > 0 else ijk.astype(float), N)
    return out


def permute_grid(grid: np.ndarray, perm: tuple[int, int, int]) -> np.ndarray:
    """Depth map of the permuted simplex: pixel for ``x`` moves to the pixel for ``x[perm]``."""
    size = grid.shape[0]
    n = size - 1
    out = np.full_like(grid, -1)
    r, c = np.mgrid[0:size, 0:size]
    inside = r + c <= n
    ijk = np.stack([c[inside], r[inside], n - r[inside] - c[inside]], axis=1)
    q = ijk[:, list(perm)]
    out[q[:, 1], q[:, 0]] = grid[inside]
    return out


def survival_fraction(n_samples: int, N: int, seed: int = 0, triangles: bool = False) -> float:
    """Fraction of uniform random points still inside after ``N`` steps.

    With ``triangles`` the samples are uniform random triangle shapes (angles
    uniform on the simplex), mapped through :func:`triangle_point`.
    """
    rng = np.random.default_rng(seed)
    pts = rng.dirichlet(np.ones(3), size=n_samples)
    if triangles:
        pts = 1.0 - 2.0 * pts
        ok = pts.min(axis=1) >= -TIE
        depth = np.zeros(n_samples, dtype=np.int64)
        depth[ok] = gasket_depths(pts[ok], N)
        return float(np.mean(depth >= N))
    return float(np.mean(gasket_depths(pts, N) >= N))


# ------------------------------------------------------- enclosed regions

def winding_numbers(polyline: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Winding number of the closed polyline around each point."""
    P = np.asarray(polyline, dtype=float)
    Q = np.asarray(points, dtype=float).reshape(-1, 2)
    a = P[None, :, :] - Q[:, None, :]
    b = np.roll(P, -1, axis=0)[None, :, :] - Q[:, None, :]
    cr = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dt = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    return np.rint(np.arctan2(cr, dt).sum(axis=1) / TWO_PI).astype(int)


@dataclass
class EnclosedGraph:
    vertices: np.ndarray
    edges: list[tuple[int, int]]
    tiles: list[TileAddress]

    @property
    def is_tree(self) -> bool:
        nv = len(self.vertices)
        if nv == 0 or len(self.edges) != nv - 1:
            return False
        parent = list(range(nv))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in self.edges:
            ri, rj = find(i), find(j)
            if ri == rj:
                return False
            parent[ri] = rj
        return True

    def to_dict(self) -> dict:
        return {
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "edges": [[int(i), int(j)] for i, j in self.edges],
            "tiles": [[int(a[0]), int(a[1]), int(a[2])] for a in self.tiles],
        }


def enclosed_graph(t: Tiling, polyline, eps: float = 1e-9) -> EnclosedGraph:
    """Tiling vertices, edges and tiles inside a simple closed polyline."""
    P = np.asarray(polyline, dtype=float)
    if len(P) < 3:
        raise SelfIntersecting("a closed polyline needs at least three points")
    ring = LinearRing(P)
    if not ring.is_simple:
        raise SelfIntersecting("closed polyline intersects itself")
    region = Polygon(ring)
    shapely.prepare(region)
    shapely.prepare(ring)
    met = _tiles_meeting(t, P, region)
    cand: dict[tuple[int, int], np.ndarray] = {}
    for addr in met:
        for v in t.tile_vertices(addr):
            cand.setdefault(_key(t, v), v)
    pts = np.array(sorted(cand.values(), key=lambda v: (v[0], v[1]))) if cand else np.zeros((0, 2))
    inside = np.zeros(len(pts), dtype=bool)
    if len(pts):
        inside = shapely.contains_xy(region, pts[:, 0], pts[:, 1])
        # vertices too close to the curve: probe slightly off along the curve normal
        for idx in np.flatnonzero(shapely.dwithin(ring, shapely.points(pts), eps)):
            inside[idx] = _probe_inside(P, ring, pts[idx], eps)
    keep = np.flatnonzero(inside)
    vidx = {_key(t, pts[k]): i for i, k in enumerate(keep)}
    pairs: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    tiles = []
    for addr in met:
        verts = t.tile_vertices(addr)
        ks = [vidx.get(_key(t, v)) for v in verts]
        if all(k is not None for k in ks):
            tiles.append(addr)
        for i, j in t.base.side_indices:
            a, b = ks[i], ks[j]
            if a is not None and b is not None:
                pairs.setdefault((min(a, b), max(a, b)), (verts[i], verts[j]))
    edges = []
    if pairs:
        keys = list(pairs)
        segs = shapely.linestrings(np.array([np.vstack(pairs[k]) for k in keys]))
        # an edge with both ends inside can still leave the region and come back;
        # only edges touching some piece of the curve need the exact test
        closed = np.vstack([P, P[:1]])
        pieces = shapely.linestrings(np.stack([closed[:-1], closed[1:]], axis=1))
        near = np.unique(shapely.STRtree(pieces).query(segs, predicate="intersects")[0])
        cut = np.zeros(len(keys), dtype=bool)
        if len(near):
            cut[near] = shapely.crosses(ring, segs[near])
        edges = [k for k, c in zip(keys, cut) if not c]
    return EnclosedGraph(pts[keep], sorted(edges), sorted(tiles))


def _tiles_meeting(t: Tiling, P: np.ndarray, region) -> list[TileAddress]:
    """Tiles meeting the closed region, found by flooding out from a tile on its boundary."""
    start = t.locate_loose(P[0])
    seen = {start}
    queue = deque([start])
    out = []
    while queue:
        addr = queue.popleft()
        if not region.intersects(Polygon(t.tile_vertices(addr))):
            continue
        out.append(addr)
        for nb, _ in t.neighbors(addr):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return out


def _pt(p):
    from shapely.geometry import Point

    return Point(float(p[0]), float(p[1]))


def _key(t: Tiling, v) -> tuple[int, int]:
    scale = 1e-7 * t.base.radius
    return int(round(v[0] / scale)), int(round(v[1] / scale))


def _probe_inside(P, ring, v, eps) -> bool:
    from shapely.ops import nearest_points

    q = np.array(nearest_points(ring, _pt(v))[0].coords[0])
    n = v - q
    L = math.hypot(*n)
    if L == 0.0:
        return False
    probe = v + (10 * eps) * n / L
    return bool(winding_numbers(P, probe[None])[0] != 0)


def enclosed_region(rec: TrajectoryRecord) -> EnclosedGraph:
    """Graph enclosed by one period of a periodic orbit."""
    if rec.status != Status.PERIODIC:
        raise ValueError("enclosed_region needs a periodic record")
    return enclosed_graph(rec.tiling, rec.closed_polyline())


def tree_check(rec_or_graph) -> dict:
    """Whether the enclosed graph is a tree, with the number of enclosed tiles."""
    g = rec_or_graph if isinstance(rec_or_graph, EnclosedGraph) else enclosed_region(rec_or_graph)
    return {
        "is_tree": g.is_tree,
        "enclosed_tiles": len(g.tiles),
        "vertices": len(g.vertices),
        "edges": len(g.edges),
    }


# ----------------------------------------------------------------- flowers

@dataclass
class Petal:
    direction: np.ndarray
    closed: bool
    crossings: int
    tiles: list[TileAddress]
    polyline: np.ndarray
    enclosed_shared_edges: list[tuple[TileAddress, int]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.closed and bool(self.enclosed_shared_edges)


def flower_check(t: Tiling, v, theta0: float, eta: float = 1e-6, max_steps: int = 20000) -> dict:
    """Singular leaves through the vertex ``v`` in the foliation of direction ``theta0``.

    A petal is a leaf leaving ``v`` and coming back to it.  For each petal
    the report says whether the orbit visits two tiles sharing an edge that
    lies inside the petal.  Nothing is concluded for a lone petal.
    """
    v = np.asarray(v, dtype=float)
    h = 1e-6 * t.base.radius
    found = t.vertices_in_region(v - h, v + h)
    if not found:
        raise NoSingularLeaf(f"{v} is not a vertex of the tiling")
    v, inc = found[0]
    petals: list[Petal] = []
    seen_dirs: list[np.ndarray] = []
    for addr, _ in inc:
        d = unit(angle_in_tile(t, theta0, addr) + t.reference_angle)
        for sgn in (1.0, -1.0):
            u = sgn * d
            p = v + eta * t.base.radius * u
            try:
                if t.locate(p) != addr:
                    continue
            except (OnEdge, OnVertex):
                continue
            if any(np.allclose(u, w, atol=1e-9) for w in seen_dirs):
                continue
            try:
                rec = trace(t, p, u, max_steps, stop_on_recurrence=False, start_tile=addr)
            except TangentCrossing:
                continue
            closed = rec.singular_vertex is not None and math.dist(rec.singular_vertex, v) < 1e-6 * t.base.radius
            poly = np.vstack([v[None], rec.points]) if len(rec) else v[None]
            tiles = [addr] + rec.tile_addresses()[1:]
            petal = Petal(u, closed, len(rec), tiles, poly)
            if closed:
                last = rec.directions[-1]
                seen_dirs.append(-last)
                petal.enclosed_shared_edges = _enclosed_shared_edges(t, poly, tiles)
            seen_dirs.append(u)
            petals.append(petal)
    closed = [p for p in petals if p.closed]
    if not closed:
        raise NoSingularLeaf("no leaf through the vertex returns to it")
    return {
        "vertex": [float(v[0]), float(v[1])],
        "theta": float(theta0 % TWO_PI),
        "petals": [
            {
                "crossings": p.crossings,
                "tiles": len(set(p.tiles)),
                "enclosed_shared_edges": len(p.enclosed_shared_edges),
                "holds": p.holds,
            }
            for p in closed
        ],
        "open_leaves": len(petals) - len(closed),
        "several_petals": len(closed) >= 2,
        "all_hold": all(p.holds for p in closed),
    }


def _enclosed_shared_edges(t: Tiling, poly, tiles) -> list[tuple[TileAddress, int]]:
    visited = set(tiles)
    out = []
    ring = poly[:-1] if len(poly) > 1 and np.allclose(poly[0], poly[-1]) else poly
    if len(ring) < 3:
        return out
    for addr in sorted(visited):
        for k in range(t.n_sides):
            nb = t.neighbor(addr, k)
            if nb not in visited or (addr[2] == Color.GREY):
                continue
            e = t.edge_of(addr, k)
            if winding_numbers(ring, e.midpoint[None])[0] != 0:
                out.append((addr, k))
    return out


# ------------------------------------------------------------------ escape

def escape_profile(rec: TrajectoryRecord, windows: int = 8) -> dict:
    """Displacement growth of a non-periodic record.

    ``window_max`` is the largest displacement reached in each of
    ``windows`` log-spaced step windows; the direction is the principal
    axis of the crossing points and ``residual`` the RMS distance to the
    fitted line relative to the largest displacement.
    """
    n = len(rec)
    D = displacement_curve(rec)
    edges = np.unique(np.geomspace(1, max(n, 2), windows + 1).astype(int))
    window_max = [float(D[b - 1]) for b in edges[1:]] if n else []
    expo, fit_res = growth_exponent(rec)
    pts = rec.points - rec.start_point if n else np.zeros((0, 2))
    if n >= 2:
        c = pts.mean(axis=0)
        _, sv, vt = np.linalg.svd(pts - c, full_matrices=False)
        direction = vt[0]
        if direction @ (pts[-1] - pts[0]) < 0:
            direction = -direction
        perp = (pts - c) @ np.array([-direction[1], direction[0]])
        residual = float(np.sqrt(np.mean(perp ** 2)) / max(D[-1], 1e-300))
    else:
        direction, residual = np.zeros(2), math.nan
    return {
        "steps": n,
        "window_max": window_max,
        "growth_exponent": expo,
        "fit_residual": fit_res,
        "direction": [float(direction[0]), float(direction[1])],
        "residual": residual,
    }


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepConfig:
    kind: str = "triangle"          # "triangle", "quad" or "mixed"
    shapes: int = 10
    starts: int = 10
    tau_min: float = 1e-3
    tau_max: float = 0.9
    max_steps: int = 100_000
    seed: int = 0
    min_angle: float = 0.05

    def validate(self) -> None:
        if self.kind not in ("triangle", "quad", "mixed"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.shapes < 1 or self.starts < 1 or self.max_steps < 1:
            raise ValueError("shape count, start count and step budget must be positive")
        if not 0.0 <= self.tau_min <= self.tau_max < 1.0:
            raise ValueError("need 0 <= tau_min <= tau_max < 1")


def random_triangle_angles(rng: np.random.Generator, min_angle: float = 0.05) -> tuple[float, float, float]:
    while True:
        x = rng.dirichlet(np.ones(3)) * math.pi
        if x.min() >= min_angle:
            return float(x[0]), float(x[1]), math.pi - float(x[0]) - float(x[1])


def random_quad_positions(rng: np.random.Generator, min_gap: float = 0.1) -> list[float]:
    while True:
        p = np.sort(rng.uniform(0.0, TWO_PI, 4))[::-1]
        gaps = -np.diff(np.append(p, p[0] - TWO_PI))
        if gaps.min() >= min_gap:
            return [float(x) for x in p]


def random_shape(rng: np.random.Generator, kind: str, min_angle: float = 0.05) -> tuple[dict, CyclicPolygon]:
    if kind == "mixed":
        kind = "triangle" if rng.random() < 0.5 else "quad"
    if kind == "triangle":
        ang = random_triangle_angles(rng, min_angle)
        return {"triangle": list(ang)}, triangle_from_angles(*ang)
    pos = random_quad_positions(rng, min_angle)
    return {"quad": pos}, quad_from_positions(pos)


def _sweep_cell(args) -> dict:
    cfg, index, seq = args
    rng = np.random.default_rng(seq)
    spec, poly = random_shape(rng, cfg.kind, cfg.min_angle)
    t = Tiling(poly)
    runs = []
    counts = {s.value: 0 for s in Status}
    while len(runs) < cfg.starts:
        tau = float(rng.uniform(cfg.tau_min, cfg.tau_max)) * (1 if rng.random() < 0.5 else -1)
        theta = float(rng.uniform(0.0, TWO_PI))
        try:
            rec = trace_chord(t, tau, theta, cfg.max_steps)
        except (OnEdge, OnVertex, TangentCrossing, ValueError):
            continue
        counts[rec.status.value] += 1
        runs.append({
            "tau": tau,
            "theta": theta,
            "status": rec.status.value,
            "period": int(rec.period),
            "shift": [int(rec.shift[0]), int(rec.shift[1])],
            "steps": len(rec),
            "tau_dispersion": rec.tau_dispersion,
        })
    return {"cell": index, "shape": spec, "counts": counts, "runs": runs}


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be non-negative")
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items: list, workers: int | None = None) -> list:
    """``map`` over a process pool, results in input order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def parameter_sweep(cfg: SweepConfig, workers: int | None = None) -> dict:
    """Classify ``starts`` random trajectories on each of ``shapes`` random tiles."""
    cfg.validate()
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.shapes)
    cells = parallel_map(_sweep_cell, [(cfg, i, s) for i, s in enumerate(seqs)], workers)
    totals = {s.value: 0 for s in Status}
    for c in cells:
        for k, v in c["counts"].items():
            totals[k] += v
    return {"config": asdict(cfg), "totals": totals, "cells": cells}
