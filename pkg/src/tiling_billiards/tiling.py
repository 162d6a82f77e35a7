"""Periodic two-colored tiling generated by a base tile and its central mate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import OnEdge, OnVertex
from .geom import EPS, CyclicPolygon, Edge, Kind, cross, rotation, angle_of


class Color(enum.IntEnum):
    WHITE = 0
    GREY = 1


class TileAddress(NamedTuple):
    m: int
    n: int
    color: Color = Color.WHITE

    def shifted(self, dm: int, dn: int) -> "TileAddress":
        return TileAddress(self.m + dm, self.n + dn, self.color)

    def __str__(self):
        return f"({self.m},{self.n},{'W' if self.color == Color.WHITE else 'G'})"


ORIGIN = TileAddress(0, 0, Color.WHITE)


@dataclass(frozen=True, eq=False)
class Tiling:
    """The ``P``-tiling of a triangle or cyclic quadrilateral ``P``.

    The fundamental domain is ``P`` glued to its image under the central
    symmetry through the midpoint ``m`` of side ``c`` (triangles) or side
    ``a`` (quadrilaterals).  Tiles are addressed by lattice coordinates in
    the basis ``v1, v2`` plus a color bit.
    """

    base: CyclicPolygon

    @property
    def kind(self) -> Kind:
        return self.base.kind

    @property
    def n_sides(self) -> int:
        return self.base.n

    @cached_property
    def glue_side(self) -> int:
        """Side of ``P0`` shared with its grey mate ``(0, 0, GREY)``."""
        return 2 if self.kind == Kind.TRIANGLE else 0

    @cached_property
    def midpoint(self) -> np.ndarray:
        return self.base.edge(self.glue_side).midpoint

    @cached_property
    def basis(self) -> np.ndarray:
        """Columns are the lattice vectors ``v1, v2``."""
        a, b, c = self.base.sides[:3]
        if self.kind == Kind.TRIANGLE:
            v1, v2 = -c, -a
        else:
            v1, v2 = a + b, b + c
        return np.column_stack([v1, v2])

    @property
    def v1(self) -> np.ndarray:
        return self.basis[:, 0]

    @property
    def v2(self) -> np.ndarray:
        return self.basis[:, 1]

    @cached_property
    def _basis_inv(self) -> np.ndarray:
        return np.linalg.inv(self.basis)

    @cached_property
    def base_vertices(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertices of ``(0,0,WHITE)`` and ``(0,0,GREY)``."""
        w = self.base.vertices.copy()
        return w, 2.0 * self.midpoint - w

    @cached_property
    def base_centers(self) -> tuple[np.ndarray, np.ndarray]:
        o = self.base.center
        return o.copy(), 2.0 * self.midpoint - o

    @cached_property
    def neighbor_shifts(self) -> tuple[tuple[int, int], ...]:
        """Lattice shift ``s_k`` with ``(0,0,W)`` adjacent to ``(s_k, GREY)`` across side ``k``.

        Going from a grey tile across side ``k`` uses ``-s_k``.
        """
        out = []
        for k in range(self.n_sides):
            t = 2.0 * (self.base.edge(k).midpoint - self.midpoint)
            c = self._basis_inv @ t
            r = np.rint(c)
            assert np.allclose(c, r, atol=1e-7), "neighbor shift is not a lattice vector"
            out.append((int(r[0]), int(r[1])))
        return tuple(out)

    @cached_property
    def reference_angle(self) -> float:
        """Direction of ``AB`` in ``P0``: the zero of every angle parameter."""
        v = self.base.vertices
        return angle_of(v[1] - v[0])

    # disk frame: circumcenter of P0 at the origin, unit radius, AB along +x
    @cached_property
    def _to_disk(self) -> np.ndarray:
        return rotation(-self.reference_angle) / self.base.radius

    def to_disk(self, x) -> np.ndarray:
        return self._to_disk @ (np.asarray(x, dtype=float) - self.base.center)

    def from_disk(self, u) -> np.ndarray:
        return self.base.radius * rotation(self.reference_angle) @ np.asarray(u, dtype=float) + self.base.center

    def lattice_vector(self, m: int, n: int) -> np.ndarray:
        return m * self.basis[:, 0] + n * self.basis[:, 1]

    def lattice_coords(self, p) -> np.ndarray:
        return self._basis_inv @ np.asarray(p, dtype=float)

    def tile_vertices(self, addr: TileAddress) -> np.ndarray:
        return self.base_vertices[addr[2]] + self.lattice_vector(addr[0], addr[1])

    def tile_center(self, addr: TileAddress) -> np.ndarray:
        return self.base_centers[addr[2]] + self.lattice_vector(addr[0], addr[1])

    def tile_at(self, addr: TileAddress) -> CyclicPolygon:
        addr = TileAddress(*addr)
        if addr == ORIGIN:
            return self.base
        return CyclicPolygon(self.tile_vertices(addr))

    def edge_of(self, addr: TileAddress, k: int) -> Edge:
        v = self.tile_vertices(addr)
        i, j = self.base.side_indices[k]
        return Edge(v[i], v[j], k)

    def neighbor(self, addr: TileAddress, k: int) -> TileAddress:
        dm, dn = self.neighbor_shifts[k]
        if addr[2] == Color.WHITE:
            return TileAddress(addr[0] + dm, addr[1] + dn, Color.GREY)
        return TileAddress(addr[0] - dm, addr[1] - dn, Color.WHITE)

    def neighbors(self, addr: TileAddress) -> list[tuple[TileAddress, Edge]]:
        addr = TileAddress(*addr)
        return [(self.neighbor(addr, k), self.edge_of(addr, k)) for k in range(self.n_sides)]

    def _candidates(self, p, margin: int = 2):
        c = self.lattice_coords(np.asarray(p) - self.base.barycenter)
        m0, n0 = int(math.floor(c[0])), int(math.floor(c[1]))
        for dm in range(-margin, margin + 1):
            for dn in range(-margin, margin + 1):
                for color in (Color.WHITE, Color.GREY):
                    yield TileAddress(m0 + dm, n0 + dn, color)

    def _edge_offsets(self, addr: TileAddress, p) -> np.ndarray:
        v = self.tile_vertices(addr)
        out = np.empty(self.n_sides)
        for k, (i, j) in enumerate(self.base.side_indices):
            e = v[j] - v[i]
            out[k] = -cross(e, p - v[i]) / math.hypot(e[0], e[1])
        return out

    def locate(self, p, eps: float = EPS) -> TileAddress:
        """Address of the tile containing ``p``.

        Raises :class:`OnVertex` / :class:`OnEdge` when ``p`` is within
        ``eps`` of a vertex / an edge of the tiling.
        """
        p = np.asarray(p, dtype=float)
        tol = eps * self.base.radius
        for addr in self._candidates(p):
            d = self._edge_offsets(addr, p)
            if d.min() < -tol:
                continue
            v = self.tile_vertices(addr)
            for w in v:
                if math.dist(w, p) <= tol:
                    raise OnVertex(f"point within {eps} of vertex {w}", vertex=w)
            k = int(np.argmin(d))
            if d[k] <= tol:
                raise OnEdge(f"point within {eps} of edge {k} of tile {addr}", address=addr, edge=k)
            return addr
        raise RuntimeError("point location failed")  # pragma: no cover

    def locate_loose(self, p) -> TileAddress:
        """Tile containing ``p`` or one of the tiles whose boundary holds it."""
        p = np.asarray(p, dtype=float)
        best, best_d = None, -math.inf
        for addr in self._candidates(p):
            d = self._edge_offsets(addr, p).min()
            if d > best_d:
                best, best_d = addr, d
        return best

    def addresses_in_box(self, lo, hi, margin: int = 1) -> list[TileAddress]:
        """Addresses of all tiles that may meet the box ``[lo, hi]``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
        c = np.array([self.lattice_coords(q - self.base.barycenter) for q in corners])
        m0, n0 = np.floor(c.min(axis=0)).astype(int) - margin - 1
        m1, n1 = np.ceil(c.max(axis=0)).astype(int) + margin + 1
        out = []
        for m in range(m0, m1 + 1):
            for n in range(n0, n1 + 1):
                for color in (Color.WHITE, Color.GREY):
                    addr = TileAddress(m, n, color)
                    v = self.tile_vertices(addr)
                    if (v.max(axis=0) >= lo).all() and (v.min(axis=0) <= hi).all():
                        out.append(addr)
        return out

    def vertices_in_region(self, lo, hi) -> list[tuple[np.ndarray, list[tuple[TileAddress, int]]]]:
        """Tiling vertices inside the closed box ``[lo, hi]``.

        Each entry is ``(point, incident)`` where ``incident`` lists
        ``(address, vertex index)`` pairs of the tiles meeting at the point.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        scale = 1e-7 * self.base.radius
        found: dict[tuple[int, int], list] = {}
        for addr in self.addresses_in_box(lo, hi):
            for i, w in enumerate(self.tile_vertices(addr)):
                if np.all(w >= lo - EPS) and np.all(w <= hi + EPS):
                    key = (int(round(w[0] / scale)), int(round(w[1] / scale)))
                    entry = found.setdefault(key, [w, []])
                    entry[1].append((addr, i))
        return [(w, inc) for w, inc in sorted(found.values(), key=lambda e: (e[0][0], e[0][1]))]
