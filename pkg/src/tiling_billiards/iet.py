"""
Circle exchanges with flips attached to a tile and an energy.

Every tile of the tiling is carried onto ``P0`` by a translation (white
tiles) or a central symmetry (grey tiles), neither of which changes the
energy.  In that common frame a segment is determined by its direction
``omega`` (measured from ``AB``); crossing side ``k`` sends it to
``2 e_k - omega`` where ``e_k`` is the direction of that side.  Which side is
crossed depends on ``omega`` only, which gives a fully flipped exchange ``F``
of 3 or 4 arcs.  Its square ``T`` preserves orientation and returns every
white tile to a white tile.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChord, HitBreakpoint
from .geom import EPS, TWO_PI, CyclicPolygon, angle_of
from .tiling import Tiling

SNAP = 1e-9


@dataclass(frozen=True)
class Piece:
    start: float
    length: float
    flip: bool
    offset: float
    label: int

    def apply(self, x: float) -> float:
        return (self.offset - x) % TWO_PI if self.flip else (x + self.offset) % TWO_PI

    def image(self) -> tuple[float, float]:
        """Start and length of the image arc."""
        if self.flip:
            return (self.offset - self.start - self.length) % TWO_PI, self.length
        return (self.start + self.offset) % TWO_PI, self.length


class IETWithFlips:
    """Piecewise isometry of the circle ``[0, 2*pi)`` given by consecutive arcs."""

    def __init__(self, pieces: list[Piece]):
        if not pieces:
            raise ValueError("an exchange needs at least one arc")
        self.pieces = list(pieces)
        self._rel = []
        acc = 0.0
        for p in self.pieces:
            self._rel.append(acc)
            acc += p.length
        self.total = acc

    @classmethod
    def from_lengths(cls, lengths, offsets, flips, labels=None, origin: float = 0.0) -> "IETWithFlips":
        pieces = []
        x = origin
        labels = range(len(lengths)) if labels is None else labels
        for L, off, fl, lab in zip(lengths, offsets, flips, labels):
            pieces.append(Piece(x % TWO_PI, float(L), bool(fl), float(off), int(lab)))
            x += L
        return cls(pieces)

    def __len__(self):
        return len(self.pieces)

    @property
    def breakpoints(self) -> list[float]:
        return [p.start for p in self.pieces]

    @property
    def lengths(self) -> list[float]:
        return [p.length for p in self.pieces]

    @property
    def flips(self) -> list[bool]:
        return [p.flip for p in self.pieces]

    @property
    def labels(self) -> list[int]:
        return [p.label for p in self.pieces]

    @property
    def permutation(self) -> list[int]:
        """Position of each arc's image in the circular order of images,
        counted from the image that starts right after ``pieces[0].start``."""
        o = self.pieces[0].start
        starts = [(img[0] - o) % TWO_PI for img in (p.image() for p in self.pieces)]
        order = sorted(range(len(starts)), key=lambda i: starts[i])
        pos = [0] * len(order)
        for r, i in enumerate(order):
            pos[i] = r
        return pos

    def locate(self, x: float, eps: float = 0.0) -> int:
        rel = (x - self.pieces[0].start) % TWO_PI
        if rel >= self.total:
            raise HitBreakpoint(f"{x} lies outside the domain")
        i = bisect.bisect_right(self._rel, rel) - 1
        if eps > 0:
            lo = rel - self._rel[i]
            hi = self._rel[i] + self.pieces[i].length - rel
            if min(lo, hi) <= eps:
                raise HitBreakpoint(f"{x} within {eps} of a breakpoint")
        return i

    def __call__(self, x: float) -> float:
        return self.pieces[self.locate(x)].apply(x)

    def bijectivity_defect(self) -> float:
        """Largest gap or overlap between consecutive image arcs."""
        imgs = sorted(p.image() for p in self.pieces)
        worst = abs(sum(L for _, L in imgs) - self.total)
        for (s0, L0), (s1, _) in zip(imgs, imgs[1:] + [(imgs[0][0] + TWO_PI, 0.0)]):
            worst = max(worst, abs(s1 - (s0 + L0)) if self.total > TWO_PI - 1e-9 else 0.0)
        return worst

    def inverse_defect(self) -> float:
        """Largest overlap of image arcs: zero for an injective map."""
        imgs = sorted(p.image() for p in self.pieces)
        worst = 0.0
        for (s0, L0), (s1, _) in zip(imgs, imgs[1:]):
            worst = max(worst, s0 + L0 - s1)
        return max(worst, 0.0)

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(p.start) for p in self.pieces],
            "lengths": [float(p.length) for p in self.pieces],
            "flips": [bool(p.flip) for p in self.pieces],
            "offsets": [float(p.offset) for p in self.pieces],
            "labels": [int(p.label) for p in self.pieces],
            "permutation": self.permutation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IETWithFlips":
        return cls([Piece(s, L, f, o, lab) for s, L, f, o, lab in
                    zip(d["breakpoints"], d["lengths"], d["flips"], d["offsets"], d["labels"])])

    def compose(self, other: "IETWithFlips", label_base: int | None = None) -> "IETWithFlips":
        """``self o other`` (apply ``other`` first)."""
        nb = label_base if label_base is not None else max(self.labels) + 1
        cuts = set()
        for p in other.pieces:
            cuts.add(p.start % TWO_PI)
        # preimages under `other` of the breakpoints of `self`
        for p in other.pieces:
            img_start, L = p.image()
            for b in self.breakpoints:
                rel = (b - img_start) % TWO_PI
                if SNAP < rel < L - SNAP:
                    x = (p.start + L - rel) if p.flip else (p.start + rel)
                    cuts.add(x % TWO_PI)
        origin = other.pieces[0].start
        rels = sorted((c - origin) % TWO_PI for c in cuts)
        merged = []
        for r in rels:
            if not merged or r - merged[-1] > SNAP:
                merged.append(r)
        merged.append(other.total)
        pieces = []
        for a, b in zip(merged, merged[1:]):
            if b - a <= SNAP:
                continue
            x0 = (origin + a) % TWO_PI
            mid = (origin + 0.5 * (a + b)) % TWO_PI
            p = other.pieces[other.locate(mid)]
            q = self.pieces[self.locate(p.apply(mid))]
            flip = p.flip != q.flip
            if not p.flip and not q.flip:
                off = p.offset + q.offset
            elif p.flip and q.flip:
                off = q.offset - p.offset
            elif p.flip:
                off = q.offset + p.offset
            else:
                off = q.offset - p.offset
            pieces.append(Piece(x0, b - a, flip, off % TWO_PI, p.label * nb + q.label))
        return IETWithFlips(pieces)


def iterate(f: IETWithFlips, x: float, n: int, eps: float = EPS) -> tuple[np.ndarray, list[int]]:
    """Orbit ``x, f(x), ..., f^n(x)`` and the labels of the arcs visited."""
    orbit = [x % TWO_PI]
    word = []
    for _ in range(n):
        i = f.locate(orbit[-1], eps)
        word.append(f.pieces[i].label)
        orbit.append(f.pieces[i].apply(orbit[-1]))
    return np.array(orbit), word


def _disk_vertices(poly: CyclicPolygon) -> np.ndarray:
    t = Tiling(poly)
    return np.array([t.to_disk(v) for v in poly.vertices]), t


def first_return_iet(poly: CyclicPolygon, tau: float) -> tuple[IETWithFlips, IETWithFlips]:
    """``(F, T)`` for tile ``poly`` at energy ``tau`` (with ``T = F o F``).

    ``F`` is labelled by the side crossed, ``T`` by ``n * k + j`` for the
    two sides crossed in succession.
    """
    verts, t = _disk_vertices(poly)
    n = len(verts)
    if abs(tau) >= 1.0:
        raise DegenerateChord("|tau| must be below 1")
    idx = poly.side_indices
    # every chord at distance |tau| must cross the tile
    for i, j in idx:
        p, q = verts[i], verts[j]
        e = q - p
        dist = -(e[0] * (0 - p[1]) - e[1] * (0 - p[0])) / math.hypot(*e)
        if dist <= abs(tau) + EPS:
            raise DegenerateChord(
                f"chords at distance {tau:.6g} miss the tile (side distance {dist:.6g})")
    side_dir = [angle_of(verts[j] - verts[i]) for i, j in idx]
    shift = math.asin(tau)
    cuts = sorted((angle_of(v) + shift) % TWO_PI for v in verts)
    pieces = []
    for a_, b_ in zip(cuts, cuts[1:] + [cuts[0] + TWO_PI]):
        mid = 0.5 * (a_ + b_)
        k = _exit_side(verts, idx, tau, mid)
        pieces.append(Piece(a_ % TWO_PI, b_ - a_, True, (2.0 * side_dir[k]) % TWO_PI, k))
    F = IETWithFlips(pieces)
    T = F.compose(F, label_base=n)
    return F, T


def _exit_side(verts, idx, tau, omega) -> int:
    return _exit(verts, idx, tau, omega)[0]


def _exit(verts, idx, tau, omega) -> tuple[int, float]:
    """Side crossed by the chord ``(tau, omega)`` and the edge parameter there."""
    d = np.array([math.cos(omega), math.sin(omega)])
    foot = tau * np.array([math.sin(omega), -math.cos(omega)])
    best, best_t, best_s = -1, math.inf, math.nan
    for k, (i, j) in enumerate(idx):
        p, q = verts[i], verts[j]
        e = q - p
        den = d[0] * e[1] - d[1] * e[0]
        if abs(den) < 1e-15:
            continue
        w = p - foot
        tt = (w[0] * e[1] - w[1] * e[0]) / den
        ss = (w[0] * d[1] - w[1] * d[0]) / den
        # exit: the ray leaves through the side it crosses going outward
        if -1e-12 <= ss <= 1 + 1e-12 and den < 0 and tt < best_t:
            best, best_t, best_s = k, tt, ss
    if best < 0:
        raise DegenerateChord(f"no exit side for omega={omega}")
    return best, best_s


def canonical_direction(t: Tiling, color: int, direction) -> float:
    """Direction of a segment after carrying its tile onto ``P0``."""
    d = np.asarray(direction, dtype=float)
    if color == 1:
        d = -d
    return (angle_of(d) - t.reference_angle) % TWO_PI


def coding_crosscheck(t: Tiling, tau: float, start, n: int, tol: float = 1e-6) -> bool:
    """Compare a traced trajectory with the orbit of ``T``.

    ``start`` is ``(point, direction)``.  The trajectory's canonical
    directions at every other crossing must follow ``T`` within ``tol``, the
    crossed sides must match the symbolic coding of ``F``, and each crossing
    must sit where the chord ``(tau, omega)`` leaves ``P0``.
    """
    from .billiard import Status, trace

    F, T = first_return_iet(t.base, tau)
    p0, d0 = start
    rec = trace(t, p0, d0, max_steps=2 * n + 1, stop_on_recurrence=False)
    if rec.status == Status.SINGULAR_HIT or len(rec) < 2 * n + 1:
        raise HitBreakpoint("trajectory hit a vertex before the requested length")
    omegas = np.array([canonical_direction(t, c, d) for c, d in zip(rec.tiles[:, 2], rec.directions)])
    x0 = omegas[0]
    try:
        orbit_t, word_t = iterate(T, x0, n)
        _, word_f = iterate(F, x0, 2 * n)
    except HitBreakpoint:
        return False
    sim = omegas[0:2 * n + 1:2]
    err = np.abs((sim - orbit_t + math.pi) % TWO_PI - math.pi)
    if err.max() > tol:
        return False
    if list(rec.edges[:2 * n]) != word_f:
        return False
    verts, _ = _disk_vertices(t.base)
    idx = t.base.side_indices
    for w, k, sk in zip(omegas[:2 * n], rec.edges[:2 * n], rec.s[:2 * n]):
        # central symmetry keeps the edge parameter, so compare in P0 directly
        k2, s2 = _exit(verts, idx, tau, w)
        if k2 != k or abs(s2 - sk) > tol:
            return False
    nb = t.n_sides
    pairs = [int(rec.edges[2 * i]) * nb + int(rec.edges[2 * i + 1]) for i in range(n)]
    return pairs == word_t
