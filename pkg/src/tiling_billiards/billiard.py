"""
Refractive trajectories in a periodic tiling.

A trajectory is traced tile by tile.  Positions are kept in the local frame
of the current lattice cell (the tile minus its lattice translation), so
coordinates stay small however far the ray travels.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import OnEdge, OnVertex, TangentCrossing
from .geom import EPS, Edge, cross
from .tiling import Color, TileAddress, Tiling

STATE_TOL = 1e-9
TAU_ZERO = 1e-6
SUBLINEAR_EXPONENT = 0.9
LINEAR_EXPONENT = 0.95
ESCAPE_CHECK = 10_000       # first step count at which linear growth may stop a trace
ESCAPE_MIN_RADII = 50.0     # displacement (in circumradii) needed before calling an escape


class Status(enum.Enum):
    PERIODIC = "periodic"
    LINEAR_ESCAPE = "linear_escape"
    NON_LINEAR_CANDIDATE = "non_linear_candidate"
    UNRESOLVED = "unresolved"
    SINGULAR_HIT = "singular_hit"


@dataclass(frozen=True)
class Crossing:
    """The ray leaves ``tile`` through side ``edge`` at ``point``."""

    tile: TileAddress
    edge: int
    point: np.ndarray
    direction: np.ndarray
    s: float


def refract(d, e: Edge) -> np.ndarray:
    """Direction after crossing ``e``: ``d`` mirrored across the edge normal."""
    d = np.asarray(d, dtype=float)
    t = e.direction
    along = float(d @ t)
    if abs(cross(t, d)) <= EPS:
        raise TangentCrossing("direction is tangent to the edge")
    return d - 2.0 * along * t


class _Kernel:
    """Flat per-tiling data for the tracing loop."""

    def __init__(self, t: Tiling):
        self.n = t.n_sides
        idx = t.base.side_indices
        self.q = []
        self.e = []
        self.tan = []
        self.length = []
        for c in (0, 1):
            v = t.base_vertices[c]
            self.q.append([(float(v[i][0]), float(v[i][1])) for i, j in idx])
            ev = [(float(v[j][0] - v[i][0]), float(v[j][1] - v[i][1])) for i, j in idx]
            self.e.append(ev)
            ln = [math.hypot(x, y) for x, y in ev]
            self.length.append(ln)
            self.tan.append([(x / L, y / L) for (x, y), L in zip(ev, ln)])
        self.shift = []
        for dm, dn in t.neighbor_shifts:
            w = t.lattice_vector(dm, dn)
            self.shift.append((dm, dn, float(w[0]), float(w[1])))
        self.v1 = (float(t.v1[0]), float(t.v1[1]))
        self.v2 = (float(t.v2[0]), float(t.v2[1]))
        self.eps = EPS * t.base.radius


@dataclass
class TrajectoryRecord:
    tiling: Tiling = field(repr=False)
    start_point: np.ndarray
    start_direction: np.ndarray
    start_tile: TileAddress
    tiles: np.ndarray          # (N, 3) int: m, n, color of the tile being left
    edges: np.ndarray          # (N,) exit side
    s: np.ndarray              # (N,) edge parameter of the exit point
    local_points: np.ndarray   # (N, 2) exit point, cell-local frame
    directions: np.ndarray     # (N, 2) direction inside the tile being left
    status: Status = Status.UNRESOLVED
    period: int = 0
    cycle_start: int = -1
    shift: tuple[int, int] = (0, 0)
    singular_vertex: np.ndarray | None = None
    growth_exponent: float = math.nan

    def __len__(self):
        return len(self.edges)

    @cached_property
    def points(self) -> np.ndarray:
        """Exit points in plane coordinates."""
        t = self.tiling
        return self.local_points + self.tiles[:, :2] @ t.basis.T

    @property
    def drift(self) -> np.ndarray:
        """Mean displacement per crossing of an escaping record."""
        if self.status != Status.LINEAR_ESCAPE:
            return np.zeros(2)
        if self.period > 0:
            return self.tiling.lattice_vector(*self.shift) / self.period
        return (self.points[-1] - self.start_point) / len(self)

    def crossing(self, i: int) -> Crossing:
        m, n, c = (int(x) for x in self.tiles[i])
        return Crossing(TileAddress(m, n, Color(c)), int(self.edges[i]), self.points[i].copy(),
                        self.directions[i].copy(), float(self.s[i]))

    def segment(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Segment ``i`` lies in ``tiles[i]`` and ends at ``points[i]``."""
        a = self.start_point if i == 0 else self.points[i - 1]
        return a, self.points[i]

    @cached_property
    def taus(self) -> np.ndarray:
        """Signed distance of every segment line to its tile's circumcenter."""
        t = self.tiling
        centers = np.array(t.base_centers)[self.tiles[:, 2]]
        rel = centers - self.local_points
        d = self.directions
        return (d[:, 0] * rel[:, 1] - d[:, 1] * rel[:, 0]) / t.base.radius

    @property
    def tau(self) -> float:
        return float(np.median(self.taus)) if len(self) else math.nan

    @property
    def tau_dispersion(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(self.taus.max() - self.taus.min())

    def tile_addresses(self, start: int = 0, stop: int | None = None) -> list[TileAddress]:
        return [TileAddress(int(m), int(n), Color(int(c))) for m, n, c in self.tiles[start:stop]]

    def cycle(self) -> list[int]:
        """Indices of one period of the orbit (periodic or escaping)."""
        if self.period <= 0:
            return []
        return list(range(self.cycle_start, self.cycle_start + self.period))

    def closed_polyline(self) -> np.ndarray:
        """Crossing points of one period of a periodic orbit."""
        return self.points[self.cycle()]

    def thetas(self) -> np.ndarray:
        from .folding import theta_of_segment

        return np.array([theta_of_segment(self.tiling, a, d) for a, d in zip(self.tile_addresses(), self.directions)])


def _state_key_lookup(index, c, k, s, dx, dy, i, states, tol):
    q = s / tol
    for b in (math.floor(q - 0.5), math.floor(q + 0.5)):
        hit = index.get((c, k, b))
        if hit is None:
            continue
        for j in hit:
            sj = states[j]
            if abs(sj[0] - s) <= tol and abs(sj[1] - dx) <= tol and abs(sj[2] - dy) <= tol:
                return j
    index.setdefault((c, k, math.floor(q)), []).append(i)
    return None


def trace(t: Tiling, p0, d0, max_steps: int = 100_000, *, stop_on_recurrence: bool = True,
          start_tile: TileAddress | None = None, tol: float = STATE_TOL) -> TrajectoryRecord:
    """Follow the ray from ``p0`` in direction ``d0`` for up to ``max_steps`` crossings.

    With ``stop_on_recurrence`` the trace ends at the first repeated state
    (periodic, or periodic up to a lattice shift) and, from
    ``ESCAPE_CHECK`` crossings on, at every doubling of the step count once
    the displacement grows linearly.  Rays of energy ``|tau| < TAU_ZERO``
    always use the full budget.  Generic escaping rays never repeat a
    state exactly, because the angle shift of a lattice translation is then
    never a multiple of ``2*pi``.
    """
    p0 = np.asarray(p0, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    d0 = d0 / math.hypot(d0[0], d0[1])
    if start_tile is None:
        start_tile = t.locate(p0)
    K = _Kernel(t)
    m, n, c = int(start_tile[0]), int(start_tile[1]), int(start_tile[2])
    w = t.lattice_vector(m, n)
    px, py = float(p0[0] - w[0]), float(p0[1] - w[1])
    dx, dy = float(d0[0]), float(d0[1])
    k_in = -1
    eps = K.eps
    nsides = K.n

    T_m, T_n, T_c, E, S, PX, PY, DX, DY = ([] for _ in range(9))
    states = []
    index: dict = {}
    recurrence = None
    singular = None
    checkpoint = ESCAPE_CHECK
    # non-linear escapes need tau = 0 and are only decided at the end of the budget
    if abs(_start_tau(t, start_tile, p0, d0)) < TAU_ZERO:
        checkpoint = -1

    for step in range(max_steps):
        qc, ec = K.q[c], K.e[c]
        best_t = math.inf
        best_k = -1
        best_s = 0.0
        for k in range(nsides):
            if k == k_in:
                continue
            ex, ey = ec[k]
            den = dx * ey - dy * ex
            if den == 0.0:
                continue
            wx = qc[k][0] - px
            wy = qc[k][1] - py
            tt = (wx * ey - wy * ex) / den
            ss = (wx * dy - wy * dx) / den
            if tt > 0.0 and -1e-12 <= ss <= 1.0 + 1e-12 and tt < best_t:
                best_t, best_k, best_s = tt, k, ss
        if best_k < 0:
            # numerically grazing: fall back to the closest admissible edge
            for k in range(nsides):
                if k == k_in:
                    continue
                ex, ey = ec[k]
                den = dx * ey - dy * ex
                if den == 0.0:
                    continue
                wx = qc[k][0] - px
                wy = qc[k][1] - py
                tt = (wx * ey - wy * ex) / den
                ss = (wx * dy - wy * dx) / den
                ss = min(max(ss, 0.0), 1.0)
                if tt > -eps and tt < best_t:
                    best_t, best_k, best_s = tt, k, ss
        k = best_k
        s = best_s
        L = K.length[c][k]
        px = qc[k][0] + s * ec[k][0]
        py = qc[k][1] + s * ec[k][1]
        T_m.append(m)
        T_n.append(n)
        T_c.append(c)
        E.append(k)
        S.append(s)
        PX.append(px)
        PY.append(py)
        DX.append(dx)
        DY.append(dy)
        if s * L <= eps or (1.0 - s) * L <= eps:
            vx, vy = (qc[k] if s * L <= eps else (qc[k][0] + ec[k][0], qc[k][1] + ec[k][1]))
            wv = t.lattice_vector(m, n)
            singular = np.array([vx + wv[0], vy + wv[1]])
            break
        if recurrence is None:
            j = _state_key_lookup(index, c, k, s, dx, dy, step, states, tol)
            states.append((s, dx, dy, m, n))
            if j is not None:
                recurrence = (j, step)
                if stop_on_recurrence:
                    break
            elif stop_on_recurrence and step + 1 == checkpoint:
                checkpoint *= 2
                if _escaping(K, p0, T_m, T_n, PX, PY, t.base.radius):
                    break
        tx, ty = K.tan[c][k]
        dot = dx * tx + dy * ty
        dx -= 2.0 * dot * tx
        dy -= 2.0 * dot * ty
        h = math.hypot(dx, dy)
        dx /= h
        dy /= h
        dm, dn, sx, sy = K.shift[k]
        if c == 0:
            m += dm
            n += dn
            px -= sx
            py -= sy
            c = 1
        else:
            m -= dm
            n -= dn
            px += sx
            py += sy
            c = 0
        k_in = k

    rec = TrajectoryRecord(
        tiling=t,
        start_point=p0.copy(),
        start_direction=d0.copy(),
        start_tile=TileAddress(*start_tile),
        tiles=np.column_stack([np.array(T_m, dtype=np.int64), np.array(T_n, dtype=np.int64),
                               np.array(T_c, dtype=np.int64)]) if T_m else np.zeros((0, 3), dtype=np.int64),
        edges=np.array(E, dtype=np.int64),
        s=np.array(S),
        local_points=np.column_stack([PX, PY]) if PX else np.zeros((0, 2)),
        directions=np.column_stack([DX, DY]) if DX else np.zeros((0, 2)),
    )
    if singular is not None:
        rec.status = Status.SINGULAR_HIT
        rec.singular_vertex = singular
    elif recurrence is not None:
        i, j = recurrence
        _set_recurrence(rec, i, j)
    else:
        _classify_open(rec)
    return rec


def _start_tau(t: Tiling, addr, p, d) -> float:
    o = t.tile_center(TileAddress(*addr))
    return float(d[0] * (o[1] - p[1]) - d[1] * (o[0] - p[0])) / t.base.radius


def _set_recurrence(rec: TrajectoryRecord, i: int, j: int) -> None:
    dm = int(rec.tiles[j, 0] - rec.tiles[i, 0])
    dn = int(rec.tiles[j, 1] - rec.tiles[i, 1])
    rec.period = j - i
    rec.cycle_start = i
    rec.shift = (dm, dn)
    rec.status = Status.PERIODIC if (dm, dn) == (0, 0) else Status.LINEAR_ESCAPE


def displacement_curve(rec: TrajectoryRecord) -> np.ndarray:
    """Running maximum of the distance from the first crossing point."""
    if len(rec) == 0:
        return np.zeros(0)
    d = np.hypot(*(rec.points - rec.start_point).T)
    return np.maximum.accumulate(d)


def growth_exponent(rec: TrajectoryRecord, decades: float = 1.0) -> tuple[float, float]:
    """Least-squares slope of log max-displacement against log step over the
    last ``decades`` of the record, and the fit residual (RMS)."""
    return _fit_growth(displacement_curve(rec), decades)


def _fit_growth(D: np.ndarray, decades: float = 1.0) -> tuple[float, float]:
    n = len(D)
    if n < 20:
        return math.nan, math.nan
    lo = max(1, int(n / 10**decades))
    steps = np.unique(np.geomspace(lo, n, 64).astype(int)) - 1
    steps = steps[D[steps] > 0]
    if len(steps) < 3:
        return 0.0, 0.0
    x = np.log(steps + 1.0)
    y = np.log(D[steps])
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), resid


def _escaping(K: "_Kernel", p0, T_m, T_n, PX, PY, radius: float) -> bool:
    """Linear growth of the displacement over the last decade of a partial trace."""
    m = np.asarray(T_m, dtype=float)
    n = np.asarray(T_n, dtype=float)
    x = np.asarray(PX) + m * K.v1[0] + n * K.v2[0] - p0[0]
    y = np.asarray(PY) + m * K.v1[1] + n * K.v2[1] - p0[1]
    D = np.maximum.accumulate(np.hypot(x, y))
    if D[-1] < ESCAPE_MIN_RADII * radius:
        return False
    expo, _ = _fit_growth(D)
    return expo >= LINEAR_EXPONENT


def _open_status(rec: TrajectoryRecord, expo: float) -> Status:
    """Status of a record without state recurrence, from its growth exponent."""
    if math.isnan(expo):
        return Status.UNRESOLVED
    far = displacement_curve(rec)[-1] >= ESCAPE_MIN_RADII * rec.tiling.base.radius
    if expo >= LINEAR_EXPONENT and far:
        return Status.LINEAR_ESCAPE
    if abs(rec.tau) < TAU_ZERO and expo < SUBLINEAR_EXPONENT:
        return Status.NON_LINEAR_CANDIDATE
    return Status.UNRESOLVED


def _classify_open(rec: TrajectoryRecord) -> None:
    expo, _ = growth_exponent(rec)
    rec.growth_exponent = expo
    rec.status = _open_status(rec, expo)


def classify(rec: TrajectoryRecord, tol: float = STATE_TOL) -> Status:
    """Recompute the status of a record from its crossing states.

    Independent of the online detection in :func:`trace`: states are sorted
    and near-equal neighbours grouped.
    """
    if rec.singular_vertex is not None:
        return Status.SINGULAR_HIT
    n = len(rec)
    if n == 0:
        return Status.UNRESOLVED
    order = np.lexsort((rec.directions[:, 1], rec.directions[:, 0], rec.s, rec.edges, rec.tiles[:, 2]))
    best = None
    run = [order[0]]

    def close(a, b):
        return (rec.tiles[a, 2] == rec.tiles[b, 2] and rec.edges[a] == rec.edges[b]
                and abs(rec.s[a] - rec.s[b]) <= tol
                and np.all(np.abs(rec.directions[a] - rec.directions[b]) <= tol))

    def flush(run):
        nonlocal best
        if len(run) > 1:
            r = sorted(run)
            if best is None or r[1] < best[1]:
                best = (r[0], r[1])

    for a in order[1:]:
        if close(run[-1], a):
            run.append(a)
        else:
            flush(run)
            run = [a]
    flush(run)
    if best is None:
        return _open_status(rec, growth_exponent(rec)[0])
    i, j = best
    shift = (int(rec.tiles[j, 0] - rec.tiles[i, 0]), int(rec.tiles[j, 1] - rec.tiles[i, 1]))
    return Status.PERIODIC if shift == (0, 0) else Status.LINEAR_ESCAPE


def energy(rec: TrajectoryRecord) -> tuple[float, float]:
    """``(tau, dispersion)`` of a traced record."""
    return rec.tau, rec.tau_dispersion


def start_from_chord(t: Tiling, tau: float, theta: float, max_tiles: int = 4000):
    """A starting point and direction for a trajectory with energy ``tau`` and
    angle parameter ``theta``: the middle of the first tile segment found by
    a breadth-first search from ``P0``."""
    from .folding import segment_in_tile
    from .tiling import ORIGIN

    seen = {ORIGIN}
    queue = deque([ORIGIN])
    while queue and len(seen) <= max_tiles:
        addr = queue.popleft()
        seg = segment_in_tile(t, addr, tau, theta)
        if seg is not None:
            a, b = seg
            d = b - a
            return 0.5 * (a + b), d / math.hypot(d[0], d[1]), addr
        for k in range(t.n_sides):
            nb = t.neighbor(addr, k)
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    raise ValueError(f"no tile segment for tau={tau}, theta={theta}")


def trace_chord(t: Tiling, tau: float, theta: float, max_steps: int = 100_000, **kw) -> TrajectoryRecord:
    p, d, addr = start_from_chord(t, tau, theta)
    return trace(t, p, d, max_steps, start_tile=addr, **kw)


def one_segment_violations(rec: TrajectoryRecord, tol: float = 1e-7) -> int:
    """Number of tiles visited by two different segments of the record."""
    n = len(rec)
    if n < 2:
        return 0
    segs = np.hstack([rec.points[:n - 1], rec.points[1:n]])
    keys = np.asarray(rec.tiles[1:n], dtype=np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    # every segment is compared with the first one seen in its tile
    ref = segs[first[inverse.ravel()]]
    return int(np.count_nonzero((np.abs(segs - ref) > tol).any(axis=1)))


def min_vertex_clearance(rec: TrajectoryRecord, indices=None) -> float:
    """Smallest distance from the given segments to the vertices of their tiles."""
    t = rec.tiling
    idx = range(1, len(rec)) if indices is None else indices
    best = math.inf
    pts = rec.points
    for i in idx:
        if i == 0:
            continue
        a, b = pts[i - 1], pts[i]
        ab = b - a
        L2 = float(ab @ ab)
        for v in t.tile_vertices(TileAddress(*(int(x) for x in rec.tiles[i]))):
            u = 0.0 if L2 == 0 else min(1.0, max(0.0, float((v - a) @ ab) / L2))
            best = min(best, math.dist(v, a + u * ab))
    return best


def perturb_and_compare(t: Tiling, rec: TrajectoryRecord, delta: float, rng=None) -> bool:
    """Whether a start moved by ``delta`` (same direction) still closes up
    with the same cyclic sequence of tiles."""
    if rec.status != Status.PERIODIC:
        raise ValueError("perturb_and_compare needs a periodic record")
    cyc = rec.cycle()
    clearance = min_vertex_clearance(rec, cyc)
    if delta >= 0.5 * clearance:
        raise ValueError(f"delta={delta} is not below half the vertex clearance {clearance:.3g}")
    words = rec.tile_addresses(cyc[0], cyc[-1] + 1)
    # restart from the middle of the first segment of the cycle
    i = cyc[0] + 1 if cyc[0] + 1 < len(rec) else cyc[0]
    a, b = rec.segment(i)
    mid = 0.5 * (a + b)
    d = rec.directions[i]
    if delta > 0:
        rng = np.random.default_rng() if rng is None else rng
        ang = rng.uniform(0, 2 * math.pi)
        mid = mid + delta * np.array([math.cos(ang), math.sin(ang)])
    tile = TileAddress(*(int(x) for x in rec.tiles[i]))
    new = trace(t, mid, d, max_steps=4 * rec.period + 8, start_tile=tile)
    if new.status != Status.PERIODIC or new.period != rec.period:
        return False
    other = new.tile_addresses(new.cycle_start, new.cycle_start + new.period)
    if set(other) != set(words):
        return False
    k = other.index(words[0])
    return other[k:] + other[:k] == words


@dataclass
class Foliation:
    theta: float
    leaves: list            # (tau, TrajectoryRecord)
    singular: list          # (tau, vertex point)


def parallel_foliation(t: Tiling, theta0: float, lo, hi, n_leaves: int = 16, max_steps: int = 2000) -> Foliation:
    """Leaves of the parallel foliation at angle ``theta0`` meeting the box ``[lo, hi]``.

    Regular leaves are sampled at ``n_leaves`` energies; singular leaves are
    the energies at which the folded chord runs through the image of a
    tiling vertex of the box.
    """
    from .folding import fold_to_disk, segment_in_tile

    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    addrs = t.addresses_in_box(lo, hi, margin=0)
    singular = []
    for v, inc in t.vertices_in_region(lo, hi):
        nu = fold_to_disk(t, inc[0][0], v)
        singular.append((math.sin(theta0 - math.atan2(nu[1], nu[0])), v))
    singular.sort(key=lambda e: e[0])
    taus = -1.0 + (np.arange(n_leaves) + 0.5) * 2.0 / n_leaves
    leaves = []
    for tau in taus:
        covered = set()
        for addr in addrs:
            if addr in covered:
                continue
            seg = segment_in_tile(t, addr, float(tau), theta0)
            if seg is None:
                continue
            a, b = seg
            d = b - a
            d = d / math.hypot(*d)
            try:
                rec = trace(t, 0.5 * (a + b), d, max_steps, start_tile=addr)
                back = trace(t, 0.5 * (a + b), -d, max_steps, start_tile=addr)
            except (OnEdge, OnVertex):
                continue
            covered.add(addr)
            for r in (rec, back):
                covered.update(r.tile_addresses())
            leaves.append((float(tau), rec))
    return Foliation(theta0, leaves, singular)
