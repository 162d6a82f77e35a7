"""SVG renderings of tiling patches, trajectories, foliations and depth maps.

Output is reproducible: the SVG id salt is fixed and no date is written.
Figures use y-up coordinates and the view box is fitted to the drawn
trajectory with a 5% margin.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from .billiard import Foliation, Status, TrajectoryRecord  # noqa: E402
from .tiling import Color, TileAddress, Tiling  # noqa: E402

MARGIN = 0.05
WIDTH_IN = 6.0
MAX_TILES = 4000

STATUS_COLORS = {
    Status.PERIODIC: "#1f77b4",
    Status.LINEAR_ESCAPE: "#d62728",
    Status.NON_LINEAR_CANDIDATE: "#9467bd",
    Status.UNRESOLVED: "#7f7f7f",
    Status.SINGULAR_HIT: "#ff7f0e",
}
TILE_FILL = {Color.WHITE: "#ffffff", Color.GREY: "#d9d9d9"}

RC = {
    "svg.hashsalt": "tiling-billiards",
    "svg.fonttype": "none",
    "path.simplify": False,
}


def fitted_box(points: np.ndarray, margin: float = MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of ``points`` grown by ``margin`` of its larger side on each end."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    pad = margin * span
    return lo - pad, hi + pad


def _figure(lo, hi):
    w, h = hi - lo
    fig = plt.figure(figsize=(WIDTH_IN, WIDTH_IN * h / w))
    ax = fig.add_axes((0.0, 0.0, 1.0, 1.0))
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_axis_off()
    return fig, ax


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def draw_tiles(ax, t: Tiling, lo, hi, fallback=()) -> None:
    """Tiles under the box, or only ``fallback`` when the box holds too many to draw."""
    box_area = float(np.prod(np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)))
    if box_area <= MAX_TILES * t.base.area:
        addrs = t.addresses_in_box(lo, hi, margin=0)[:MAX_TILES]
    else:
        addrs = list(fallback)[:MAX_TILES]
    if not addrs:
        return
    polys = [t.tile_vertices(a) for a in addrs]
    fills = [TILE_FILL[Color(a[2])] for a in addrs]
    ax.add_collection(PolyCollection(polys, facecolors=fills, edgecolors="#555555", linewidths=0.4))


def render_trajectory(rec: TrajectoryRecord, path, max_segments: int = 20000) -> None:
    """Tiling patch under the first ``max_segments`` segments of ``rec``,
    the trajectory drawn in the colour of its status."""
    with plt.rc_context(RC):
        pts = np.vstack([rec.start_point[None], rec.points[:max_segments]])
        lo, hi = fitted_box(pts)
        fig, ax = _figure(lo, hi)
        visited = dict.fromkeys(TileAddress(*map(int, a)) for a in rec.tiles[:max_segments])
        draw_tiles(ax, rec.tiling, lo, hi, visited)
        ax.plot(pts[:, 0], pts[:, 1], color=STATUS_COLORS[rec.status], linewidth=1.0)
        ax.plot(*rec.start_point, marker="o", markersize=3, color="black")
        if rec.singular_vertex is not None:
            ax.plot(*rec.singular_vertex, marker="x", markersize=5, color=STATUS_COLORS[Status.SINGULAR_HIT])
        _save(fig, path)


def render_foliation(fol: Foliation, t: Tiling, lo, hi, path) -> None:
    """Regular leaves clipped to the box, singular vertices marked."""
    with plt.rc_context(RC):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        span = float((hi - lo).max())
        fig, ax = _figure(lo - MARGIN * span, hi + MARGIN * span)
        draw_tiles(ax, t, lo, hi)
        segs = []
        for _, rec in fol.leaves:
            pts = np.vstack([rec.start_point[None], rec.points])
            segs.extend(zip(pts[:-1], pts[1:]))
        ax.add_collection(LineCollection(segs, colors="#1f77b4", linewidths=0.6))
        if fol.singular:
            v = np.array([p for _, p in fol.singular])
            ax.plot(v[:, 0], v[:, 1], linestyle="none", marker=".", markersize=3, color="#ff7f0e")
        _save(fig, path)


def render_enclosed(t: Tiling, polyline: np.ndarray, graph, path) -> None:
    """A closed orbit with the tiling vertices and edges it encloses."""
    with plt.rc_context(RC):
        ring = np.vstack([polyline, polyline[:1]])
        lo, hi = fitted_box(ring)
        fig, ax = _figure(lo, hi)
        draw_tiles(ax, t, lo, hi)
        ax.plot(ring[:, 0], ring[:, 1], color=STATUS_COLORS[Status.PERIODIC], linewidth=1.0)
        if len(graph.vertices):
            V = np.asarray(graph.vertices)
            ax.add_collection(LineCollection([(V[i], V[j]) for i, j in graph.edges], colors="#2ca02c", linewidths=1.5))
            ax.plot(V[:, 0], V[:, 1], linestyle="none", marker="o", markersize=3, color="#2ca02c")
        _save(fig, path)


def render_depth_map(depths: np.ndarray, max_depth: int, path) -> None:
    """Depth map on the simplex, pixels outside drawn blank."""
    with plt.rc_context(RC):
        d = np.ma.masked_less(np.asarray(depths, dtype=float), 0)
        fig = plt.figure(figsize=(WIDTH_IN, WIDTH_IN))
        ax = fig.add_axes((0.0, 0.0, 1.0, 1.0))
        ax.imshow(d, cmap="magma", vmin=0, vmax=max_depth, origin="upper", interpolation="nearest")
        ax.set_axis_off()
        _save(fig, path)


def render_sweep(sweep: dict, path) -> None:
    """Sampled ``(theta, tau)`` of every run, coloured by status."""
    with plt.rc_context(RC):
        fig = plt.figure(figsize=(WIDTH_IN, 0.6 * WIDTH_IN))
        ax = fig.add_axes((0.1, 0.12, 0.85, 0.82))
        for status in Status:
            runs = [r for c in sweep["cells"] for r in c["runs"] if r["status"] == status.value]
            if runs:
                ax.scatter([r["theta"] for r in runs], [r["tau"] for r in runs], s=4,
                           color=STATUS_COLORS[status], label=f"{status.value} ({len(runs)})")
        ax.set_xlim(0.0, 2 * np.pi)
        ax.set_ylim(-1.0, 1.0)
        ax.set_xlabel("theta")
        ax.set_ylabel("tau")
        ax.legend(loc="upper right", fontsize=7)
        _save(fig, path)
