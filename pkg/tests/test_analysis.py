import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from shapely.geometry import Polygon

from tiling_billiards.analysis import (
    EXIT,
    SweepConfig,
    enclosed_graph,
    enclosed_region,
    escape_profile,
    flower_check,
    gasket_depth,
    gasket_depths,
    gasket_grid,
    parameter_sweep,
    permute_grid,
    random_shape,
    rauzy_step,
    survival_fraction,
    tree_check,
    triangle_depth,
    worker_count,
)
from tiling_billiards.billiard import Status, trace_chord
from tiling_billiards.errors import NoSingularLeaf, SelfIntersecting
from tiling_billiards.tiling import TileAddress, Tiling

from conftest import SHAPES
from oracles import point_in_polygon, rauzy_reference

simplex = st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: tuple(c / sum(v) for c in v))


def test_rauzy_examples():
    assert rauzy_step((1 / 3, 1 / 3, 1 / 3)) is EXIT
    assert np.allclose(rauzy_step((0.6, 0.3, 0.1)), (1 / 3, 1 / 2, 1 / 6), atol=1e-15)
    assert rauzy_step((0.5, 0.25, 0.25)) is EXIT


@given(simplex)
def test_rauzy_step_matches_reference(x):
    got, want = rauzy_step(x), rauzy_reference(x)
    if want is None:
        assert got is EXIT
    else:
        assert np.allclose(got, want, atol=1e-12)
        assert abs(sum(got) - 1) <= 1e-12 and min(got) >= -1e-12


def test_gasket_depth_examples():
    assert gasket_depth((1 / 3, 1 / 3, 1 / 3), 30) == 0
    assert gasket_depth((0.51, 0.25, 0.24), 10) >= 1


@given(simplex, st.integers(0, 40))
def test_gasket_depth_permutation_equivariant(x, N):
    d = gasket_depth(x, N)
    assert 0 <= d <= N
    for p in permutations(range(3)):
        assert gasket_depth(tuple(x[i] for i in p), N) == d


def test_vectorised_depth_matches_scalar(rng):
    pts = rng.dirichlet(np.ones(3), 2000)
    got = gasket_depths(pts, 30)
    assert list(got) == [gasket_depth(tuple(p), 30) for p in pts]


def test_gasket_grid_symmetry():
    g = gasket_grid(129, 30)
    for p in permutations(range(3)):
        assert np.array_equal(permute_grid(g, p), g)
    r, c = np.mgrid[0:129, 0:129]
    assert ((g == -1) == (r + c > 128)).all()


def test_simplex_survival_below_one_percent():
    # the naive oracle gives 0.01212 on these samples as well
    assert survival_fraction(100_000, 30, seed=0) < 0.01


def test_triangle_survival_below_one_percent():
    assert survival_fraction(100_000, 30, seed=0, triangles=True) < 0.01


def test_triangle_depth():
    assert triangle_depth((math.pi / 3,) * 3, 30) == 0
    assert triangle_depth((2.0, 0.6, math.pi - 2.6), 30) == 0  # obtuse


def _tile_hexagon(t, addr, margin=0.05):
    """Hexagon around a triangle tile: the tile offset outward with bevelled corners."""
    ring = Polygon(t.tile_vertices(addr)).buffer(margin, join_style="bevel").exterior
    return np.array(ring.coords[:-1])


def test_synthetic_hexagon_around_one_tile():
    t = Tiling(SHAPES["acute"])
    g = enclosed_graph(t, _tile_hexagon(t, TileAddress(0, 0, 0)))
    assert len(g.vertices) == 3 and len(g.edges) == 3
    assert g.tiles == [TileAddress(0, 0, 0)]
    res = tree_check(g)
    assert res == {"is_tree": False, "enclosed_tiles": 1, "vertices": 3, "edges": 3}


def test_self_intersecting_polyline():
    t = Tiling(SHAPES["acute"])
    with pytest.raises(SelfIntersecting):
        enclosed_graph(t, np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float))


# orbits found with the naive oracle, each encircling one tiling vertex
@pytest.mark.parametrize("name,tau,theta,period", [
    ("obtuse", 0.6, 0.1, 6), ("acute", 0.05, 0.9, 6), ("kite", 0.2, 4.1, 4),
])
def test_orbit_around_one_vertex(name, tau, theta, period):
    t = Tiling(SHAPES[name])
    rec = trace_chord(t, tau, theta, 10_000)
    assert rec.status == Status.PERIODIC and rec.period == period
    poly = rec.closed_polyline()
    g = enclosed_region(rec)
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    inside = [v for v, _ in t.vertices_in_region(lo, hi) if point_in_polygon(poly, v)]
    assert len(inside) == 1
    assert len(g.vertices) == 1 and np.allclose(g.vertices[0], inside[0])
    assert g.edges == [] and g.tiles == []
    assert tree_check(rec)["is_tree"]


@pytest.mark.parametrize("kind", ["triangle", "quad"])
def test_periodic_orbits_enclose_trees(kind):
    rng = np.random.default_rng(11 if kind == "triangle" else 12)
    checked = 0
    while checked < 25:
        _, poly = random_shape(rng, kind, 0.2)
        t = Tiling(poly)
        rec = trace_chord(t, rng.uniform(-0.8, 0.8), rng.uniform(0, 2 * math.pi), 20_000)
        if rec.status != Status.PERIODIC:
            continue
        res = tree_check(rec)
        assert res["is_tree"] == (res["enclosed_tiles"] == 0)
        assert res["is_tree"]
        checked += 1


@pytest.mark.parametrize("name,theta,vertex", [("acute", 0.3, 1), ("obtuse", 0.3, 2), ("kite", 1.0, 1)])
def test_flower_with_two_petals(name, theta, vertex):
    t = Tiling(SHAPES[name])
    rep = flower_check(t, t.base.vertices[vertex], theta)
    assert rep["several_petals"] and rep["all_hold"]


def test_lone_petal_is_reported():
    t = Tiling(SHAPES["acute"])
    rep = flower_check(t, t.base.vertices[2], 2.0)
    assert len(rep["petals"]) == 1
    assert set(rep) == {"vertex", "theta", "petals", "open_leaves", "several_petals", "all_hold"}


def test_flower_errors():
    t = Tiling(SHAPES["equilateral"])
    with pytest.raises(NoSingularLeaf):
        flower_check(t, t.base.vertices[0], 0.3)
    with pytest.raises(NoSingularLeaf):
        flower_check(t, t.base.barycenter, 0.3)


def test_escape_profile_linear():
    t = Tiling(SHAPES["obtuse"])
    rec = trace_chord(t, 0.05, 0.1, 100_000, stop_on_recurrence=False)
    prof = escape_profile(rec)
    assert 0.95 <= prof["growth_exponent"] <= 1.05
    assert prof["residual"] < 0.05
    drift = trace_chord(t, 0.05, 0.1, 1000).drift
    assert abs(np.dot(prof["direction"], drift / np.linalg.norm(drift))) > 0.999


def test_sweep_classifies_everything_and_is_deterministic():
    cfg = SweepConfig(kind="mixed", shapes=6, starts=3, max_steps=20_000, seed=5)
    a = parameter_sweep(cfg, workers=1)
    b = parameter_sweep(cfg, workers=3)
    assert a == b
    assert a["totals"]["periodic"] + a["totals"]["linear_escape"] == 18


def test_worker_count(monkeypatch):
    monkeypatch.setenv("TILING_BILLIARDS_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("TILING_BILLIARDS_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("TILING_BILLIARDS_THREADS", "x")
    with pytest.raises(ValueError):
        worker_count()
