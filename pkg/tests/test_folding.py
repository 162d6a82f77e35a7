import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiling_billiards.errors import TangentChord
from tiling_billiards.folding import (
    Chord,
    FoldIsometry,
    angle_in_tile,
    chord_of,
    fold_to_disk,
    folding_isometry,
    generator_rotations,
    phi,
)
from tiling_billiards.geom import TWO_PI, circular_distance
from tiling_billiards.tiling import Color, TileAddress, Tiling

from conftest import SHAPES, tri
from oracles import across, apply, fold_along

W, G = Color.WHITE, Color.GREY
names = st.sampled_from(sorted(SHAPES))
addresses = st.builds(TileAddress, st.integers(-6, 6), st.integers(-6, 6), st.sampled_from([W, G]))


def cdist(a, b):
    return circular_distance(a % TWO_PI, b % TWO_PI)


def test_base_tile_is_fixed(any_tiling):
    f = folding_isometry(any_tiling, TileAddress(0, 0, W))
    assert f.allclose(FoldIsometry.identity(), atol=1e-15)


def test_grey_mate_folds_across_glue_side(any_tiling):
    t = any_tiling
    e = t.base.edge(t.glue_side)
    assert folding_isometry(t, TileAddress(0, 0, G)).allclose(FoldIsometry.reflection(e.p, e.q), atol=1e-12)


def _oracle_path(P0, goal, first):
    """Shortest edge path (oracle tiles only) that crosses side ``first`` first
    and ends on the tile whose barycenter is ``goal``."""
    key = lambda P: tuple(np.round(P.mean(axis=0), 5))
    start = [first]
    frontier = [(start, fold_along(P0, start)[0])]
    seen = {key(P0), key(frontier[0][1])}
    for _ in range(40):
        nxt = []
        for sides, P in frontier:
            if np.allclose(P.mean(axis=0), goal, atol=1e-8):
                return sides
            for i in range(len(P)):
                Q = across(P, i)
                if key(Q) not in seen:
                    seen.add(key(Q))
                    nxt.append((sides + [i], Q))
        frontier = nxt
    raise AssertionError("target not reached")


@pytest.mark.parametrize("name", ["acute", "obtuse", "kite"])
def test_fold_is_path_independent(name):
    t = Tiling(SHAPES[name])
    target = TileAddress(2, 1, G)
    goal = t.tile_at(target).barycenter
    paths = {tuple(_oracle_path(t.base.vertices, goal, k)) for k in range(t.n_sides)}
    assert len(paths) == t.n_sides
    f = folding_isometry(t, target)
    verts = t.tile_vertices(target)
    for sides in paths:
        P, F = fold_along(t.base.vertices, sides)
        assert np.allclose(P, verts, atol=1e-9)
        for v in verts:
            assert np.allclose(apply(F, v), f(v), atol=1e-9)


@given(names, addresses)
def test_fold_images_lie_in_the_disk(name, addr):
    t = Tiling(SHAPES[name])
    img = np.array([fold_to_disk(t, addr, v) for v in t.tile_vertices(addr)])
    assert np.allclose(np.linalg.norm(img, axis=1), 1.0, atol=1e-9)
    bc = fold_to_disk(t, addr, t.tile_at(addr).barycenter)
    assert np.linalg.norm(bc) < 1.0


@given(names, addresses)
def test_neighbouring_folds_agree_on_shared_edge(name, addr):
    t = Tiling(SHAPES[name])
    f = folding_isometry(t, addr)
    for nb, e in t.neighbors(addr):
        g = folding_isometry(t, nb)
        for x in (e.p, e.q, 0.5 * (e.p + e.q)):
            assert np.allclose(f(x), g(x), atol=1e-9)
        assert f.reverses != g.reverses


def test_period_angles_of_triangles_match_closed_form():
    P = SHAPES["acute"]
    a, b, c = P.angles
    r1, r2 = generator_rotations(Tiling(P))
    assert cdist(r1, 2 * c) < 1e-12
    assert cdist(r2, 2 * a) < 1e-12


def test_period_angles_of_quads():
    P = SHAPES["kite"]
    al, be, ga, de = P.angles
    r1, r2 = generator_rotations(Tiling(P))
    # the rotations are -2*delta and -2*alpha, i.e. 2*beta and 2*gamma
    assert cdist(r1, -2 * de) < 1e-12 and cdist(r1, 2 * be) < 1e-12
    assert cdist(r2, -2 * al) < 1e-12 and cdist(r2, 2 * ga) < 1e-12


def test_phi_is_the_opposite_of_the_period_angle(any_tiling):
    r1, r2 = generator_rotations(any_tiling)
    assert cdist(phi(any_tiling, (1, 0)), -r1) < 1e-12
    assert cdist(phi(any_tiling, (0, 1)), -r2) < 1e-12
    assert phi(any_tiling, (0, 0)) == 0.0


@given(names, st.integers(-30, 30), st.integers(-30, 30), st.integers(-30, 30), st.integers(-30, 30))
def test_phi_is_additive(name, m1, n1, m2, n2):
    t = Tiling(SHAPES[name])
    lhs = phi(t, (m1 + m2, n1 + n2))
    assert cdist(lhs, phi(t, (m1, n1)) + phi(t, (m2, n2))) < 1e-9


@given(st.floats(0, TWO_PI, exclude_max=True))
def test_angle_in_base_tile_is_identity(theta):
    t = Tiling(SHAPES["kite"])
    assert cdist(angle_in_tile(t, theta, TileAddress(0, 0, W)), theta) < 1e-12


def test_equilateral_translate_shift():
    t = Tiling(tri(60, 60, 60))
    for theta in (0.0, 1.0, 4.0):
        got = angle_in_tile(t, theta, TileAddress(1, 0, W))
        # the translate by v1 sees directions shifted by phi(v1) = -2*gamma
        assert cdist(got, theta - 2 * math.pi / 3) < 1e-12


@given(names, addresses, st.integers(-5, 5), st.integers(-5, 5), st.floats(0, TWO_PI), st.floats(0, TWO_PI))
def test_quasi_periodicity(name, addr, dm, dn, th1, th2):
    t = Tiling(SHAPES[name])
    other = addr.shifted(dm, dn)
    d1 = angle_in_tile(t, th1, other) - angle_in_tile(t, th1, addr)
    d2 = angle_in_tile(t, th2, other) - angle_in_tile(t, th2, addr)
    # same colour: the difference only depends on the lattice vector
    assert cdist(d1, d2) < 1e-9
    # white tiles shift by phi(v); grey tiles fold with reversed orientation and shift by -phi(v)
    sign = 1 if addr[2] == W else -1
    assert cdist(d1, sign * phi(t, (dm, dn))) < 1e-9
    # opposite colours: the sum does not depend on theta, nor on a common translation
    mate = TileAddress(other[0], other[1], Color(1 - addr[2]))
    s1 = angle_in_tile(t, th1, mate) + angle_in_tile(t, th1, addr)
    s2 = angle_in_tile(t, th2, mate) + angle_in_tile(t, th2, addr)
    assert cdist(s1, s2) < 1e-9
    s3 = angle_in_tile(t, th1, mate.shifted(3, -2)) + angle_in_tile(t, th1, addr.shifted(3, -2))
    assert cdist(s1, s3) < 1e-9


def test_chord_examples():
    back, front = chord_of(Chord(0.0, 0.0))
    assert np.allclose(back, [-1, 0]) and np.allclose(front, [1, 0])
    back, front = chord_of(Chord(0.5, math.pi / 2))
    # center on the left of an upward chord: the chord is the line x = 0.5
    assert np.allclose([back[0], front[0]], [0.5, 0.5])
    assert front[1] > back[1]
    with pytest.raises(TangentChord):
        chord_of(Chord(1.0, 0.3))


def test_chord_endpoints_on_circle(rng):
    taus = rng.uniform(-0.999, 0.999, 10_000)
    thetas = rng.uniform(0, TWO_PI, 10_000)
    worst = 0.0
    for tau, th in zip(taus, thetas):
        for e in chord_of(Chord(tau, th)):
            worst = max(worst, abs(math.hypot(*e) - 1.0))
    assert worst <= 1e-12


@given(st.floats(-0.99, 0.99), st.floats(0, TWO_PI))
def test_chord_signed_distance_and_direction(tau, theta):
    back, front = chord_of(Chord(tau, theta))
    d = front - back
    d = d / np.linalg.norm(d)
    assert np.allclose(d, [math.cos(theta), math.sin(theta)], atol=1e-9)
    # distance to the origin, positive when the origin is on the left
    w = -back
    assert d[0] * w[1] - d[1] * w[0] == pytest.approx(tau, abs=1e-9)
