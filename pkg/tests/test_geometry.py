import math

import numpy as np
import pytest

from aslab import geometry as G


def _ball_points(rng, n, r_max=0.95):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None] * rng.uniform(0, r_max, size=(n, 1))


def test_distance_from_origin_matches_integral():
    for r in (0.1, 0.5, 0.9):
        z = np.array([r, 0.0, 0.0])
        assert G.hyperbolic_distance(np.zeros(3), z) == pytest.approx(math.log((1 + r) / (1 - r)), rel=1e-12)
        assert G.radial_distance_integral(z) == pytest.approx(math.log((1 + r) / (1 - r)), rel=1e-6)


def test_cross_ratio_agrees_with_distance():
    rng = np.random.default_rng(0)
    P, Q = _ball_points(rng, 200), _ball_points(rng, 200)
    for p, q in zip(P, Q):
        assert G.cross_ratio_distance(p, q) == pytest.approx(G.hyperbolic_distance(p, q), abs=1e-6)


def test_cayley_is_an_isometry():
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = np.append(rng.normal(size=2), rng.uniform(0.1, 3))
        y = np.append(rng.normal(size=2), rng.uniform(0.1, 3))
        d_half = G.halfspace_distance(x, y)
        d_ball = G.hyperbolic_distance(G.cayley_transform(x), G.cayley_transform(y))
        assert d_ball == pytest.approx(d_half, rel=1e-9, abs=1e-9)
        assert np.allclose(G.inverse_cayley_transform(G.cayley_transform(x)), x)


def test_points_outside_ball_rejected():
    with pytest.raises(G.GeometryError):
        G.hyperbolic_distance(np.zeros(3), np.array([1.0, 0, 0]))
    with pytest.raises(G.GeometryError):
        G.halfspace_distance(np.array([0, 0, 1.0]), np.array([0, 0, -1.0]))


def test_ray_point_depth():
    z = np.array([0.0, 0.0, 1.0])
    x = G.ray_point(z, 3.0)
    assert G.hyperbolic_distance(np.zeros(3), x) == pytest.approx(3.0, rel=1e-10)


def test_horoball_validation():
    with pytest.raises(G.GeometryError):
        G.Horoball(np.array([1.0, 0, 0]), 2.5)
    with pytest.raises(G.GeometryError):
        G.Horoball(np.array([1.0, 0, 0]), 0.5, rank=0)


def test_escape_function_parabolic_basepoint():
    p = np.array([0.0, 0.0, 1.0])
    hb = G.Horoball(p, 0.5, rank=2)
    for T in (20.0, 40.0, 80.0):
        rho, k = G.escape_function(p, T, [hb])
        assert k == 2
        assert rho / T >= 0.9


def test_escape_function_outside():
    hb = G.Horoball(np.array([0.0, 0.0, 1.0]), 0.5)
    rho, k = G.escape_function(np.array([1.0, 0.0, 0.0]), 5.0, [hb])
    assert (rho, k) == (0.0, 0)


def test_horoball_containing_origin_rejected():
    hb = G.Horoball(np.array([0.0, 0.0, 1.0]), 1.5)
    with pytest.raises(G.GeometryError):
        G.escape_function(np.array([0.0, 0.0, 1.0]), 1.0, [hb])


def test_circle_lemma():
    for R in (0.1, 1.0, 10.0):
        assert G.circle_lemma_check(R).all_hold


def test_horoball_radius_sequence():
    f = G.MobiusMap(1, 1, 0, 1)
    seed = G.Horoball(G.sphere_point(0.0), 0.5)
    seq = G.horoball_radius_sequence(f, seed, 1000, n_values=[10, 100, 1000])
    assert seq.within(50)
    assert np.all(seq.tangency_error < 1e-6)


def test_mobius_basics():
    f = G.MobiusMap(1, 1, 0, 1)
    assert f.is_parabolic
    assert not G.MobiusMap(2, 0, 0, 0.5).is_parabolic
    g = f.power(5)
    assert g(0) == pytest.approx(5)
    assert (f @ f.inverse())(3 + 1j) == pytest.approx(3 + 1j)


def test_load_geometry_config_halfspace():
    cfg = G.load_geometry_config({
        "model": "halfspace",
        "horoballs": [{"basepoint": "inf", "height": 2.0, "rank": 2}, {"basepoint": [0.0, 0.0], "diameter": 0.5}],
        "generators": [[1, 0, 1, 0, 0, 0, 1, 0]],
    })
    assert len(cfg.horoballs) == 2 and cfg.horoballs[0].rank == 2
    assert len(cfg.generators) == 1


def test_load_geometry_config_overlap_rejected():
    with pytest.raises(G.GeometryError):
        G.load_geometry_config({"horoballs": [
            {"basepoint": [0, 0, 1.0], "diameter": 0.8},
            {"basepoint": [0, 0.6, 0.8], "diameter": 0.8},
        ]})
