import numpy as np
import pytest

from aslab import formulas as F
from aslab.generators import clouds as C
from aslab.generators import julia as J
from aslab.generators import kleinian as K
from aslab.generators import oracles as O
from aslab.generators.sequences import decreasing_sequence, inverted_lattice


class TestClouds:
    def test_validation(self):
        with pytest.raises(C.CloudError):
            C.PointCloud(np.zeros((0, 2)), 1.0)
        with pytest.raises(C.CloudError):
            C.PointCloud(np.array([[np.nan, 0.0]]), 1.0)
        with pytest.raises(C.CloudError):
            C.PointCloud(np.zeros((3, 2)), 0.0)

    def test_points_are_read_only(self):
        c = C.PointCloud(np.zeros((3, 2)), 1.0)
        with pytest.raises(ValueError):
            c.points[0, 0] = 1.0

    @pytest.mark.parametrize("ext", ["csv", "aslb"])
    def test_file_round_trip(self, tmp_path, ext):
        rng = np.random.default_rng(0)
        c = C.PointCloud(rng.random((50, 2)), 1e-3, "random", special=[[0.5, 0.5]])
        path = tmp_path / f"cloud.{ext}"
        (C.write_csv if ext == "csv" else C.write_binary)(c, path)
        back = C.read_cloud(path)
        assert np.array_equal(back.points, c.points)
        assert back.eps_min == c.eps_min
        if ext == "aslb":
            assert np.array_equal(back.special, c.special)

    def test_csv_is_deterministic(self):
        c = C.PointCloud(np.linspace(0, 1, 11)[:, None], 0.1, "grid")
        assert C.cloud_to_csv_bytes(c) == C.cloud_to_csv_bytes(c)

    def test_thin_respects_radius(self):
        pts = np.linspace(0, 1, 1001)[:, None]
        kept = C.thin(pts, 0.05)
        assert np.min(np.diff(np.sort(kept[:, 0]))) >= 0.05 - 1e-12

    def test_transformed_scales_resolution(self):
        c = C.PointCloud(np.linspace(0, 1, 11)[:, None], 0.1)
        t = c.transformed(scale=2.0, shift=1.0)
        assert t.eps_min == pytest.approx(0.2)
        assert t.diameter == pytest.approx(2.0)


class TestSequences:
    def test_decreasing_sequence(self):
        s = decreasing_sequence(2, 100)
        assert len(s) == 101
        assert s.points[:, 0].max() == 1.0 and s.points[:, 0].min() == 0.0
        assert s.eps_min == pytest.approx(100 ** -0.5 - 101 ** -0.5)

    def test_lattice_plane(self):
        lat = inverted_lattice(2, 5)
        r = np.linalg.norm(lat.points, axis=1)
        assert r.max() == pytest.approx(1.0)
        assert np.any(r == 0)

    def test_bad_arguments(self):
        with pytest.raises(C.CloudError):
            inverted_lattice(3, 10)
        with pytest.raises(C.CloudError):
            decreasing_sequence(-1, 10)


class TestKleinian:
    def test_apollonian_small(self):
        c = K.apollonian(eps_proj=2e-3, depth=60)
        assert len(c) > 100
        assert c.d == 2
        assert len(c.special) > 0

    def test_point_cap_keeps_partial_cloud(self):
        with pytest.raises(K.OrbitExplosion) as info:
            K.apollonian(eps_proj=2e-3, depth=60, cap=200)
        assert info.value.partial is not None and len(info.value.partial) > 0

    def test_point_cap_before_boundary(self):
        with pytest.raises(K.OrbitExplosion):
            K.apollonian(eps_proj=1e-4, depth=200, cap=500)


class TestJulia:
    def test_cauliflower_points_near_julia_set(self):
        T = J.get_map("cauliflower")
        c = J.julia_inverse_iteration("cauliflower", 40, seeds=8, cell=2e-3)
        z = c.points[:, 0] + 1j * c.points[:, 1]
        # the Julia set is backward and forward invariant: images stay bounded
        w = z.copy()
        for _ in range(20):
            w = T(w)
        assert np.all(np.abs(w) < 2.0)

    def test_random_method_reproducible(self):
        a = J.julia_inverse_iteration("petal2", 200, seeds=4, method="random", cusp_steps=50, seed=3)
        b = J.julia_inverse_iteration("petal2", 200, seeds=4, method="random", cusp_steps=50, seed=3)
        assert np.array_equal(a.points, b.points)

    def test_unknown_preset(self):
        with pytest.raises(C.CloudError):
            J.get_map("mandelbrot")


class TestKleinianOracle:
    def test_power_law_without_horoballs(self):
        o = O.synthetic_kleinian_measure(0.6, 1, 1, itineraries=[O.no_horoballs()])
        u = np.array([100.0, 1000.0])
        assert np.allclose(o.log_mass(o.tags[0], u), -0.6 * u)

    def test_parabolic_center_matches_global_measure(self):
        o = O.synthetic_kleinian_measure(1.7, 1, 2, itineraries=[O.parabolic_center(2)])
        u = np.array([100.0, 500.0])
        assert np.allclose(o.log_mass(o.tags[0], u), np.minimum(0, F.sv_log_global_measure(1.7, 2, u, u)))

    def test_monotone(self):
        o = O.synthetic_kleinian_measure(0.6, 1, 1)
        u = np.geomspace(50, 2e4, 500)
        for t in o.tags[::25]:
            assert np.all(np.diff(o.log_mass(t, u)) <= 1e-12)

    def test_matrix_matches_scalar(self):
        o = O.synthetic_kleinian_measure(2.2, 2, 3)
        u = np.array([60.0, 300.0, 5000.0])
        m = o.log_mass_matrix(o.tags[:30], u)
        for i, t in enumerate(o.tags[:30]):
            assert np.allclose(m[i], o.log_mass(t, u))

    def test_invalid(self):
        with pytest.raises(F.ParameterError):
            O.synthetic_kleinian_measure(0.8, 1, 2)
        with pytest.raises(O.OracleError):
            O.synthetic_kleinian_measure(0.6, 1, 1, itineraries=[O.parabolic_center(3)])
        o = O.synthetic_kleinian_measure(0.6, 1, 1)
        with pytest.raises(O.OracleError):
            o.mass(o.tags[0], 0.0)


class TestJuliaOracle:
    def test_geometric_zoom_phi_bounds(self):
        z = O.geometric_zoom(0.5, 2, 1000.0)
        u = np.linspace(10, 900, 200)
        lp = z.log_phi(1.4, u)
        assert np.all(np.isfinite(lp))
        # h > 1: phi <= 1, dipping at most (h-1) p/(1+p) times a window length
        assert np.all(lp <= 1e-12)
        assert np.all(lp >= -0.4 * 2 / 3 * np.log(2) * 1.01 - 1e-12)

    def test_matrix_matches_scalar(self):
        o = O.synthetic_julia_measure(0.7, 2)
        u = np.array([60.0, 300.0, 5000.0])
        m = o.log_mass_matrix(o.tags, u)
        for i, t in enumerate(o.tags):
            assert np.allclose(m[i], o.log_mass(t, u), equal_nan=True)


class TestEmpiricalMeasure:
    def test_uniform_segment(self):
        c = C.PointCloud(np.linspace(0, 1, 10001)[:, None], 1e-4)
        o = O.empirical_measure(c)
        u = -np.log(0.01)
        assert o.log_mass(5000, u) == pytest.approx(np.log(0.02), abs=0.01)
