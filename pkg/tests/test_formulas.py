import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aslab import formulas as F

GRID = np.round(np.arange(1, 34) * 0.03, 10)


def kleinian_params():
    return st.tuples(st.integers(1, 3), st.integers(0, 2), st.floats(0.001, 0.999)).map(
        lambda t: F.KleinianParams(t[0] + t[1] / 2 + 0.001 + t[2] * 2.0, t[0], min(3, t[0] + t[1]))
        if (t[0] + t[1]) <= 3 else F.KleinianParams(3.0, t[0], t[0]))


def julia_params():
    return st.tuples(st.integers(1, 5), st.floats(0.001, 0.999)).map(
        lambda t: F.JuliaParams(t[0] / (1 + t[0]) + t[1] * (2 - t[0] / (1 + t[0])) * 0.999, t[0]))


class TestParams:
    def test_kleinian_bound_enforced(self):
        with pytest.raises(F.ParameterError):
            F.KleinianParams(0.8, 1, 2)

    def test_rank_order_enforced(self):
        with pytest.raises(F.ParameterError):
            F.KleinianParams(1.9, 2, 1)

    @pytest.mark.parametrize("h,p", [(0.5, 1), (2.0, 1), (0.79, 4)])
    def test_julia_bounds_enforced(self, h, p):
        with pytest.raises(F.ParameterError):
            F.JuliaParams(h, p)

    def test_round_trip_dict(self):
        for P in (F.KleinianParams(1.7, 1, 2), F.JuliaParams(1.4, 4)):
            assert F.params_from_dict(F.params_to_dict(P)) == P


class TestKleinian:
    def test_large_delta_dims(self):
        d = F.kleinian_dims(F.KleinianParams(1.9, 1, 1))
        assert d["assouad_measure"] == pytest.approx(2.8)
        assert d["assouad_set"] == pytest.approx(1.9)

    def test_small_delta_dims(self):
        d = F.kleinian_dims(F.KleinianParams(0.6, 1, 1))
        assert d["assouad_set"] == 1
        assert d["lower_set"] == pytest.approx(0.6)
        assert d["lower_measure"] == pytest.approx(0.2)

    def test_degenerate_all_equal(self):
        d = F.kleinian_dims(F.KleinianParams(1.0, 1, 1))
        assert {d[k] for k in ("assouad_set", "lower_set", "assouad_measure", "lower_measure")} == {1.0}

    @pytest.mark.parametrize("delta,expected", [(0.6, 0.6), (1.7, 2.4), (1.0, 1.0)])
    def test_measure_box(self, delta, expected):
        assert F.kleinian_measure_box(F.KleinianParams(delta, 1, 1)) == pytest.approx(expected)

    def test_small_delta_set_values(self):
        sp = F.kleinian_set_spectrum(F.KleinianParams(0.6, 1, 1))
        assert np.allclose(sp([0.25, 1 / 3, 0.5, 0.75]), [0.6 + 0.4 / 3, 0.8, 1.0, 1.0], atol=1e-12)
        assert sp.phase_transition == 0.5

    def test_mixed_ranks_measure_constant(self):
        sp = F.kleinian_measure_spectrum(F.KleinianParams(1.7, 1, 2))
        assert sp.is_constant
        assert np.allclose(sp(GRID), 2.4)

    def test_theta_outside_interval(self):
        sp = F.kleinian_set_spectrum(F.KleinianParams(0.6, 1, 1))
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                sp(bad)


class TestJulia:
    def test_large_h_lower(self):
        sp = F.julia_set_spectrum(F.JuliaParams(1.4, 4), F.LOWER)
        assert sp(0.1) == pytest.approx(1.4 - 0.4 * 0.4 / 0.9, abs=1e-12)
        assert np.allclose(sp(GRID[GRID >= 0.2]), 1.0)

    def test_dims_bounds(self):
        d = F.julia_dims(F.JuliaParams(0.7, 2))
        assert d["assouad_set"] == 1.0 and d["lower_set"] == 0.7

    def test_phi_continuity(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            h, p = rng.uniform(0.6, 1.9), int(rng.integers(1, 6))
            r_j = rng.uniform(0.1, 1.0)
            r_j1 = r_j * rng.uniform(1e-4, 0.5)
            t = F.julia_phi_threshold(p, r_j, r_j1)
            left = F.julia_phi(h, p, t * (1 + 1e-13), r_j, r_j1)
            right = F.julia_phi(h, p, t * (1 - 1e-13), r_j, r_j1)
            assert abs(left - right) <= 1e-9 * abs(left)


class TestInvariants:
    @settings(max_examples=200, deadline=None)
    @given(st.one_of(kleinian_params(), julia_params()))
    def test_limits_and_ordering(self, P):
        sp, dm = F.spectra(P), F.dims(P)
        assert sp["set_assouad"](1 - 1e-9) == pytest.approx(dm["assouad_set"], abs=1e-6)
        assert sp["set_assouad"](1e-9) == pytest.approx(dm["box_set"], abs=1e-6)
        assert sp["measure_assouad"](1e-9) == pytest.approx(dm["box_measure"], abs=1e-6)
        v = {k: f(GRID) for k, f in sp.items()}
        assert np.all(v["measure_lower"] <= v["set_lower"] + 1e-12)
        assert np.all(v["set_lower"] <= v["set_assouad"] + 1e-12)
        assert np.all(v["set_assouad"] <= v["measure_assouad"] + 1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.one_of(kleinian_params(), julia_params()))
    def test_phase_transition_form_and_bound(self, P):
        sp, dm = F.spectra(P), F.dims(P)
        rho = 0.5 if isinstance(P, F.KleinianParams) else 1 / (1 + P.p_max)
        form = F.phase_transition_form(dm["box_set"], dm["assouad_set"], rho, GRID)
        assert np.max(np.abs(form - sp["set_assouad"](GRID))) < 1e-12
        lo, hi = F.general_spectrum_bounds(dm["box_set"], dm["assouad_set"], GRID)
        assert np.all(sp["set_assouad"](GRID) >= lo - 1e-12)
        assert np.all(sp["set_assouad"](GRID) <= hi + 1e-12)
        if not sp["set_assouad"].is_constant:
            assert rho > F.phase_transition_lower_bound(dm["box_set"], dm["assouad_set"])

    @settings(max_examples=50, deadline=None)
    @given(st.one_of(kleinian_params(), julia_params()))
    def test_continuity(self, P):
        t = np.linspace(1e-3, 1 - 1e-3, 1000)
        for prof in F.spectra(P).values():
            jumps = np.abs(np.diff(prof(t)))
            slope_bound = np.abs(np.gradient(prof(t), t)).max() * (t[1] - t[0]) * 1.01 + 1e-9
            assert jumps.max() <= slope_bound


class TestSimpleSets:
    def test_lattice(self):
        sp = F.lattice_set_spectrum(1)
        assert sp(0.3) == pytest.approx(1 / 1.4)
        assert sp(0.7) == 1.0

    def test_sequence(self):
        sp = F.sequence_set_spectrum(1.0)
        assert sp(0.25) == pytest.approx(2 / 3)


class TestDictionary:
    def test_non_entries(self):
        kle = [F.KleinianParams(1.7, 1, 2), F.KleinianParams(0.6, 1, 1)]
        jul = [F.JuliaParams(h, p) for p in (1, 2, 4) for h in np.linspace(p / (1 + p) + 0.01, 1.99, 20)]
        rep = F.sullivan_dictionary_report(kle, jul)
        assert rep.ok
        assert rep.realized("kleinian", "L<H<A")
        assert not rep.realized("julia", "L<H<A")

    def test_classification(self):
        assert F.classify_configuration(1, 1, 1) == "L=H=A"
        assert F.classify_configuration(0.5, 1, 2) == "L<H<A"
