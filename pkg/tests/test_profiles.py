import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trpgate.profiles import (
    DEFAULT_MIN_TAU0,
    ExperimentalParams,
    Regime,
    SweepProfile,
    default_tau0,
    energy_gap,
    eta_from_experiment,
    eta_from_theory,
    frequency_schedules,
    inversion_time_quartic,
    lab_frame_field,
    phase,
    phase_rate,
    resonance_times,
    rotating_frame_field,
    sweep_bandwidth,
    translate,
    twist_from_eta,
    twist_from_experiment,
)

FIG5 = dict(A=50000.0, delta=24.39, omega1=393.0)

orders = st.integers(min_value=2, max_value=6)
# Keeps every resonance within |tau| <= 100.
etas = st.floats(min_value=1e-4, max_value=10.0).flatmap(
    lambda m: st.sampled_from([m, -m]))


def profile(n=4, b=1.0, a=1.0, B=0.0, tau0=None):
    return SweepProfile(n=n, b=b, a=a, B=B, tau0=tau0)


class TestPhase:
    def test_vanishes_at_origin(self):
        assert phase(profile(B=3.7), 0.0) == 0.0

    def test_quartic_unit_time(self):
        assert phase(profile(n=4, B=2.0), 1.0) == 1.0

    def test_cubic(self):
        assert phase(profile(n=3, B=3.0), 2.0) == 16.0

    def test_rate_is_derivative(self):
        p = profile(n=5, B=0.3)
        t, h = 1.3, 1e-6
        numeric = (phase(p, t + h) - phase(p, t - h)) / (2 * h)
        assert numeric == pytest.approx(phase_rate(p, t), rel=1e-8)


class TestFields:
    def test_lab_field_at_origin(self):
        assert np.allclose(lab_frame_field(profile(b=2.0, B=1.0), 0.0), [2.0, 0.0, 0.0])

    def test_lab_field_twistless(self):
        p = profile(b=1.5, a=0.7, B=0.0)
        assert np.allclose(lab_frame_field(p, 3.0), [1.5, 0.0, 2.1])

    @given(t=st.floats(-50, 50), B=st.floats(-1, 1))
    def test_lab_field_magnitude(self, t, B):
        p = profile(b=1.3, a=0.4, B=B)
        F = lab_frame_field(p, t)
        assert np.dot(F, F) == pytest.approx(1.3**2 + (0.4 * t) ** 2, rel=1e-12)

    def test_rotating_field_at_origin(self):
        assert np.allclose(rotating_frame_field(profile(b=2.0, B=1.0), 0.0), [2.0, 0.0])

    def test_rotating_field_quartic_example(self):
        b = 2.0
        p = SweepProfile.from_dimensionless(4, 5.0, 4.6e-4, b=b)
        z = rotating_frame_field(p, p.to_time(10.0))[1]
        assert z == pytest.approx(9.54 * b, rel=1e-12)

    def test_rotating_field_vanishes_at_resonances(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 4.6e-4)
        for tau in p.resonances().times:
            assert abs(rotating_frame_field(p, p.to_time(tau))[1]) < 1e-12

    def test_rotating_field_is_lab_field_in_twisting_frame(self):
        # Field seen from a frame turning with the transverse component:
        # z picks up -phi'/2, x is the full transverse magnitude.
        p = SweepProfile.from_dimensionless(3, 2.0, 0.05)
        t = p.to_time(np.linspace(-20, 20, 7))
        lab = lab_frame_field(p, t)
        rot = rotating_frame_field(p, t)
        assert np.allclose(rot[:, 0], np.hypot(lab[:, 0], lab[:, 1]))
        assert np.allclose(rot[:, 1], lab[:, 2] - 0.5 * phase_rate(p, t))


class TestEnergyGap:
    def test_origin(self):
        p = profile(b=1.7, B=0.2)
        assert energy_gap(p, 0.0) == pytest.approx(2 * 1.7)

    def test_twistless(self):
        p = profile(b=1.2, a=0.5)
        assert energy_gap(p, 4.0) == pytest.approx(2 * math.hypot(1.2, 2.0))

    def test_outer_resonance_quartic(self):
        b = 3.0
        p = SweepProfile.from_dimensionless(4, 5.0, 1.6e-3, b=b)
        assert energy_gap(p, p.to_time(25.0)) == pytest.approx(2 * b, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(n=orders, eta=etas)
    def test_minima_only_at_resonances(self, n, eta):
        p = SweepProfile.from_dimensionless(n, 1.0, eta)
        lo, hi = p.window()
        tau = np.linspace(lo, hi, 200_001)
        gap = energy_gap(p, p.to_time(tau))
        interior = (gap[1:-1] <= gap[:-2]) & (gap[1:-1] <= gap[2:])
        minima = tau[1:-1][interior & (gap[1:-1] < 2 * p.b * (1 + 1e-9))]
        res = np.array(p.resonances().times)
        spacing = tau[1] - tau[0]
        for m in minima:
            assert np.min(np.abs(res - m)) <= 2 * spacing


TABLE_1 = {
    (True, 1): 3,
    (True, -1): 1,
    (False, 1): 2,
    (False, -1): 2,
}


class TestResonances:
    def test_quartic_positive(self):
        rs = resonance_times(4, 4.6e-4)
        assert rs.times == pytest.approx((-46.63, 0.0, 46.63), abs=5e-3)
        assert rs.regime is Regime.POSITIVE_EVEN

    def test_quartic_negative(self):
        rs = resonance_times(4, -4.6e-4)
        assert rs.times == (0.0,)
        assert rs.regime is Regime.NEGATIVE_EVEN

    def test_quartic_destructive_point(self):
        assert resonance_times(4, 1.6e-3).times == pytest.approx((-25.0, 0.0, 25.0), rel=1e-12)

    @pytest.mark.parametrize("eta", [-2.0, 0.0, 0.3, 1e-3])
    def test_quadratic(self, eta):
        rs = resonance_times(2, eta)
        assert rs.times == (0.0,)
        assert rs.regime is Regime.QUADRATIC

    def test_quadratic_degenerate(self):
        rs = resonance_times(2, 1.0)
        assert rs.degenerate
        assert rs.times == (0.0,)

    def test_cubic(self):
        rs = resonance_times(3, 0.01)
        assert rs.times == pytest.approx((0.0, 100.0), rel=1e-14)
        tau = rs.times[1]
        assert abs(tau - 0.01 * tau**2) < 1e-12

    def test_twistless(self):
        rs = resonance_times(5, 0.0)
        assert rs.times == (0.0,)
        assert rs.regime is Regime.TWISTLESS

    def test_rejects_low_order(self):
        with pytest.raises(ValueError):
            resonance_times(1, 0.1)

    @given(n=orders, eta=etas)
    def test_roots_satisfy_crossing_condition(self, n, eta):
        for tau in resonance_times(n, eta).times:
            assert abs(tau - eta * tau ** (n - 1)) <= 1e-12 * max(1.0, abs(tau))

    @given(n=st.integers(3, 6), eta=etas)
    def test_cardinality_matches_regime_table(self, n, eta):
        rs = resonance_times(n, eta)
        assert len(rs) == TABLE_1[(n % 2 == 0, 1 if eta > 0 else -1)]
        assert 0.0 in rs.times
        assert list(rs.times) == sorted(rs.times)

    @given(n=orders, eta=etas)
    def test_default_window_holds_resonances(self, n, eta):
        tau0 = default_tau0(n, eta)
        reach = max(abs(t) for t in resonance_times(n, eta).times)
        assert tau0 >= DEFAULT_MIN_TAU0
        assert tau0 == max(DEFAULT_MIN_TAU0, 6 * reach)


class TestProfile:
    def test_window_minimum(self):
        with pytest.raises(ValueError):
            profile(tau0=19.0)
        assert profile(tau0=20.0).window() == (-10.0, 10.0)

    def test_null_sweep_allowed(self):
        assert profile(tau0=0.0).duration == 0.0

    @pytest.mark.parametrize("kw", [dict(b=0.0), dict(a=-1.0), dict(n=0), dict(B=math.inf)])
    def test_rejects_bad_fields(self, kw):
        with pytest.raises(ValueError):
            profile(**kw)

    def test_default_window_follows_resonances(self):
        assert SweepProfile.from_dimensionless(4, 5.0, 4.6e-4).tau0 == pytest.approx(6 / math.sqrt(4.6e-4))
        assert SweepProfile.from_dimensionless(4, 5.0, 4.0e-3).tau0 == 120.0

    def test_dimensionless_values_kept_exact(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 1.6e-3)
        assert (p.lam, p.eta, p.tau0) == (5.0, 1.6e-3, 150.0)

    def test_time_conversion(self):
        p = profile(b=2.0, a=8.0)
        assert p.to_tau(p.to_time(3.5)) == pytest.approx(3.5)
        assert p.to_time(1.0) == 0.25

    def test_bandwidth_quartic(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 4.0e-3, b=2.0)
        # |tau - eta tau^3| at the window edge tau = 60.
        assert sweep_bandwidth(p) == pytest.approx(2.0 * (4e-3 * 60**3 - 60))

    def test_bandwidth_interior_extremum(self):
        p = SweepProfile.from_dimensionless(4, 1.0, -1e-6, tau0=120)
        tau = np.linspace(-60, 60, 100_001)
        z = rotating_frame_field(p, p.to_time(tau))[:, 1]
        assert sweep_bandwidth(p) == pytest.approx(np.max(np.abs(z)), rel=1e-9)
        p = SweepProfile.from_dimensionless(3, 1.0, 0.03)
        z = rotating_frame_field(p, p.to_time(np.linspace(*p.window(), 100_001)))[:, 1]
        assert sweep_bandwidth(p) == pytest.approx(np.max(np.abs(z)), rel=1e-9)


class TestTheoryTranslation:
    def test_unit_ratios(self):
        assert eta_from_theory(4, 1.0, 1.0, 0.37).eta == 0.37
        assert eta_from_theory(3, 1.0, 1.0, -0.2).eta == -0.2

    def test_quartic_example(self):
        d = eta_from_theory(4, 2.0, 1.0, 8.0)
        assert d.eta == 1.0
        assert d.lam == 2.0

    def test_quadratic(self):
        assert eta_from_theory(2, 4.0, 3.0, 2.0).eta == 0.5

    @given(n=orders, a=st.floats(1e-2, 1e2), b=st.floats(1e-2, 1e2), eta=st.floats(-10, 10))
    def test_round_trip(self, n, a, b, eta):
        B = twist_from_eta(n, a, b, eta)
        assert eta_from_theory(n, a, b, B).eta == pytest.approx(eta, rel=1e-12, abs=1e-300)


class TestExperimentalTranslation:
    def test_zero_twist(self):
        assert eta_from_experiment(3, ExperimentalParams(**FIG5, B_exp=0.0)) == 0.0

    def test_cubic_reference_value(self):
        exp = ExperimentalParams(**FIG5, B_exp=1.0e6)
        exact = Fraction(3) * 10**6 * Fraction("24.39") * 393 / (4 * Fraction(50000) ** 2)
        assert eta_from_experiment(3, exp) == pytest.approx(float(exact), rel=1e-14)
        assert eta_from_experiment(3, exp) == pytest.approx(2.876, abs=5e-4)

    def test_quartic_reference_value(self):
        exp = ExperimentalParams(**FIG5, B_exp=3.0e7)
        exact = Fraction(3 * 10**7) * Fraction("24.39") * 393**2 / (2 * Fraction(50000) ** 3)
        assert eta_from_experiment(4, exp) == pytest.approx(float(exact), rel=1e-14)

    @pytest.mark.parametrize("n", [3, 4])
    @given(eta=st.floats(-1, 1).filter(lambda x: abs(x) > 1e-12))
    def test_round_trip(self, n, eta):
        exp = ExperimentalParams(**FIG5)
        B = twist_from_experiment(n, exp, eta)
        assert eta_from_experiment(n, exp, B) == pytest.approx(eta, rel=1e-12)

    def test_quartic_target(self):
        exp = ExperimentalParams(**FIG5)
        B = twist_from_experiment(4, exp, 4.6e-4)
        assert eta_from_experiment(4, exp, B) == pytest.approx(4.6e-4, rel=1e-12)

    @pytest.mark.parametrize("n", [2, 5])
    def test_other_orders_rejected(self, n):
        with pytest.raises(ValueError):
            eta_from_experiment(n, ExperimentalParams(**FIG5))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ExperimentalParams(A=0.0, delta=1.0, omega1=1.0)

    def test_inversion_time(self):
        assert inversion_time_quartic(40000, 4000, 5.0) == pytest.approx(2e-3, rel=1e-15)
        assert inversion_time_quartic(50000, 4000, 5.0) == pytest.approx(2.5e-3, rel=1e-15)
        assert inversion_time_quartic(40000, 8000, 5.0) == pytest.approx(
            inversion_time_quartic(40000, 4000, 5.0) / 4, rel=1e-15)

    def test_translate_consistency(self):
        exp = ExperimentalParams(A=40000, delta=24.39, omega1=4000)
        table = translate(4, exp, 5.0, eta=4.0e-3)
        assert table["T4_s"] == pytest.approx(2e-3, rel=1e-15)
        assert table["a"] / table["b"] ** 2 == pytest.approx(5.0)
        assert eta_from_theory(4, table["a"], table["b"], table["B"]).eta == pytest.approx(4e-3)
        assert eta_from_experiment(4, exp, table["B_exp"]) == pytest.approx(4e-3)
        # The sweep from -A to +A at rate 2a takes T_4.
        assert table["A_hz"] / table["a"] == pytest.approx(table["T4_s"])

    def test_translate_angular_scales_time(self):
        hz = translate(4, ExperimentalParams(A=40000, delta=24.39, omega1=4000), 5.0, eta=4e-3)
        rad = translate(4, ExperimentalParams(A=40000, delta=24.39, omega1=4000, angular=True),
                        5.0, eta=4e-3)
        assert rad["T4_s"] == pytest.approx(hz["T4_s"] / (2 * math.pi))
        assert rad["B_exp"] == hz["B_exp"]

    def test_translate_from_twist(self):
        exp = ExperimentalParams(**FIG5, B_exp=1.0e6)
        table = translate(3, exp, 5.0)
        assert table["eta"] == eta_from_experiment(3, exp)
        assert "T4_s" not in table


class TestFrequencySchedules:
    def test_origin(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 4.6e-4)
        exp = ExperimentalParams(**FIG5, omega0=1e6)
        det, rf = frequency_schedules(p, exp, 0.0)
        assert det == rf == 2 * math.pi * 1e6

    def test_twistless(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 0.0)
        det, rf = frequency_schedules(p, ExperimentalParams(**FIG5), np.linspace(-3, 3, 11))
        assert np.array_equal(det, rf)

    def test_rf_meets_larmor_at_resonance(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 4.6e-4)
        exp = ExperimentalParams(**FIG5, omega0=500.0)
        t = p.to_time(np.array(p.resonances().times))
        _, rf = frequency_schedules(p, exp, t)
        assert np.allclose(rf, 2 * math.pi * 500.0, rtol=0, atol=1e-9)

    @given(n=orders, eta=etas)
    def test_rf_offset_tracks_rotating_field(self, n, eta):
        p = SweepProfile.from_dimensionless(n, 2.0, eta)
        exp = ExperimentalParams(**FIG5, omega0=10.0)
        t = p.to_time(np.linspace(*p.window(), 101))
        _, rf = frequency_schedules(p, exp, t)
        z = rotating_frame_field(p, t)[:, 1]
        assert np.allclose(rf - 2 * math.pi * 10.0, 2 * z, rtol=1e-12, atol=1e-9)
