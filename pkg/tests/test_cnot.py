import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trpgate import SweepProfile, landau_zener
from trpgate.cnot import (
    BASIS,
    GateMatrix,
    SelectivityWarning,
    TwoQubitSystem,
    column_phases,
    gate_fidelity,
    ideal_cnot,
    level_structure,
    simulate_cnot,
)
from trpgate.profiles import sweep_bandwidth

FT_PROFILE = SweepProfile.from_dimensionless(4, 5.0, 4.0e-3)


def selective_J(profile, margin):
    return margin * sweep_bandwidth(profile) / math.pi


def system_for(J):
    return TwoQubitSystem(omega_c=1e6, omega_t=1e5, J=J)


class TestSystem:
    @pytest.mark.parametrize("args", [(100, 500, 10), (500, 100, 40), (500, 100, 0), (500, 100, -1)])
    def test_rejects_bad_ordering(self, args):
        with pytest.raises(ValueError):
            TwoQubitSystem(*args)

    def test_example_levels(self):
        lv = level_structure(TwoQubitSystem(500, 100, 10))
        assert lv.energies[0] == pytest.approx(-300 + 5 * math.pi)
        assert lv.energies[0] == pytest.approx(-284.29, abs=0.01)
        assert lv.energies[3] - lv.energies[2] == pytest.approx(100 + 10 * math.pi)
        assert lv.omega_plus == pytest.approx(131.4, abs=0.05)

    @settings(max_examples=100)
    @given(wt=st.floats(1.0, 1e4), c_ratio=st.floats(1.001, 100.0), j_frac=st.floats(1e-3, 0.999))
    def test_transition_frequencies(self, wt, c_ratio, j_frac):
        sys = TwoQubitSystem(wt * c_ratio, wt, j_frac * wt / math.pi)
        lv = level_structure(sys)
        assert lv.omega_plus == pytest.approx(sys.omega_t + math.pi * sys.J, rel=1e-12)
        assert lv.omega_minus == pytest.approx(sys.omega_t - math.pi * sys.J, rel=1e-12)
        assert lv.omega_plus - lv.omega_minus == pytest.approx(2 * math.pi * sys.J, rel=1e-9)
        e = lv.energies
        scale = sys.omega_c * 1e-12
        assert abs((e[3] - e[2]) - lv.omega_plus) <= scale
        assert abs((e[1] - e[0]) - lv.omega_minus) <= scale

    def test_weak_coupling_limit(self):
        lv = level_structure(TwoQubitSystem(500, 100, 1e-12))
        assert lv.omega_plus == pytest.approx(100) and lv.omega_minus == pytest.approx(100)

    def test_levels_are_hamiltonian_eigenvalues(self):
        sys = TwoQubitSystem(700, 90, 7)
        iz = np.diag([0.5, -0.5])
        one = np.eye(2)
        H = (-sys.omega_c * np.kron(iz, one) - sys.omega_t * np.kron(one, iz)
             + 2 * math.pi * sys.J * np.kron(iz, iz))
        assert np.allclose(np.diag(H), level_structure(sys).energies)
        assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


class TestGateAlgebra:
    def test_ideal_action(self):
        U = ideal_cnot().matrix
        e = np.eye(4)
        assert np.array_equal(U @ e[0], e[0])
        assert np.array_equal(U @ e[1], e[1])
        assert np.array_equal(U @ e[2], e[3])
        assert np.array_equal(U @ e[3], e[2])
        assert np.array_equal(U @ U, np.eye(4))

    @given(a=st.complex_numbers(max_magnitude=1), b=st.complex_numbers(max_magnitude=1))
    def test_linearity_on_target(self, a, b):
        psi = np.kron([0, 1], [a, b])
        assert np.allclose(ideal_cnot().matrix @ psi, np.kron([0, 1], [b, a]))

    def test_fidelity_examples(self):
        U = ideal_cnot()
        assert gate_fidelity(U, U) == 1.0
        assert gate_fidelity(GateMatrix(np.eye(4)), U) == 0.0
        phased = GateMatrix(U.matrix @ np.diag(np.exp(1j * np.array([0.3, -1.0, 2.0, 0.7]))))
        assert gate_fidelity(phased, U) == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(column_phases(phased, U), [0.3, -1.0, 2.0, 0.7])

    def test_json_round_trip(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        g = GateMatrix(M)
        d = json.loads(g.to_json())
        assert d["basis"] == list(BASIS)
        assert d["matrix"][0][1] == [M[0, 1].real, M[0, 1].imag]
        assert np.array_equal(GateMatrix.from_dict(d).matrix, M)

    def test_rejects_shape(self):
        with pytest.raises(ValueError):
            GateMatrix(np.eye(3))


class TestSimulation:
    def test_selective_gate(self):
        U = simulate_cnot(system_for(selective_J(FT_PROFILE, 1.25)), FT_PROFILE)
        assert U.unitarity_error() <= 1e-9
        probs = U.transition_probabilities()
        assert np.all(np.abs(probs - ideal_cnot().transition_probabilities()) < 0.01)
        assert gate_fidelity(U, ideal_cnot()) >= 0.99

    @pytest.mark.filterwarnings("ignore::trpgate.cnot.SelectivityWarning")
    def test_block_structure(self):
        U = simulate_cnot(system_for(selective_J(FT_PROFILE, 0.5)), FT_PROFILE).matrix
        assert np.max(np.abs(U[0:2, 2:4])) <= 1e-12
        assert np.max(np.abs(U[2:4, 0:2])) <= 1e-12

    def test_selectivity_warning(self):
        with pytest.warns(SelectivityWarning):
            simulate_cnot(system_for(selective_J(FT_PROFILE, 0.5)), FT_PROFILE)
        with warnings.catch_warnings():
            warnings.simplefilter("error", SelectivityWarning)
            simulate_cnot(system_for(selective_J(FT_PROFILE, 1.25)), FT_PROFILE)

    def test_null_sweep_is_identity(self):
        p = SweepProfile.from_dimensionless(4, 5.0, 4.0e-3, tau0=0.0)
        U = simulate_cnot(system_for(10.0), p)
        assert np.array_equal(U.matrix, np.eye(4))
        assert gate_fidelity(U, ideal_cnot()) == 0.0

    @pytest.mark.filterwarnings("ignore::trpgate.cnot.SelectivityWarning")
    def test_adiabatic_limit_swaps_targets(self):
        # Basis states start O(1/tau0) away from the field direction, so a wide
        # window is needed to see the LZ limit at this precision.
        p = SweepProfile.from_dimensionless(4, 0.2, 0.0, tau0=300.0)
        # Only the control-1 block is inspected, so selectivity is irrelevant.
        U = simulate_cnot(system_for(1.0), p)
        block = U.transition_probabilities()[2:4, 2:4]
        assert block[1, 0] == pytest.approx(1 - landau_zener(0.2), abs=1e-4)
        assert block[0, 1] == pytest.approx(1 - landau_zener(0.2), abs=1e-4)

    def test_workers_do_not_change_result(self):
        sys = system_for(selective_J(FT_PROFILE, 1.5))
        a = simulate_cnot(sys, FT_PROFILE, workers=1)
        b = simulate_cnot(sys, FT_PROFILE, workers=4)
        assert np.array_equal(a.matrix, b.matrix)

    def test_fidelity_monotone_in_coupling(self):
        J0 = selective_J(FT_PROFILE, 0.3)
        ladder = [J0 * 2**k for k in range(5)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SelectivityWarning)
            fids = [gate_fidelity(simulate_cnot(system_for(J), FT_PROFILE), ideal_cnot())
                    for J in ladder]
        assert all(b >= a for a, b in zip(fids, fids[1:])), fids
        assert fids[-1] >= 0.99

    @pytest.mark.parametrize("eta", [0.0, 4.6e-4, 1.6e-3])
    def test_unitary(self, eta):
        p = SweepProfile.from_dimensionless(4, 5.0, eta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SelectivityWarning)
            U = simulate_cnot(system_for(selective_J(p, 1.1)), p)
        assert U.is_unitary(1e-9)
