import numpy as np
import pytest

import mistsim as ms
from mistsim.units import ghz, to_ghz, to_mhz, inductance_nH

from oracles import brute_force_levels, free_rotor_levels


def spectrum_for(e_c_ghz, e_j_ghz, n_g, n_levels, **kw):
    params = ms.TransmonParams(e_c=ghz(e_c_ghz),
                               e_j=tuple(ghz(x) for x in e_j_ghz), n_g=n_g)
    return ms.spectrum(params, n_levels, **kw)


class TestChargeHamiltonian:
    def test_free_rotor_exact(self):
        params = ms.TransmonParams(e_c=ghz(0.3), e_j=(0.0,), n_g=0.3)
        h = ms.build_charge_hamiltonian(params, 40)
        spec = ms.eigensystem(h, 20)
        exact = free_rotor_levels(ghz(0.3), 0.3, 20)
        exact -= exact[0]
        assert np.allclose(spec.energies, exact, rtol=1e-10, atol=1e-12)

    def test_matrix_structure(self):
        params = ms.TransmonParams(e_c=ghz(0.2), e_j=(ghz(5.0), ghz(-0.04)),
                                   n_g=0.1)
        h = ms.build_charge_hamiltonian(params, 12)
        assert h.shape == (25, 25)
        k = np.arange(-12, 13)
        assert np.allclose(np.diag(h), 4 * ghz(0.2) * (k - 0.1) ** 2)
        assert np.allclose(np.diag(h, 1), -ghz(5.0) / 2)
        assert np.allclose(np.diag(h, 2), -ghz(-0.04) / 2)

    def test_table_multiharmonic_w01_matches_brute_force(self, device_b):
        # oracle: loop-built charge Hamiltonian at cutoff 200
        t = device_b.transmon
        oracle = brute_force_levels(t.e_c, t.e_j, 0.0, 2, cutoff=200)
        spec = ms.spectrum(t, 2)
        w01 = ms.transition_frequency(spec, 0, 1)
        assert abs(w01 - (oracle[1] - oracle[0])) < 1e-9 * abs(w01)
        # frozen from the oracle above
        assert to_ghz(w01) == pytest.approx(3.6172839363, abs=1e-6)

    def test_gate_charge_symmetries(self):
        params = ms.TransmonParams(e_c=ghz(0.25), e_j=(ghz(5.0),), n_g=0.25)
        e_base = ms.spectrum(params, 8).energies
        for other in (1.25, -0.25, 0.75):
            e_other = ms.spectrum(params.at_gate_charge(other), 8).energies
            assert np.allclose(e_base, e_other, rtol=1e-12,
                               atol=1e-12 * np.max(np.abs(e_base)))

    def test_cutoff_too_small_rejected(self):
        params = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),))
        with pytest.raises(ValueError):
            ms.build_charge_hamiltonian(params, 5)


class TestEigensystem:
    def test_trivial_diagonal(self):
        spec = ms.eigensystem(np.diag([0.0, 1.0]), 2)
        assert np.allclose(spec.energies, [0.0, 1.0])
        assert np.allclose(np.abs(spec.states), np.eye(2))

    def test_device_a_w01_against_textbook_diagonalization(self, device_a):
        t = device_a.transmon
        oracle = brute_force_levels(t.e_c, t.e_j, 0.0, 2, cutoff=100)
        spec = ms.spectrum(t, 2)
        w01 = ms.transition_frequency(spec, 0, 1)
        assert abs(to_ghz(w01) - to_ghz(oracle[1])) < 1e-3  # 1 MHz

    def test_non_hermitian_rejected(self):
        h = np.array([[0.0, 1.0], [0.5, 1.0]])
        with pytest.raises(ValueError):
            ms.eigensystem(h, 2)

    def test_orthonormal_eigenvectors(self):
        spec = spectrum_for(0.22, [8.7, -0.067], 0.2, 12)
        overlap = spec.states.conj().T @ spec.states
        assert np.abs(overlap - np.eye(12)).max() < 1e-10

    def test_phase_convention_deterministic(self):
        spec = spectrum_for(0.22, [8.7], 0.13, 6)
        lead = spec.states[np.argmax(np.abs(spec.states), axis=0),
                           np.arange(6)]
        assert np.all(np.real(lead) > 0)
        assert np.abs(np.imag(lead)).max() < 1e-12

    def test_convergence_under_cutoff_doubling(self):
        params = ms.TransmonParams(e_c=ghz(0.22), e_j=(ghz(8.7),))
        e40 = ms.spectrum(params, 10, cutoff=40).energies
        e80 = ms.eigensystem(ms.build_charge_hamiltonian(params, 80), 10).energies
        assert np.abs(e40 - e80).max() < 1e-9 * np.max(np.abs(e80))


class TestTransitionFrequency:
    def test_same_level_zero(self):
        spec = spectrum_for(0.3, [6.0], 0.0, 4)
        assert ms.transition_frequency(spec, 1, 1) == 0.0

    def test_out_of_range(self):
        spec = spectrum_for(0.3, [6.0], 0.0, 4)
        with pytest.raises(IndexError):
            ms.transition_frequency(spec, 0, 4)

    def test_deep_transmon_qubit_frequency(self):
        deep = ms.preset("deep-transmon-appF")
        spec = ms.spectrum(deep.transmon, 2)
        w01 = to_ghz(ms.transition_frequency(spec, 0, 1))
        assert w01 == pytest.approx(3.61, rel=0.01)
        assert deep.transmon.e_j[0] / deep.transmon.e_c == pytest.approx(100.0)

    def test_device_b_spurious_crossing_flux(self, device_b):
        # scan flux for w02 + w_s = w_d; w01 there matches the reported value
        from scipy.optimize import brentq

        w_target = ghz(7.0535) - ghz(0.78)

        def gap(flux):
            spec = ms.spectrum(device_b.transmon.at_flux(flux), 3)
            return ms.transition_frequency(spec, 0, 2) - w_target

        flux_root = brentq(gap, 0.0, 0.45, xtol=1e-8)
        spec = ms.spectrum(device_b.transmon.at_flux(flux_root), 2)
        w01 = to_ghz(ms.transition_frequency(spec, 0, 1))
        assert w01 == pytest.approx(3.26, abs=0.05)


class TestChargeDispersion:
    def test_device_a_reported_value(self, device_a):
        disp = ms.charge_dispersion(device_a.transmon, 1)
        assert to_mhz(disp) == pytest.approx(9.0, rel=0.5)

    def test_device_b_reported_value(self, device_b):
        disp = ms.charge_dispersion(device_b.transmon, 1)
        assert to_mhz(disp) * 1e3 == pytest.approx(50.0, rel=1.0)
        assert to_mhz(disp) * 1e3 > 25.0

    def test_free_rotor_band_width(self):
        e_c = ghz(0.3)
        params = ms.TransmonParams(e_c=e_c, e_j=(0.0,))
        disp = ms.charge_dispersion(params, 1, np.linspace(0, 0.5, 26))
        # w01(ng) = 4 E_C (1 - 2 ng): exact band width 4 E_C over [0, 1/2]
        assert disp == pytest.approx(4 * e_c, rel=1e-9)

    def test_grows_with_level(self, device_b):
        disps = [ms.charge_dispersion(device_b.transmon, lvl)
                 for lvl in range(7)]
        assert all(d2 > d1 for d1, d2 in zip(disps, disps[1:]))

    def test_small_grid_rejected(self, device_a):
        with pytest.raises(ValueError):
            ms.charge_dispersion(device_a.transmon, 1, np.linspace(0, 0.5, 5))


class TestFluxScaling:
    def test_endpoints(self):
        assert ms.flux_scaled_ej(ghz(6.0), 0.0) == ghz(6.0)
        assert ms.flux_scaled_ej(ghz(6.0), 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_quarter_flux(self):
        assert ms.flux_scaled_ej(ghz(6.0), 0.25) == pytest.approx(
            ghz(6.0) / np.sqrt(2))

    def test_all_harmonics_scale_together(self):
        params = ms.TransmonParams(e_c=ghz(0.2), e_j=(ghz(8.0), ghz(-0.06)),
                                   flux=0.3)
        scale = abs(np.cos(np.pi * 0.3))
        assert params.e_j_effective == pytest.approx(
            (ghz(8.0) * scale, ghz(-0.06) * scale))


class TestSeriesInductance:
    def test_table_ratios(self):
        e_j1, e_j2, e_j3 = ms.series_inductance_harmonics(ghz(8.693), ghz(284.2))
        assert 100 * e_j2 / e_j1 == pytest.approx(-0.765, abs=5e-4)
        assert 100 * e_j3 / e_j1 == pytest.approx(0.0117, abs=5e-5)

    def test_weak_coupling_limit(self):
        e_j1, e_j2, e_j3 = ms.series_inductance_harmonics(ghz(5.0), ghz(5e6))
        assert e_j1 == pytest.approx(ghz(5.0), rel=1e-10)
        assert abs(e_j2) < 1e-6 * e_j1
        assert abs(e_j3) < 1e-9 * e_j1

    def test_inductance_value(self):
        assert inductance_nH(ghz(284.2)) == pytest.approx(0.575, abs=5e-4)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            ms.series_inductance_harmonics(ghz(5.0), ghz(10.0))


class TestParity:
    def test_half_charge_shift(self):
        params = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),), n_g=0.0)
        assert ms.parity_shifted(params).n_g == 0.5

    def test_double_shift_restores_spectrum(self):
        params = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),), n_g=0.1)
        twice = ms.parity_shifted(ms.parity_shifted(params))
        e1 = ms.spectrum(params, 6).energies
        e2 = ms.spectrum(twice, 6).energies
        assert np.allclose(e1, e2, rtol=1e-12, atol=1e-12 * e1.max())

    def test_parity_splitting_equals_dispersion(self, device_a):
        even = ms.spectrum(device_a.transmon, 2)
        odd = ms.spectrum(ms.parity_shifted(device_a.transmon), 2)
        splitting = abs(ms.transition_frequency(even, 0, 1)
                        - ms.transition_frequency(odd, 0, 1))
        disp = ms.charge_dispersion(device_a.transmon, 1)
        assert splitting == pytest.approx(disp, rel=1e-3)


class TestChargeOperator:
    def test_hermitian(self, device_b):
        spec = ms.spectrum(device_b.transmon, 12)
        op = ms.charge_operator(spec, 0.0)
        assert np.abs(op.matrix - op.matrix.conj().T).max() < 1e-12

    @pytest.mark.parametrize("n_g", [0.0, 0.5])
    def test_diagonal_vanishes_at_symmetry_points(self, device_b, n_g):
        spec = ms.spectrum(device_b.transmon.at_gate_charge(n_g), 10)
        op = ms.charge_operator(spec, n_g)
        assert np.abs(np.diag(op.matrix)).max() < 1e-8

    def test_parity_selection_rule(self, device_b):
        # at n_g = 0 matrix elements between same-parity states vanish
        spec = ms.spectrum(device_b.transmon.at_gate_charge(0.0), 8)
        op = ms.charge_operator(spec, 0.0).matrix
        k = np.arange(-spec.charge_cutoff, spec.charge_cutoff + 1)
        flip = spec.states[::-1, :]  # n -> -n
        parity = np.array([np.real(np.vdot(spec.states[:, j], flip[:, j]))
                           for j in range(8)])
        for i in range(8):
            for j in range(8):
                if parity[i] * parity[j] > 0:
                    assert abs(op[i, j]) < 1e-10


class TestValidation:
    def test_invalid_params(self):
        with pytest.raises(ValueError):
            ms.TransmonParams(e_c=-1.0, e_j=(1.0,))
        with pytest.raises(ValueError):
            ms.TransmonParams(e_c=1.0, e_j=())
        with pytest.raises(ValueError):
            ms.TransmonParams(e_c=1.0, e_j=(1.0, 0.1, 0.01, 0.001))
