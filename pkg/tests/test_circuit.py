import numpy as np
import pytest

import mistsim as ms
from mistsim.circuit import dressed_energy
from mistsim.units import ghz, mhz, to_ghz, to_mhz


@pytest.fixture(scope="module")
def small_circuit():
    t = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),))
    return ms.CircuitParams(transmon=t, omega_r=ghz(6.8), g=mhz(80.0),
                            kappa=mhz(1.0))


class TestCoupledHamiltonian:
    def test_hermitian(self, small_circuit):
        h = ms.build_coupled_hamiltonian(small_circuit, 6, 8)
        assert np.abs(h - h.conj().T).max() < 1e-10

    def test_zero_coupling_limit(self):
        t = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),))
        circ = ms.CircuitParams(transmon=t, omega_r=ghz(6.8), g=1e-9,
                                kappa=mhz(1.0))
        ds = ms.dressed_spectrum(circ, 5, 6)
        spec = ms.spectrum(t, 5)
        for i in range(5):
            for n in range(6):
                bare = spec.energies[i] + n * circ.omega_r
                dressed = dressed_energy(ds, i, n) - dressed_energy(ds, 0, 0)
                assert abs(dressed - bare) < 1e-9 * max(abs(bare), 1.0)

    def test_coupling_sign_flip_leaves_spectrum(self, small_circuit):
        h = ms.build_coupled_hamiltonian(small_circuit, 6, 8)
        # flip the anti-Hermitian coupling: unitary equivalence under a -> -a
        diag = np.kron(np.diag(ms.spectrum(small_circuit.transmon, 6).energies),
                       np.eye(8))
        a = np.diag(np.sqrt(np.arange(1, 8)), 1)
        res = np.kron(np.eye(6), small_circuit.omega_r * a.T @ a)
        coupling = h - diag - res
        h_flipped = diag + res - coupling
        e1 = np.linalg.eigvalsh(h)
        e2 = np.linalg.eigvalsh(h_flipped)
        assert np.allclose(e1, e2, atol=1e-9)

    def test_matches_real_gauge_spectrum(self, small_circuit):
        # the -ig(a - a^dag) form and the real-rotated form are isospectral
        h = ms.build_coupled_hamiltonian(small_circuit, 5, 7)
        ds = ms.dressed_spectrum(small_circuit, 5, 7)
        assert np.allclose(np.linalg.eigvalsh(h), ds.energies, atol=1e-9)

    def test_photon_truncation_convergence(self, small_circuit):
        ds1 = ms.dressed_spectrum(small_circuit, 6, 12)
        ds2 = ms.dressed_spectrum(small_circuit, 6, 24)
        for i in range(3):
            for n in range(3):
                e1 = dressed_energy(ds1, i, n) - dressed_energy(ds1, 0, 0)
                e2 = dressed_energy(ds2, i, n) - dressed_energy(ds2, 0, 0)
                assert abs(e1 - e2) < 1e-8 * max(abs(e2), 1.0)


class TestPulledResonator:
    def test_zero_coupling_gives_bare_frequency(self):
        t = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),))
        circ = ms.CircuitParams(transmon=t, omega_r=ghz(6.8), g=1e-9,
                                kappa=mhz(1.0))
        ds = ms.dressed_spectrum(circ, 5, 6)
        assert ms.pulled_resonator_frequency(ds, 0) == pytest.approx(
            circ.omega_r, rel=1e-10)

    def test_device_b_dispersive_shift(self, device_b):
        chi = ms.dispersive_shift(device_b)
        assert to_mhz(chi) == pytest.approx(-2.5, rel=0.25)
        assert chi < 0

    def test_drive_sits_between_pulled_frequencies(self, device_b):
        ds = ms.dressed_spectrum(device_b)
        wr0 = to_ghz(ms.pulled_resonator_frequency(ds, 0))
        wr1 = to_ghz(ms.pulled_resonator_frequency(ds, 1))
        assert wr1 < 7.0535 < wr0

    def test_state2_pull_strongly_charge_dependent(self, device_b):
        pulls = {i: [] for i in (0, 1, 2)}
        for ng in np.linspace(0.0, 0.5, 6):
            t = device_b.transmon.at_gate_charge(ng)
            circ = ms.CircuitParams(transmon=t, omega_r=device_b.omega_r,
                                    g=device_b.g, kappa=device_b.kappa)
            ds = ms.dressed_spectrum(circ)
            for i in pulls:
                pulls[i].append(ms.pulled_resonator_frequency(ds, i))
        span = {i: max(v) - min(v) for i, v in pulls.items()}
        assert span[2] > 10 * span[0]
        assert span[2] > 10 * span[1]


class TestResonanceMap:
    def test_device_a_zero_to_two_locus(self, device_a):
        lines = ms.resonance_condition_map(
            device_a, omega_d=ghz(6.11972),
            flux_grid=np.linspace(0.0, 0.45, 46),
            ng_grid=np.linspace(0.0, 0.5, 5),
            max_order=1, transitions=[(0, 2)])
        locus = [ln for ln in lines if ln.order == 1
                 and ln.spurious_offset is None][0].locus
        assert len(locus) == 5, "expected one root per gate charge"
        by_ng = {ng: flux for flux, ng in locus}
        # the charge-insensitive anchor sits at 0.23; the shallow transmon's
        # level-2 dispersion fans the locus out to larger flux at ng = 0.5
        assert by_ng[0.0] == pytest.approx(0.23, abs=0.01)
        assert all(0.22 < f < 0.28 for f in by_ng.values())

    def test_zero_order_empty(self, device_a):
        lines = ms.resonance_condition_map(
            device_a, omega_d=ghz(6.11972),
            flux_grid=np.linspace(0.0, 0.4, 21),
            ng_grid=[0.0], max_order=1, transitions=[(0, 1)])
        zero_order = [ln for ln in lines if ln.order == 0][0]
        assert zero_order.locus == ()

    def test_spurious_mode_locus(self, device_b):
        lines = ms.resonance_condition_map(
            device_b, omega_d=ghz(7.0535),
            flux_grid=np.linspace(0.0, 0.45, 46),
            ng_grid=[0.0, 0.25], max_order=1,
            spurious=ghz(0.78), transitions=[(0, 2)])
        spur = [ln for ln in lines if ln.spurious_offset is not None
                and ln.order == 1][0]
        assert spur.locus
        for flux, ng in spur.locus:
            spec = ms.spectrum(device_b.transmon.at_flux(flux).at_gate_charge(ng), 2)
            w01 = to_ghz(ms.transition_frequency(spec, 0, 1))
            assert w01 == pytest.approx(3.26, abs=0.05)

    def test_locus_charge_symmetry(self, device_a):
        lines = ms.resonance_condition_map(
            device_a, omega_d=ghz(6.11972),
            flux_grid=np.linspace(0.0, 0.45, 46),
            ng_grid=[0.15, -0.15, 0.85], max_order=1, transitions=[(0, 2)])
        line = [ln for ln in lines if ln.order == 1][0]
        by_ng = {ng: flux for flux, ng in line.locus}
        assert by_ng[0.15] == pytest.approx(by_ng[-0.15], abs=1e-6)
        assert by_ng[0.15] == pytest.approx(by_ng[0.85], abs=1e-6)

    def test_locus_satisfies_condition(self, device_a):
        omega_d = ghz(6.11972)
        lines = ms.resonance_condition_map(
            device_a, omega_d=omega_d,
            flux_grid=np.linspace(0.0, 0.45, 46),
            ng_grid=[0.3], max_order=2, transitions=[(0, 2), (0, 3)])
        for line in lines:
            for flux, ng in line.locus:
                spec = ms.spectrum(
                    device_a.transmon.at_flux(flux).at_gate_charge(ng),
                    max(line.transition) + 1)
                w = ms.transition_frequency(spec, *line.transition)
                off = line.spurious_offset or 0.0
                assert abs(w + off - line.order * omega_d) < ghz(1e-4)


class TestValidation:
    def test_dispersive_sanity_warning(self):
        t = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),))
        with pytest.warns(UserWarning):
            ms.CircuitParams(transmon=t, omega_r=ghz(1.0), g=ghz(0.5),
                             kappa=mhz(1.0))

    def test_invalid_rejected(self):
        t = ms.TransmonParams(e_c=ghz(0.3), e_j=(ghz(6.0),))
        with pytest.raises(ValueError):
            ms.CircuitParams(transmon=t, omega_r=-1.0, g=mhz(1.0), kappa=0.0)
        with pytest.raises(ValueError):
            ms.CircuitParams(transmon=t, omega_r=ghz(6.0), g=0.0, kappa=0.0)
