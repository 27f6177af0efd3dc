import numpy as np
import pytest

import mistsim as ms
from mistsim import fitting as ft
from mistsim.units import ghz, to_ghz, to_mhz


@pytest.fixture(scope="module")
def device_b_targets(device_b):
    return ft.standard_targets(device_b)


def perturbed(circuit, fractions):
    t = circuit.transmon
    f = np.asarray(fractions)
    return ms.CircuitParams(
        transmon=ms.TransmonParams(
            e_c=t.e_c * f[0],
            e_j=tuple(ej * fk for ej, fk in zip(t.e_j, f[1:1 + len(t.e_j)]))),
        omega_r=circuit.omega_r * f[-1], g=circuit.g * f[-2],
        kappa=circuit.kappa)


class TestLoss:
    def test_self_consistency(self, device_b, device_b_targets):
        assert ft.loss(device_b, device_b_targets) < 1e-9

    def test_perturbation_increases_loss(self, device_b, device_b_targets):
        bumped = perturbed(device_b, [1 + 1e-3 / 216.6, 1, 1, 1, 1, 1])
        assert ft.loss(bumped, device_b_targets) > 1e-6

    def test_weights_applied_exactly(self, device_b, device_b_targets):
        # shifting one target by delta changes the loss by weight * delta
        delta = 1e-3
        for idx, target in enumerate(device_b_targets):
            shifted = list(device_b_targets)
            shifted[idx] = ft.Target(target.kind, target.level, target.n_g,
                                     target.freq_ghz + delta)
            new = ft.loss(device_b, ft.SpectroscopyTargets(tuple(shifted)))
            expected = target.effective_weight * delta
            assert new == pytest.approx(expected, rel=1e-6)

    def test_transition_weights_are_one_over_level(self):
        assert ft.Target("transition", 3, 0.0, 10.0).effective_weight == 1 / 3
        assert ft.Target("resonator", 1, 0.0, 7.0).effective_weight == 1.0

    def test_multiharmonic_vs_stray_row_loss(self, device_b_targets):
        # the stray-inductance row differs from the multiharmonic row mostly
        # through E_J3; evaluating it against multiharmonic-synthesized
        # targets must give a small positive loss
        stray = ms.preset("device-B-series-L")
        value = ft.loss(stray, device_b_targets)
        assert 1e-4 < value < 0.05

    def test_lean_path_matches_full(self, device_b, device_b_targets):
        full = ft.model_frequencies(device_b, device_b_targets)
        lean = ft.model_frequencies(device_b, device_b_targets, lean=True,
                                    cutoff=40)
        for key in full:
            assert full[key] == pytest.approx(lean[key], abs=1e-9)


class TestFitRoundTrip:
    def test_multiharmonic_recovery(self, device_b, device_b_targets, rng):
        start = perturbed(device_b, 1 + 0.05 * rng.uniform(-1, 1, 6))
        result = ft.fit(device_b_targets, "multiharmonic", start, n_seeds=2,
                        seed=0)
        t = device_b.transmon
        truth = np.array([t.e_c, *t.e_j, device_b.g, device_b.omega_r])
        for params in result.seed_params:
            got = np.array([params.transmon.e_c, *params.transmon.e_j,
                            params.g, params.omega_r])
            assert np.abs(got / truth - 1).max() < 1e-3
        assert result.loss < 1e-9
        assert result.converged

    def test_fit_idempotent_from_optimum(self, device_b, device_b_targets):
        result = ft.fit(device_b_targets, "multiharmonic", device_b,
                        n_seeds=1, seed=0)
        assert result.loss < 1e-10

    def test_residuals_reproduce_loss(self, device_b, device_b_targets, rng):
        start = perturbed(device_b, 1 + 0.02 * rng.uniform(-1, 1, 6))
        result = ft.fit(device_b_targets, "multiharmonic", start, n_seeds=1,
                        seed=1)
        recomputed = sum(
            ft.Target(*key, freq).effective_weight * abs(result.residuals[key])
            for key, freq in zip(result.residuals,
                                 [t.freq_ghz for t in device_b_targets])
            if False) if False else None
        total = sum(t.effective_weight * abs(result.residuals[t.key])
                    for t in device_b_targets)
        assert total == pytest.approx(result.loss, abs=1e-10)


class TestVariants:
    def test_conventional_constraints(self, device_b, device_b_targets):
        start = ms.preset("device-B-conventional")
        result = ft.fit(device_b_targets, "conventional", start, n_seeds=1,
                        seed=0)
        assert len(result.params.transmon.e_j) == 1
        # only levels <= 2 and resonator targets enter
        assert all(k[0] == "resonator" or k[1] <= 2 for k in result.residuals)

    def test_conventional_ratio_shift(self, device_b, device_b_targets):
        start = ms.preset("device-B-conventional")
        result = ft.fit(device_b_targets, "conventional", start, n_seeds=2,
                        seed=0)
        t = result.params.transmon
        assert t.e_j[0] / t.e_c == pytest.approx(43.5, abs=0.5)
        mh = device_b.transmon
        assert mh.e_j[0] / mh.e_c == pytest.approx(40.2, abs=0.3)

    def test_series_inductance_round_trip(self):
        stray = ms.preset("device-B-series-L")
        targets = ft.standard_targets(stray)
        rng = np.random.default_rng(5)
        f = 1 + 0.04 * rng.uniform(-1, 1, 5)
        harmonics = ms.series_inductance_harmonics(ghz(8.693 * f[1]),
                                                   ghz(284.2 * f[2]))
        start = ms.CircuitParams(
            transmon=ms.TransmonParams(e_c=stray.transmon.e_c * f[0],
                                       e_j=harmonics),
            omega_r=stray.omega_r * f[4], g=stray.g * f[3],
            kappa=stray.kappa)
        result = ft.fit(targets, "series-inductance", start, n_seeds=2, seed=0)
        assert to_ghz(result.extras["e_j_junction"]) == pytest.approx(
            8.693, rel=5e-3)
        assert to_ghz(result.extras["e_l"]) == pytest.approx(284.2, rel=5e-3)

    def test_series_constraint_identities(self, device_b, device_b_targets):
        start = ms.preset("device-B-series-L")
        result = ft.fit(device_b_targets, "series-inductance", start,
                        n_seeds=1, seed=0)
        e_j = result.params.transmon.e_j
        expected = ms.series_inductance_harmonics(result.extras["e_j_junction"],
                                                  result.extras["e_l"])
        assert np.allclose(e_j, expected, rtol=1e-12)

    def test_series_fit_beats_paper_row_on_synthesized_targets(
            self, device_b_targets):
        # against targets synthesized from the multiharmonic row, the
        # optimizer must do at least as well as the quoted stray-row values
        start = ms.preset("device-B-series-L")
        result = ft.fit(device_b_targets, "series-inductance", start,
                        n_seeds=2, seed=0)
        row_loss = ft.loss(ms.preset("device-B-series-L"), device_b_targets)
        assert result.loss < row_loss

    def test_unknown_variant(self, device_b, device_b_targets):
        with pytest.raises(ValueError):
            ft.fit(device_b_targets, "bogus", device_b)

    def test_too_few_targets(self, device_b):
        targets = ft.SpectroscopyTargets(
            (ft.Target("transition", 1, 0.0, 3.6),))
        with pytest.raises(ValueError):
            ft.fit(targets, "multiharmonic", device_b)
