"""Static transmon-resonator circuit: dressed spectra and resonance maps.

The coupled Hamiltonian on the product space (transmon eigenbasis x Fock) is

    H = H_t (x) 1 + omega_r a^dag a - i g (n - n_g) (x) (a - a^dag).

Diagonalization uses the gauge a -> -i a which makes the matrix real
symmetric; eigenvectors are rotated back, so the returned states belong to
the Hamiltonian above.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq

from . import transmon as tm
from .errors import LabelingError
from .units import TWO_PI

RESONANCE_TOL = TWO_PI * 1e-4  # 0.1 MHz, declared-resonance tolerance
FLUX_TOL = 1e-6
LABEL_MARGIN = 0.05


@dataclass(frozen=True)
class CircuitParams:
    """Transmon plus readout resonator (omega_r, g, kappa in rad/ns)."""

    transmon: tm.TransmonParams
    omega_r: float
    g: float
    kappa: float

    def __post_init__(self):
        if self.omega_r <= 0:
            raise ValueError("omega_r must be positive")
        if self.g <= 0:
            raise ValueError("g must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.g > 0.1 * self.omega_r:
            warnings.warn("g is not small compared to omega_r; dispersive-regime "
                          "assumptions may fail", stacklevel=2)


@dataclass(frozen=True)
class DressedSpectrum:
    """Coupled eigensystem with (transmon index, photon index) labels.

    labels maps (i, n) -> eigenstate column; margins holds the overlap
    separation between the best and second-best candidate for each label.
    """

    energies: np.ndarray
    states: np.ndarray
    labels: dict
    margins: dict
    n_transmon: int
    n_photon: int


@dataclass(frozen=True)
class ResonanceLine:
    """Locus of (flux, n_g) points satisfying w_ij + s*w_s = n*w_d."""

    transition: tuple[int, int]
    order: int
    spurious_offset: float | None
    locus: tuple[tuple[float, float], ...]


def _destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def build_coupled_hamiltonian(circuit: CircuitParams, n_transmon: int,
                              n_photon: int) -> np.ndarray:
    """Product-space Hamiltonian, transmon part in its eigenbasis."""
    spec = tm.spectrum(circuit.transmon, n_transmon)
    n_op = tm.charge_operator(spec, circuit.transmon.n_g).matrix
    a = _destroy(n_photon)
    h = (np.kron(np.diag(spec.energies), np.eye(n_photon))
         + np.kron(np.eye(n_transmon), circuit.omega_r * (a.T @ a))
         + np.kron(n_op, -1j * circuit.g * (a - a.T)))
    return h


def _real_rotated_hamiltonian(circuit, n_transmon, n_photon):
    spec = tm.spectrum(circuit.transmon, n_transmon)
    n_op = tm.charge_operator(spec, circuit.transmon.n_g).matrix
    a = _destroy(n_photon)
    return (np.kron(np.diag(spec.energies), np.eye(n_photon))
            + np.kron(np.eye(n_transmon), circuit.omega_r * (a.T @ a))
            + np.kron(np.real(n_op), circuit.g * (a + a.T)))


def _greedy_labels(probs: np.ndarray, n_transmon: int, n_photon: int):
    """Assign bare labels to eigenstates, highest overlap first."""
    dim = n_transmon * n_photon
    flat = np.argsort(probs, axis=None)[::-1]
    labels, taken, done = {}, np.zeros(dim, bool), np.zeros(dim, bool)
    count = 0
    for pos in flat:
        bare, col = divmod(int(pos), dim)
        if done[bare] or taken[col]:
            continue
        labels[divmod(bare, n_photon)] = col
        done[bare] = True
        taken[col] = True
        count += 1
        if count == dim:
            break
    margins = {}
    for (i, n), _col in labels.items():
        row = np.sort(probs[i * n_photon + n])[::-1]
        margins[(i, n)] = float(row[0] - row[1])
    return labels, margins


def dressed_spectrum(circuit: CircuitParams, n_transmon: int = 10,
                     n_photon: int = 15) -> DressedSpectrum:
    """Diagonalize the coupled system and label states by bare overlap."""
    h_real = _real_rotated_hamiltonian(circuit, n_transmon, n_photon)
    energies, vecs = eigh(h_real)
    # rotate eigenvectors back to the -ig(a - a^dag) gauge
    phases = np.tile(1j ** np.arange(n_photon), n_transmon)
    states = tm._fix_phases(phases[:, None] * vecs)
    probs = np.abs(vecs) ** 2  # |overlap|^2 is gauge independent
    labels, margins = _greedy_labels(probs, n_transmon, n_photon)
    return DressedSpectrum(energies=energies, states=states, labels=labels,
                           margins=margins, n_transmon=n_transmon,
                           n_photon=n_photon)


def dressed_energy(ds: DressedSpectrum, i: int, n: int) -> float:
    return float(ds.energies[ds.labels[(i, n)]])


def pulled_resonator_frequency(ds: DressedSpectrum, i: int) -> float:
    """omega_{r,i} = E(i,1) - E(i,0) for transmon state i."""
    for key in ((i, 0), (i, 1)):
        if key not in ds.labels:
            raise LabelingError(f"no dressed state labeled {key}",
                                module="circuit-model")
        if ds.margins[key] < LABEL_MARGIN:
            raise LabelingError(
                f"ambiguous dressed-state label {key}: best two candidates "
                f"within {ds.margins[key]:.3f} overlap", module="circuit-model")
    return dressed_energy(ds, i, 1) - dressed_energy(ds, i, 0)


def dispersive_shift(circuit: CircuitParams, n_transmon: int = 10,
                     n_photon: int = 15) -> float:
    """chi = omega_{r,1} - omega_{r,0}."""
    ds = dressed_spectrum(circuit, n_transmon, n_photon)
    return pulled_resonator_frequency(ds, 1) - pulled_resonator_frequency(ds, 0)


def resonance_condition_map(circuit: CircuitParams, omega_d: float, flux_grid,
                            ng_grid, max_order: int = 2,
                            spurious: float | None = None,
                            transitions=None, n_levels: int = 8):
    """Root loci of the multiphoton conditions w_ij + s*w_s = n*w_d.

    For every (transition, order, spurious) combination the locus is found
    by bisection along flux at each gate charge.  Empty loci are allowed.
    """
    if max_order > 4:
        raise ValueError("max_order above 4 is not supported")
    flux_grid = np.asarray(flux_grid, dtype=float)
    ng_grid = np.asarray(ng_grid, dtype=float)
    if flux_grid.size == 0 or ng_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if transitions is None:
        transitions = [(0, j) for j in range(1, n_levels)]
    offsets = [0.0] + ([spurious] if spurious else [])

    lines = []
    for (i, j) in transitions:
        freq_cache = {}

        def w_ij(flux, ng):
            key = (flux, ng)
            if key not in freq_cache:
                params = circuit.transmon.at_flux(flux).at_gate_charge(ng)
                spec = tm.spectrum(params, max(i, j) + 1)
                freq_cache[key] = tm.transition_frequency(spec, i, j)
            return freq_cache[key]

        for s_off in offsets:
            for order in range(max_order + 1):
                locus = []
                for ng in ng_grid:
                    vals = np.array([w_ij(f, ng) + s_off - order * omega_d
                                     for f in flux_grid])
                    for k in np.flatnonzero(np.diff(np.sign(vals)) != 0):
                        root = brentq(lambda f: w_ij(f, ng) + s_off - order * omega_d,
                                      flux_grid[k], flux_grid[k + 1], xtol=FLUX_TOL)
                        if abs(w_ij(root, ng) + s_off - order * omega_d) < RESONANCE_TOL:
                            locus.append((float(root), float(ng)))
                lines.append(ResonanceLine(transition=(i, j), order=order,
                                           spurious_offset=s_off or None,
                                           locus=tuple(locus)))
    return lines
