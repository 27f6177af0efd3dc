"""Isolated multiharmonic transmon in the charge basis.

The transmon Hamiltonian is

    H = 4 E_C (n - n_g)^2 - sum_m E_Jm cos(m phi),        m = 1..3

represented on charge states |k>, k = -N_c..N_c, where cos(m phi)
contributes -E_Jm/2 on the +-m-th off-diagonals.  External flux scales every
harmonic by |cos(pi * flux)| (symmetric junctions, common scaling for all
harmonics).  All energies are angular frequencies in rad/ns.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh

from .errors import NumericalError

MAX_HARMONICS = 3
DEFAULT_CHARGE_CUTOFF = 40
CONVERGENCE_RTOL = 1e-9


@dataclass(frozen=True)
class TransmonParams:
    """Charging energy, Josephson harmonics, gate charge and flux.

    e_c and the entries of e_j are angular frequencies (rad/ns).  n_g is in
    units of 2e; flux is the external flux in units of phi_0.
    """

    e_c: float
    e_j: tuple[float, ...]
    n_g: float = 0.0
    flux: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "e_j", tuple(float(x) for x in self.e_j))
        if self.e_c <= 0:
            raise ValueError("e_c must be positive")
        if not self.e_j:
            raise ValueError("e_j must contain at least the first harmonic")
        if self.e_j[0] < 0:
            raise ValueError("first harmonic E_J1 must be non-negative")
        if len(self.e_j) > MAX_HARMONICS:
            raise ValueError(f"harmonics above m={MAX_HARMONICS} are not supported")

    @property
    def e_j_effective(self) -> tuple[float, ...]:
        """Harmonics after flux scaling, all by the same |cos(pi flux)|."""
        scale = abs(np.cos(np.pi * self.flux))
        return tuple(ej * scale for ej in self.e_j)

    def at_flux(self, flux: float) -> "TransmonParams":
        return replace(self, flux=flux)

    def at_gate_charge(self, n_g: float) -> "TransmonParams":
        return replace(self, n_g=n_g)


@dataclass(frozen=True)
class Spectrum:
    """Lowest eigenpairs of the transmon, referenced to the ground state.

    energies are sorted ascending with energies[0] = 0; states are columns
    in the truncated charge basis (-charge_cutoff..charge_cutoff).
    """

    energies: np.ndarray
    states: np.ndarray
    charge_cutoff: int
    n_levels: int


@dataclass(frozen=True)
class ChargeOperator:
    """Matrix of (n - n_g) in the transmon eigenbasis."""

    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def flux_scaled_ej(e_j_max: float, flux: float) -> float:
    """Josephson energy at external flux, E_Jmax |cos(pi flux)|."""
    return e_j_max * abs(np.cos(np.pi * flux))


def build_charge_hamiltonian(params: TransmonParams, cutoff: int) -> np.ndarray:
    """Charge-basis Hamiltonian on charge states -cutoff..cutoff."""
    if cutoff < 10:
        raise ValueError("charge cutoff must be at least 10")
    k = np.arange(-cutoff, cutoff + 1)
    h = np.diag(4.0 * params.e_c * (k - params.n_g) ** 2)
    for m, e_jm in enumerate(params.e_j_effective, start=1):
        band = np.full(2 * cutoff + 1 - m, -e_jm / 2.0)
        h += np.diag(band, m) + np.diag(band, -m)
    return h


def _fix_phases(states: np.ndarray) -> np.ndarray:
    """Largest-magnitude component of each column made real-positive."""
    idx = np.argmax(np.abs(states), axis=0)
    lead = states[idx, np.arange(states.shape[1])]
    phases = np.where(np.abs(lead) > 0, lead / np.abs(lead), 1.0)
    return states / phases


def eigensystem(h: np.ndarray, n_levels: int) -> Spectrum:
    """Lowest n_levels eigenpairs, ascending, ground-state referenced."""
    if h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be square")
    if n_levels > h.shape[0]:
        raise ValueError("n_levels exceeds Hamiltonian dimension")
    if not np.allclose(h, h.conj().T, rtol=0, atol=1e-10):
        raise ValueError("Hamiltonian is not Hermitian")
    try:
        energies, states = eigh(h, subset_by_index=(0, n_levels - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"diagonalization failed: {exc}", module="transmon-core")
    states = _fix_phases(states)
    cutoff = (h.shape[0] - 1) // 2
    return Spectrum(
        energies=energies - energies[0],
        states=states,
        charge_cutoff=cutoff,
        n_levels=n_levels,
    )


@lru_cache(maxsize=256)
def _converged_cutoff(params: TransmonParams, n_levels: int, cutoff: int) -> int:
    """Smallest verified cutoff: doubling changes retained energies < 1e-9 rel."""
    for nc in (cutoff, 2 * cutoff):
        e1 = eigensystem(build_charge_hamiltonian(params, nc), n_levels).energies
        e2 = eigensystem(build_charge_hamiltonian(params, 2 * nc), n_levels).energies
        scale = max(np.max(np.abs(e2)), 1.0)
        if np.max(np.abs(e1 - e2)) < CONVERGENCE_RTOL * scale:
            return nc
    raise NumericalError(
        f"charge basis not converged at cutoff {4 * cutoff} for {n_levels} levels",
        module="transmon-core",
    )


def spectrum(params: TransmonParams, n_levels: int, cutoff: int | None = None) -> Spectrum:
    """Converged spectrum; the cutoff is convergence-checked per parameter set."""
    nc = _converged_cutoff(params, n_levels, cutoff or DEFAULT_CHARGE_CUTOFF)
    return eigensystem(build_charge_hamiltonian(params, nc), n_levels)


def charge_operator(spec: Spectrum, n_g: float) -> ChargeOperator:
    """(n - n_g) projected onto the transmon eigenbasis."""
    k = np.arange(-spec.charge_cutoff, spec.charge_cutoff + 1)
    mat = spec.states.conj().T @ ((k - n_g)[:, None] * spec.states)
    return ChargeOperator(matrix=mat)


def transition_frequency(spec: Spectrum, i: int, j: int) -> float:
    """omega_j - omega_i (rad/ns)."""
    if not (0 <= i < spec.n_levels and 0 <= j < spec.n_levels):
        raise IndexError("level index out of range")
    return float(spec.energies[j] - spec.energies[i])


def charge_dispersion(params: TransmonParams, level: int, grid=None) -> float:
    """Peak-to-peak variation of omega_{0,level} over a gate-charge grid."""
    if grid is None:
        grid = np.linspace(0.0, 0.5, 21)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 11 or grid.min() > 0.0 or grid.max() < 0.5:
        raise ValueError("gate-charge grid must cover [0, 0.5] with >= 11 points")
    freqs = [
        transition_frequency(spectrum(params.at_gate_charge(ng), level + 1), 0, level)
        for ng in grid
    ]
    return float(np.max(freqs) - np.min(freqs))


def series_inductance_harmonics(e_j: float, e_l: float) -> tuple[float, float, float]:
    """First three harmonics induced by a stray series inductance.

    Perturbative expansion in x = e_j/e_l, valid for x < 0.2:

        E_J1 = E_J [1 - x^2/8 + x^4/192]
        E_J2 = E_J [-x/4 + x^3/12 - x^5/96]
        E_J3 = E_J [x^2/8 - 9 x^4/128]
    """
    x = e_j / e_l
    if not 0 <= x < 0.2:
        raise ValueError(f"e_j/e_l = {x:.3g} outside perturbative range [0, 0.2)")
    e_j1 = e_j * (1.0 - x**2 / 8.0 + x**4 / 192.0)
    e_j2 = e_j * (-x / 4.0 + x**3 / 12.0 - x**5 / 96.0)
    e_j3 = e_j * (x**2 / 8.0 - 9.0 * x**4 / 128.0)
    return e_j1, e_j2, e_j3


def parity_shifted(params: TransmonParams) -> TransmonParams:
    """Quasiparticle parity partner: n_g shifted by 0.5 (1e in 2e units)."""
    return params.at_gate_charge(params.n_g + 0.5)
