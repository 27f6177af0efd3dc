"""Spectroscopy fitting of circuit parameters.

The loss is a weighted L1 sum over qubit transitions and pulled resonator
frequencies, in GHz:

    f = sum_{i=1..3} |w_0i(ng=0) - target|/i
      + sum_{i=2..3} |w_0i(ng=0.5) - target|/i
      + sum_{i=0..1} |w_{r,i} - target|

Three model variants: "multiharmonic" fits (E_C, E_J1, E_J2, E_J3, g, w_r);
"conventional" fixes E_J2 = E_J3 = 0 and fits only transitions up to level 2;
"series-inductance" derives the harmonics from (E_J, E_L).

Each multi-start seed runs a weighted least-squares descent first (fast, and
already exact when the targets are realizable) followed by a simplex polish
of the L1 loss itself, stopping once the improvement falls below 1e-10 GHz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import least_squares, minimize

from . import transmon as tm
from .circuit import CircuitParams, _real_rotated_hamiltonian, dressed_spectrum, \
    pulled_resonator_frequency
from .errors import LabelingError
from .units import ghz, to_ghz

VARIANTS = ("multiharmonic", "conventional", "series-inductance")
FIT_TOL_GHZ = 1e-10
MAX_ITER = 2000
N_SEEDS = 5
SEED_SPREAD = 0.02
FIT_PHOTON_CUTOFF = 15
FIT_TRANSMON_CUTOFF = 10


@dataclass(frozen=True)
class Target:
    """One measured frequency: a 0->level transition at n_g, or the pulled
    resonator frequency for transmon state `level`."""

    kind: str  # "transition" | "resonator"
    level: int
    n_g: float
    freq_ghz: float
    weight: float | None = None

    def __post_init__(self):
        if self.kind not in ("transition", "resonator"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.freq_ghz <= 0:
            raise ValueError("target frequencies must be positive")

    @property
    def effective_weight(self) -> float:
        if self.weight is not None:
            return self.weight
        return 1.0 / self.level if self.kind == "transition" else 1.0

    @property
    def key(self):
        return (self.kind, self.level, self.n_g)


@dataclass(frozen=True)
class SpectroscopyTargets:
    targets: tuple[Target, ...]

    def __iter__(self):
        return iter(self.targets)

    def __len__(self):
        return len(self.targets)


@dataclass
class FitResult:
    params: CircuitParams
    loss: float
    residuals: dict
    variant: str
    iterations: int
    converged: bool
    seed_losses: list = field(default_factory=list)
    seed_params: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)


def standard_targets(circuit: CircuitParams) -> SpectroscopyTargets:
    """Synthesize the standard 7-target set from model parameters."""
    recs = []
    for ng, levels in ((0.0, (1, 2, 3)), (0.5, (2, 3))):
        spec = tm.spectrum(circuit.transmon.at_gate_charge(ng), 4)
        for lv in levels:
            recs.append(Target("transition", lv, ng,
                               to_ghz(tm.transition_frequency(spec, 0, lv))))
    ds = dressed_spectrum(circuit, FIT_TRANSMON_CUTOFF, FIT_PHOTON_CUTOFF)
    for i in (0, 1):
        recs.append(Target("resonator", i, 0.0,
                           to_ghz(pulled_resonator_frequency(ds, i))))
    return SpectroscopyTargets(tuple(recs))


def _lean_transitions(circuit, ng, n_levels, cutoff):
    h = tm.build_charge_hamiltonian(circuit.transmon.at_gate_charge(ng), cutoff)
    energies = eigh(h, subset_by_index=(0, n_levels - 1), eigvals_only=True)
    return energies - energies[0]


def _lean_pulled(circuit, which, cutoff):
    """Pulled resonator frequencies from a low-energy subset eigensolve."""
    nt, nph = FIT_TRANSMON_CUTOFF, FIT_PHOTON_CUTOFF
    h = _real_rotated_hamiltonian(circuit, nt, nph)
    n_sub = min(h.shape[0], 5 * nph)
    energies, vecs = eigh(h, subset_by_index=(0, n_sub - 1))
    probs = np.abs(vecs) ** 2
    out = {}
    for i in which:
        cols = {}
        for n in (0, 1):
            row = probs[i * nph + n]
            best = int(np.argmax(row))
            cols[n] = best
        out[i] = energies[cols[1]] - energies[cols[0]]
    return out


def model_frequencies(circuit: CircuitParams, targets: SpectroscopyTargets,
                      lean: bool = False, cutoff: int | None = None) -> dict:
    """Model value (GHz) for every target, keyed by (kind, level, n_g).

    The lean path skips convergence re-checks and solves only the needed
    low-energy subspace; it is meant for optimizer inner loops.
    """
    out = {}
    trans = [t for t in targets if t.kind == "transition"]
    for ng in sorted({t.n_g for t in trans}):
        wanted = [t for t in trans if t.n_g == ng]
        n_levels = max(t.level for t in wanted) + 1
        if lean:
            energies = _lean_transitions(circuit, ng, n_levels,
                                         cutoff or tm.DEFAULT_CHARGE_CUTOFF)
            for t in wanted:
                out[t.key] = to_ghz(energies[t.level])
        else:
            spec = tm.spectrum(circuit.transmon.at_gate_charge(ng), n_levels,
                               cutoff=cutoff)
            for t in wanted:
                out[t.key] = to_ghz(tm.transition_frequency(spec, 0, t.level))
    res = [t for t in targets if t.kind == "resonator"]
    if res:
        if lean:
            pulled = _lean_pulled(circuit, sorted({t.level for t in res}),
                                  cutoff or tm.DEFAULT_CHARGE_CUTOFF)
            for t in res:
                out[t.key] = to_ghz(pulled[t.level])
        else:
            ds = dressed_spectrum(circuit, FIT_TRANSMON_CUTOFF,
                                  FIT_PHOTON_CUTOFF)
            for t in res:
                out[t.key] = to_ghz(pulled_resonator_frequency(ds, t.level))
    return out


def loss(circuit: CircuitParams, targets: SpectroscopyTargets,
         lean: bool = False) -> float:
    """Weighted L1 spectroscopy loss in GHz."""
    model = model_frequencies(circuit, targets, lean=lean)
    return sum(t.effective_weight * abs(model[t.key] - t.freq_ghz)
               for t in targets)


def residuals(circuit: CircuitParams, targets: SpectroscopyTargets) -> dict:
    model = model_frequencies(circuit, targets)
    return {t.key: model[t.key] - t.freq_ghz for t in targets}


def _free_parameters(variant: str, initial: CircuitParams):
    """Free-parameter vector (GHz units) and circuit reconstruction."""
    t = initial.transmon
    e_j = t.e_j + (0.0,) * (3 - len(t.e_j))
    if variant == "multiharmonic":
        x0 = np.array([to_ghz(t.e_c), to_ghz(e_j[0]), to_ghz(e_j[1]),
                       to_ghz(e_j[2]), to_ghz(initial.g), to_ghz(initial.omega_r)])

        def build(x):
            tt = tm.TransmonParams(e_c=ghz(x[0]), e_j=(ghz(x[1]), ghz(x[2]), ghz(x[3])),
                                   n_g=t.n_g, flux=t.flux)
            return CircuitParams(tt, omega_r=ghz(x[5]), g=ghz(x[4]),
                                 kappa=initial.kappa)

        names = ("e_c", "e_j1", "e_j2", "e_j3", "g", "omega_r")
    elif variant == "conventional":
        x0 = np.array([to_ghz(t.e_c), to_ghz(e_j[0]), to_ghz(initial.g),
                       to_ghz(initial.omega_r)])

        def build(x):
            tt = tm.TransmonParams(e_c=ghz(x[0]), e_j=(ghz(x[1]),),
                                   n_g=t.n_g, flux=t.flux)
            return CircuitParams(tt, omega_r=ghz(x[3]), g=ghz(x[2]),
                                 kappa=initial.kappa)

        names = ("e_c", "e_j", "g", "omega_r")
    elif variant == "series-inductance":
        # initial (E_J, E_L) inverted from the harmonics if present
        if len(t.e_j) >= 2 and t.e_j[1] != 0:
            x_ratio = -4.0 * t.e_j[1] / t.e_j[0]
            e_l0 = t.e_j[0] / x_ratio
        else:
            e_l0 = 30.0 * t.e_j[0]
        x0 = np.array([to_ghz(t.e_c), to_ghz(t.e_j[0]), to_ghz(e_l0),
                       to_ghz(initial.g), to_ghz(initial.omega_r)])

        def build(x):
            harmonics = tm.series_inductance_harmonics(ghz(x[1]), ghz(x[2]))
            tt = tm.TransmonParams(e_c=ghz(x[0]), e_j=harmonics,
                                   n_g=t.n_g, flux=t.flux)
            return CircuitParams(tt, omega_r=ghz(x[4]), g=ghz(x[3]),
                                 kappa=initial.kappa)

        names = ("e_c", "e_j", "e_l", "g", "omega_r")
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return x0, build, names


def _filter_targets(variant: str, targets: SpectroscopyTargets) -> SpectroscopyTargets:
    if variant != "conventional":
        return targets
    # conventional model: only the first and second transitions enter the loss
    kept = tuple(t for t in targets if t.kind == "resonator" or t.level <= 2)
    return SpectroscopyTargets(kept)


def fit(targets: SpectroscopyTargets, variant: str, initial: CircuitParams,
        bounds: float = 0.20, n_seeds: int = N_SEEDS, seed: int = 0,
        max_iter: int = MAX_ITER) -> FitResult:
    """Minimize the spectroscopy loss with multi-start two-stage searches.

    bounds is the fractional box around the initial guess; multiharmonic
    ratios are additionally confined to +-5% of E_J1.
    """
    x0, build, names = _free_parameters(variant, initial)
    used = _filter_targets(variant, targets)
    if len(used) < len(x0):
        raise ValueError(f"{len(used)} targets cannot determine {len(x0)} parameters")
    weights = np.array([t.effective_weight for t in used])
    goals = np.array([t.freq_ghz for t in used])
    keys = [t.key for t in used]

    # verify the charge cutoff once, then reuse it in the inner loop
    cutoff = tm._converged_cutoff(initial.transmon, 4, tm.DEFAULT_CHARGE_CUTOFF)

    scale = np.where(np.abs(x0) > 1e-12, np.abs(x0), 1e-3)
    lo = x0 - bounds * scale
    hi = x0 + bounds * scale
    if variant == "multiharmonic":
        cap = 0.05 * abs(x0[1])
        lo[2:4] = np.maximum(lo[2:4], -cap)
        hi[2:4] = np.minimum(hi[2:4], cap)

    def model_vector(z):
        x = np.clip(z * scale, lo, hi)
        model = model_frequencies(build(x), used, lean=True, cutoff=cutoff)
        return np.array([model[k] for k in keys])

    def residual_vector(z):
        try:
            return weights * (model_vector(z) - goals)
        except (ValueError, ArithmeticError, LabelingError):
            return np.full(len(keys), 1e3)

    def l1_objective(z):
        x = z * scale
        if np.any(x < lo) or np.any(x > hi):
            return 1e3 + float(np.sum(np.maximum(lo - x, 0) + np.maximum(x - hi, 0)))
        try:
            return float(np.sum(np.abs(residual_vector(z))))
        except (ValueError, ArithmeticError, LabelingError):
            return 1e3

    rng = np.random.default_rng(seed)
    starts = [x0] + [x0 * (1 + SEED_SPREAD * rng.uniform(-1, 1, x0.size))
                     for _ in range(n_seeds - 1)]
    best_z, best_loss = None, np.inf
    seed_losses, seed_params, total_iter = [], [], 0
    for start in starts:
        z = np.clip(start, lo, hi) / scale
        ls = least_squares(residual_vector, z, method="trf",
                           bounds=(lo / scale, hi / scale),
                           xtol=1e-14, ftol=1e-14, gtol=None,
                           diff_step=1e-7, max_nfev=200 * len(z))
        total_iter += ls.nfev
        z = ls.x
        nm = minimize(l1_objective, z, method="Nelder-Mead",
                      options=dict(
                          xatol=1e-11, fatol=FIT_TOL_GHZ / 10,
                          maxiter=max_iter, adaptive=True,
                          initial_simplex=z + 3e-6 * np.vstack(
                              [np.zeros(len(z)), np.eye(len(z))])))
        total_iter += nm.nit
        z_final = nm.x if nm.fun <= np.sum(np.abs(ls.fun)) else z
        f_final = min(nm.fun, float(np.sum(np.abs(ls.fun))))
        seed_losses.append(f_final)
        seed_params.append(build(np.clip(z_final * scale, lo, hi)))
        if f_final < best_loss:
            best_loss, best_z = f_final, z_final
    params = build(np.clip(best_z * scale, lo, hi))
    final_loss = loss(params, used)
    converged = bool(abs(final_loss - best_loss) < 1e-6 + 0.05 * final_loss)
    extras = {}
    if variant == "series-inductance":
        x_fit = np.clip(best_z * scale, lo, hi)
        extras = {"e_j_junction": ghz(x_fit[1]), "e_l": ghz(x_fit[2])}
    return FitResult(params=params, loss=final_loss,
                     residuals=residuals(params, used), variant=variant,
                     iterations=total_iter, converged=converged,
                     seed_losses=seed_losses, seed_params=seed_params,
                     extras=extras)
