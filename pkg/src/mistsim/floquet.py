"""Floquet analysis of the classically driven transmon.

The driven Hamiltonian is H(t) = H_t + eps_t cos(w_d t) (n - n_g).  Floquet
modes and quasienergies come from the one-period propagator, branches are
tracked over an amplitude grid by mode overlap, and avoided crossings are
detected from quasienergy gaps accompanied by population swaps.  Photon
numbers attach to amplitudes through n_r = (eps_t / 2g)^2.

The propagator integrator is a fourth-order commutator-free exponential
scheme (two exactly unitary exponentials per step), so unitarity holds to
rounding and the zero-drive limit is exact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from . import transmon as tm
from .circuit import CircuitParams
from .errors import NumericalError
from .units import TWO_PI, mhz

DEFAULT_STEPS_PER_PERIOD = 512
DEFAULT_DELTA_EPS = mhz(5.0)
DEFAULT_N_LEVELS = 20
UNITARITY_TOL = 1e-6
SWAP_THRESHOLD = 0.25
SWAP_WINDOW = 5
BROKEN_OVERLAP = 0.3

# Gauss-Legendre nodes and fourth-order commutator-free weights
_GAUSS_1 = 0.5 - np.sqrt(3) / 6
_GAUSS_2 = 0.5 + np.sqrt(3) / 6
_CF4_A1 = (3 - 2 * np.sqrt(3)) / 12
_CF4_A2 = (3 + 2 * np.sqrt(3)) / 12


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[-1] @ ... @ mats[0] by pairwise tree reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            head, rest = mats[:1], mats[1:]
        else:
            head, rest = mats[:0], mats
        prod = np.matmul(rest[1::2], rest[0::2])
        mats = np.concatenate([head, prod]) if head.shape[0] else prod
    return mats[0]


def evolve_unitary(h_func, t0: float, t1: float, steps: int) -> np.ndarray:
    """Time-ordered propagator for an arbitrary Hermitian H(t) callable."""
    dt = (t1 - t0) / steps
    dim = h_func(t0).shape[0]
    u = np.eye(dim, dtype=complex)
    for k in range(steps):
        ta = t0 + k * dt
        h1 = h_func(ta + _GAUSS_1 * dt)
        h2 = h_func(ta + _GAUSS_2 * dt)
        for gen in (_CF4_A2 * h1 + _CF4_A1 * h2, _CF4_A1 * h1 + _CF4_A2 * h2):
            lam, v = np.linalg.eigh(gen)
            u = (v * np.exp(-1j * dt * lam)) @ (v.conj().T @ u)
    return u


def _cosine_drive_propagator(energies, n_op, eps_t, omega_d, steps):
    """One-period propagator for H(t) = diag(energies) + eps cos(w_d t) N.

    The commutator-free generators are all of the form H0/2 + gamma N,
    batched through a single eigh call.
    """
    period = TWO_PI / omega_d
    dt = period / steps
    t_steps = np.arange(steps) * dt
    c1 = np.cos(omega_d * (t_steps + _GAUSS_1 * dt))
    c2 = np.cos(omega_d * (t_steps + _GAUSS_2 * dt))
    gammas = np.empty(2 * steps)
    gammas[0::2] = eps_t * (_CF4_A2 * c1 + _CF4_A1 * c2)  # right factor first
    gammas[1::2] = eps_t * (_CF4_A1 * c1 + _CF4_A2 * c2)
    gens = np.diag(energies / 2.0)[None, :, :] + gammas[:, None, None] * n_op[None, :, :]
    lam, v = np.linalg.eigh(gens)
    phases = np.exp(-1j * dt * lam)
    vc = v.astype(complex)
    exps = np.matmul(vc * phases[:, None, :], vc.transpose(0, 2, 1).conj())
    return _ordered_product(exps)


def unitarity_defect(u: np.ndarray) -> float:
    return float(np.abs(u @ u.conj().T - np.eye(u.shape[0])).max())


def one_period_propagator(spec: tm.Spectrum, charge_op: tm.ChargeOperator,
                          eps_t: float, omega_d: float, n_levels: int,
                          steps_per_period: int = DEFAULT_STEPS_PER_PERIOD):
    """One-period propagator and its measured unitarity defect.

    On a unitarity defect above tolerance the step count is doubled once
    before raising.
    """
    if eps_t < 0:
        raise ValueError("eps_t must be non-negative")
    if n_levels > spec.n_levels:
        raise ValueError("spectrum holds fewer levels than requested")
    energies = spec.energies[:n_levels]
    n_op = np.real(charge_op.matrix[:n_levels, :n_levels])
    steps = steps_per_period
    for _ in range(2):
        u = _cosine_drive_propagator(energies, n_op, eps_t, omega_d, steps)
        defect = unitarity_defect(u)
        if defect <= UNITARITY_TOL:
            return u, defect
        steps *= 2
    raise NumericalError(
        f"propagator unitarity defect {defect:.2e} above {UNITARITY_TOL} "
        f"after step refinement", module="floquet-engine")


@dataclass(frozen=True)
class FloquetPoint:
    """Quasienergies (folded to [-w_d/2, w_d/2)), modes as columns, and mean
    transmon populations at one drive amplitude."""

    eps_t: float
    quasienergies: np.ndarray
    modes: np.ndarray
    populations: np.ndarray
    degenerate: bool = False


def floquet_eigensystem(u: np.ndarray, omega_d: float,
                        eps_t: float = 0.0) -> FloquetPoint:
    """Floquet modes and quasienergies from a one-period propagator.

    Uses a complex Schur decomposition so the returned modes stay orthonormal
    even through quasienergy clusters.
    """
    defect = unitarity_defect(u)
    if defect > UNITARITY_TOL:
        raise NumericalError(f"propagator not unitary (defect {defect:.2e})",
                             module="floquet-engine")
    t_mat, z = schur(u, output="complex")
    lam = np.diag(t_mat)
    period = TWO_PI / omega_d
    quasi = -np.angle(lam) / period
    modes = tm._fix_phases(z)
    lam_sorted = np.sort_complex(lam)
    degenerate = bool(np.any(np.abs(np.diff(lam_sorted)) < 1e-12))
    pops = _mean_populations(modes)
    return FloquetPoint(eps_t=eps_t, quasienergies=quasi, modes=modes,
                        populations=pops, degenerate=degenerate)


def _mean_populations(modes: np.ndarray) -> np.ndarray:
    levels = np.arange(modes.shape[0])
    return (np.abs(modes) ** 2 * levels[:, None]).sum(axis=0)


def fold(quasi, omega_d: float):
    """Fold quasienergies into the zone [-w_d/2, w_d/2)."""
    return (quasi + omega_d / 2) % omega_d - omega_d / 2


def zone_distance(a, b, omega_d: float):
    """Circular distance on the quasienergy zone."""
    d = np.abs(a - b) % omega_d
    return np.minimum(d, omega_d - d)


@dataclass
class FloquetBranchSet:
    """Branches tracked over an amplitude grid by mode-overlap continuity.

    quasienergies are folded; quasi_unwrapped accumulates zone crossings so
    differences along a branch are physical.  modes[k][:, b] is branch b's
    mode at grid point k.  Branch b equals bare level b at eps_t = 0.
    """

    circuit: CircuitParams
    omega_d: float
    eps_grid: np.ndarray
    quasienergies: np.ndarray      # (n_pts, n_branches), folded
    quasi_unwrapped: np.ndarray    # (n_pts, n_branches)
    modes: np.ndarray              # (n_pts, dim, n_branches)
    populations: np.ndarray        # (n_pts, n_branches)
    overlaps: np.ndarray           # (n_pts, n_branches) tracking overlap
    broken: np.ndarray             # (n_pts, n_branches) bool
    unitarity_defects: np.ndarray  # (n_pts,)
    n_levels: int

    @property
    def n_r_grid(self) -> np.ndarray:
        return (self.eps_grid / (2.0 * self.circuit.g)) ** 2

    def eps_for_photons(self, n_r: float) -> float:
        return 2.0 * self.circuit.g * np.sqrt(n_r)

    def photons_for_eps(self, eps_t: float) -> float:
        return (eps_t / (2.0 * self.circuit.g)) ** 2

    def nearest_index(self, eps_t: float) -> int:
        step = self.eps_grid[1] - self.eps_grid[0]
        return int(np.clip(np.round(eps_t / step), 0, len(self.eps_grid) - 1))

    def propagator(self, index: int) -> np.ndarray:
        """Reconstruct the one-period propagator at a grid point."""
        z = self.modes[index]
        period = TWO_PI / self.omega_d
        phases = np.exp(-1j * self.quasienergies[index] * period)
        return (z * phases) @ z.conj().T


def _greedy_assign(overlap: np.ndarray) -> np.ndarray:
    """One-to-one branch -> candidate assignment by descending overlap."""
    n = overlap.shape[0]
    order = np.argsort(overlap, axis=None)[::-1]
    assign = np.full(n, -1)
    taken = np.zeros(n, bool)
    placed = 0
    for pos in order:
        b, c = divmod(int(pos), n)
        if assign[b] >= 0 or taken[c]:
            continue
        assign[b] = c
        taken[c] = True
        placed += 1
        if placed == n:
            break
    return assign


def track_branches(circuit: CircuitParams, omega_d: float, eps_max: float,
                   delta_eps: float = DEFAULT_DELTA_EPS,
                   n_levels: int = DEFAULT_N_LEVELS,
                   steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
                   charge_cutoff: int | None = None) -> FloquetBranchSet:
    """Track Floquet branches from zero drive up to eps_max."""
    if delta_eps <= 0:
        raise ValueError("delta_eps must be positive")
    spec = tm.spectrum(circuit.transmon, n_levels, cutoff=charge_cutoff)
    n_op = tm.charge_operator(spec, circuit.transmon.n_g)
    n_pts = int(np.ceil(eps_max / delta_eps)) + 1
    eps_grid = np.arange(n_pts) * delta_eps

    quasi = np.empty((n_pts, n_levels))
    unwrapped = np.empty((n_pts, n_levels))
    modes = np.empty((n_pts, n_levels, n_levels), dtype=complex)
    pops = np.empty((n_pts, n_levels))
    track_ovl = np.ones((n_pts, n_levels))
    broken = np.zeros((n_pts, n_levels), bool)
    defects = np.zeros(n_pts)

    prev_modes = np.eye(n_levels, dtype=complex)
    for k, eps in enumerate(eps_grid):
        if eps == 0.0:
            point = FloquetPoint(eps_t=0.0,
                                 quasienergies=fold(spec.energies[:n_levels], omega_d),
                                 modes=np.eye(n_levels, dtype=complex),
                                 populations=np.arange(n_levels, dtype=float))
            defect = 0.0
        else:
            u, defect = one_period_propagator(spec, n_op, eps, omega_d, n_levels,
                                              steps_per_period)
            point = floquet_eigensystem(u, omega_d, eps_t=eps)
        overlap = np.abs(prev_modes.conj().T @ point.modes) ** 2
        assign = _greedy_assign(overlap)
        z = point.modes[:, assign]
        q = point.quasienergies[assign]
        quasi[k] = q
        modes[k] = z
        pops[k] = point.populations[assign]
        defects[k] = defect
        if k == 0:
            unwrapped[0] = q
        else:
            track_ovl[k] = overlap[np.arange(n_levels), assign]
            broken[k] = track_ovl[k] < BROKEN_OVERLAP
            step = fold(q - quasi[k - 1], omega_d)
            unwrapped[k] = unwrapped[k - 1] + step
        prev_modes = z

    return FloquetBranchSet(circuit=circuit, omega_d=omega_d, eps_grid=eps_grid,
                            quasienergies=quasi, quasi_unwrapped=unwrapped,
                            modes=modes, populations=pops, overlaps=track_ovl,
                            broken=broken, unitarity_defects=defects,
                            n_levels=n_levels)


@dataclass(frozen=True)
class AvoidedCrossing:
    """Quasienergy avoided crossing between two branches.

    gap is the minimum zone distance; exchange the transmon-population swap
    across the crossing window; resolved is False when the swap happened
    without a resolved distance minimum at the grid increment.
    """

    branch_i: int
    branch_j: int
    index: int
    eps_t: float
    n_r: float
    gap: float
    exchange: float
    resolved: bool

    @property
    def classification(self) -> str:
        return "resolved" if self.resolved else "unresolved-at-grid"


def detect_avoided_crossings(branches: FloquetBranchSet,
                             swap_threshold: float = SWAP_THRESHOLD,
                             window: int = SWAP_WINDOW) -> list[AvoidedCrossing]:
    """Crossings = local quasienergy-distance minima with population swaps.

    Population swaps lacking a resolved minimum are flagged unresolved; pure
    near-degeneracies without hybridization are ignored.
    """
    q = branches.quasienergies
    pops = branches.populations
    n_pts, n_br = q.shape
    n_r = branches.n_r_grid
    omega_d = branches.omega_d
    out = []
    for i in range(n_br):
        for j in range(i + 1, n_br):
            dist = zone_distance(q[:, i], q[:, j], omega_d)
            d_i = pops[:, i]
            d_j = pops[:, j]
            hits = []
            for k in range(1, n_pts - 1):
                if not (dist[k] < dist[k - 1] and dist[k] <= dist[k + 1]):
                    continue
                lo = max(0, k - window)
                hi = min(n_pts - 1, k + window)
                swap_i = d_i[hi] - d_i[lo]
                swap_j = d_j[hi] - d_j[lo]
                exchange = min(abs(swap_i), abs(swap_j))
                if exchange >= swap_threshold and swap_i * swap_j < 0:
                    hits.append(k)
                    out.append(AvoidedCrossing(
                        branch_i=i, branch_j=j, index=k,
                        eps_t=float(branches.eps_grid[k]), n_r=float(n_r[k]),
                        gap=float(dist[k]), exchange=float(exchange),
                        resolved=True))
            # abrupt swaps between consecutive points with no resolved minimum
            step_i = np.diff(d_i)
            step_j = np.diff(d_j)
            for k in np.flatnonzero((np.abs(step_i) >= swap_threshold)
                                    & (np.abs(step_j) >= swap_threshold)
                                    & (step_i * step_j < 0)):
                if any(abs(k - h) <= window for h in hits):
                    continue
                exchange = float(min(abs(step_i[k]), abs(step_j[k])))
                out.append(AvoidedCrossing(
                    branch_i=i, branch_j=j, index=int(k),
                    eps_t=float(branches.eps_grid[k]), n_r=float(n_r[k]),
                    gap=float(min(dist[k], dist[k + 1])), exchange=exchange,
                    resolved=False))
                hits.append(int(k))
    return sorted(out, key=lambda c: c.index)


@dataclass(frozen=True)
class DiabaticTrack:
    """Piecewise branch path following the state character through crossings.

    segments are (branch id, (eps_lo, eps_hi)); events the crossings at which
    the tracked branch switched (their photon numbers are the critical photon
    numbers for the initial state).
    """

    initial: int
    segments: tuple
    events: tuple
    ambiguous: bool = False

    @property
    def critical_photon_numbers(self) -> tuple[float, ...]:
        return tuple(ev.n_r for ev in self.events)

    def branch_at(self, index: int) -> int:
        branch = self.initial
        for ev in self.events:
            if index >= ev.index:
                branch = ev.branch_j if ev.branch_i == branch else ev.branch_i
            else:
                break
        return branch


def diabatic_track(branches: FloquetBranchSet, crossings, initial: int) -> DiabaticTrack:
    """Follow the initial state's character, switching branch at each crossing."""
    events = []
    current = initial
    last_index = 0
    ambiguous = False
    ordered = sorted(crossings, key=lambda c: (c.index, -c.exchange))
    k = 0
    while k < len(ordered):
        c = ordered[k]
        if c.index <= last_index or current not in (c.branch_i, c.branch_j):
            k += 1
            continue
        # crossings of the current branch within one grid step: take the
        # larger population exchange and flag the ambiguity
        rivals = [d for d in ordered[k + 1:]
                  if abs(d.index - c.index) <= 1 and current in (d.branch_i, d.branch_j)]
        if rivals:
            best = max([c] + rivals, key=lambda d: d.exchange)
            if best is not c:
                ambiguous = True
                c = best
        events.append(c)
        current = c.branch_j if c.branch_i == current else c.branch_i
        last_index = c.index
        k += 1

    segments = []
    start = branches.eps_grid[0]
    branch = initial
    for ev in events:
        segments.append((branch, (float(start), float(ev.eps_t))))
        start = ev.eps_t
        branch = ev.branch_j if ev.branch_i == branch else ev.branch_i
    segments.append((branch, (float(start), float(branches.eps_grid[-1]))))
    return DiabaticTrack(initial=initial, segments=tuple(segments),
                         events=tuple(events), ambiguous=ambiguous)


@dataclass
class DispersionCurve:
    """Photon-number dependent pulled resonator frequency for one branch.

    Piecewise linear in n_r over the Floquet grid; linear extrapolation
    beyond the covered range emits a warning once.
    """

    n_grid: np.ndarray
    omega: np.ndarray
    branch: int
    diabatic: bool
    fold_flagged: bool = False
    _warned: bool = field(default=False, repr=False)

    @property
    def n_max(self) -> float:
        return float(self.n_grid[-1])

    def __call__(self, n_r):
        n_r = np.asarray(n_r, dtype=float)
        if np.any(n_r > self.n_max) and not self._warned:
            warnings.warn(f"dispersion curve extrapolated beyond n_r = "
                          f"{self.n_max:.1f}", stacklevel=2)
            self._warned = True
        slope_end = ((self.omega[-1] - self.omega[-2])
                     / (self.n_grid[-1] - self.n_grid[-2]))
        out = np.interp(n_r, self.n_grid, self.omega)
        beyond = n_r > self.n_max
        if np.any(beyond):
            out = np.where(beyond, self.omega[-1] + slope_end * (n_r - self.n_max), out)
        return out if out.ndim else float(out)


def _unwrap_sequence(folded: np.ndarray, omega_d: float):
    """Cumulative unwrap; flags any step larger than w_d/4."""
    steps = fold(np.diff(folded), omega_d)
    flagged = bool(np.any(np.abs(steps) > omega_d / 4))
    out = np.concatenate([[folded[0]], folded[0] + np.cumsum(steps)])
    return out, flagged


def dispersion_curve(branches: FloquetBranchSet, branch: int,
                     track: DiabaticTrack | None = None) -> DispersionCurve:
    """Effective oscillator frequency w(n_r) = w_r + e(n_r + 1) - e(n_r).

    With a diabatic track the quasienergy sequence follows the tracked
    character through crossings.
    """
    omega_d = branches.omega_d
    if track is None:
        seq = branches.quasienergies[:, branch]
    else:
        ids = [track.branch_at(k) for k in range(len(branches.eps_grid))]
        seq = branches.quasienergies[np.arange(len(ids)), ids]
    unwrapped, flagged = _unwrap_sequence(seq, omega_d)

    g = branches.circuit.g
    omega_r = branches.circuit.omega_r
    n_r = branches.n_r_grid
    # eps(n + 1) must stay inside the grid
    n_max = max(n_r[-1] - 1.0, 0.0)
    n_grid = n_r[n_r <= n_max]
    eps_lo = 2.0 * g * np.sqrt(n_grid)
    eps_hi = 2.0 * g * np.sqrt(n_grid + 1.0)
    q_lo = np.interp(eps_lo, branches.eps_grid, unwrapped)
    q_hi = np.interp(eps_hi, branches.eps_grid, unwrapped)
    omega = omega_r + (q_hi - q_lo)
    return DispersionCurve(n_grid=n_grid, omega=omega, branch=branch,
                           diabatic=track is not None, fold_flagged=flagged)


def effective_resonator_frequency(branches: FloquetBranchSet, branch: int,
                                  n_r: float, track: DiabaticTrack | None = None) -> float:
    """Pulled resonator frequency for one branch at one photon number."""
    return float(dispersion_curve(branches, branch, track)(n_r))


def landau_zener_probability(gap: float, speed: float) -> float:
    """Diabatic passage probability exp(-pi gap^2 / (2 v))."""
    if speed <= 0:
        raise ValueError("sweep speed must be positive")
    return float(np.exp(-np.pi * gap**2 / (2.0 * speed)))


def crossing_speed(branches: FloquetBranchSet, crossing: AvoidedCrossing,
                   eps_rate: float, offset: int = 3) -> float:
    """|d(delta quasienergy)/dt| near a crossing for a given amplitude rate.

    The quasienergy-difference slope is estimated just outside the
    hybridization window.
    """
    i, j, k = crossing.branch_i, crossing.branch_j, crossing.index
    lo = max(0, k - offset - 1)
    hi = min(len(branches.eps_grid) - 1, k + offset + 1)
    d = zone_distance(branches.quasienergies[:, i], branches.quasienergies[:, j],
                      branches.omega_d)
    slope = abs(d[hi] - d[lo]) / (branches.eps_grid[hi] - branches.eps_grid[lo])
    return float(slope * abs(eps_rate))
