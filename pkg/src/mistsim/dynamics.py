"""Semiclassical readout dynamics.

The resonator field is a classical amplitude obeying

    alpha' = -i [w_eff(|alpha|^2) - w_d] alpha - kappa alpha / 2 - i eps_d / 2

with the branch-dependent nonlinear pull w_eff from the Floquet analysis.
The transmon then sees the effective drive eps_t(t) = 2 g sqrt(n_r(t)) and is
evolved through the readout pulse by stepping whole drive periods with
propagators reconstructed from the Floquet branch set (the envelope is
quantized to the amplitude grid, the same resolution as the branch analysis).
Projection onto the instantaneous Floquet basis gives branch populations;
the optional coherence collapse zeroes Floquet-basis coherences at the end
of the ramp-up and recombines ramp-down transition probabilities
incoherently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import floquet as fl
from .circuit import CircuitParams
from .errors import NumericalError
from .units import TWO_PI

TRAJECTORY_RTOL = 1e-9
TRAJECTORY_ATOL = 1e-11
PHOTON_OVERRUN = 1.2
PROJECTION_CADENCE_NS = 1.0


@dataclass(frozen=True)
class DriveProtocol:
    """Readout pulse: drive amplitude/frequency, drive-on time, total time."""

    eps_d: float
    omega_d: float
    t_up: float
    t_final: float
    initial_state: int = 0

    def __post_init__(self):
        if not 0 < self.t_up < self.t_final:
            raise ValueError("need 0 < t_up < t_final")
        if self.eps_d < 0:
            raise ValueError("eps_d must be non-negative")


@dataclass
class ResonatorTrajectory:
    """Classical resonator amplitude over the pulse."""

    times: np.ndarray
    alpha: np.ndarray
    dispersion_branch: int
    diabatic: bool
    _interp_re: object = field(repr=False, default=None)
    _interp_im: object = field(repr=False, default=None)

    @property
    def n_r(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def n_r_max(self) -> float:
        return float(self.n_r.max())

    def alpha_at(self, t):
        return self._interp_re(t) + 1j * self._interp_im(t)

    def n_r_at(self, t):
        return np.abs(self.alpha_at(t)) ** 2

    def eps_t_at(self, t, g: float):
        return 2.0 * g * np.sqrt(self.n_r_at(t))


def resonator_trajectory(protocol: DriveProtocol, dispersion,
                         kappa: float, samples_per_ns: float = 2.0) -> ResonatorTrajectory:
    """Integrate the semiclassical cavity equation through drive-on and decay.

    dispersion is a callable w_eff(n_r); the drive switches off sharply at
    t_up.  Raises when the reached photon number overruns the dispersion
    curve's range by more than 20%.
    """
    omega_d = protocol.omega_d

    def rhs(t, y, drive):
        re, im = y
        n_r = re * re + im * im
        rot = dispersion(n_r) - omega_d
        d_alpha = -1j * rot * (re + 1j * im) - 0.5 * kappa * (re + 1j * im) - 0.5j * drive
        return [d_alpha.real, d_alpha.imag]

    pieces = []
    y0 = [0.0, 0.0]
    for (t0, t1, drive) in ((0.0, protocol.t_up, protocol.eps_d),
                            (protocol.t_up, protocol.t_final, 0.0)):
        n_eval = max(int((t1 - t0) * samples_per_ns), 16)
        sol = solve_ivp(rhs, (t0, t1), y0, args=(drive,), method="DOP853",
                        rtol=TRAJECTORY_RTOL, atol=TRAJECTORY_ATOL,
                        dense_output=True, t_eval=np.linspace(t0, t1, n_eval))
        if not sol.success:  # pragma: no cover
            raise NumericalError(f"cavity integration failed: {sol.message}",
                                 module="semiclassical-dynamics")
        pieces.append(sol)
        y0 = sol.y[:, -1]

    times = np.concatenate([pieces[0].t, pieces[1].t[1:]])
    alpha = np.concatenate([pieces[0].y[0] + 1j * pieces[0].y[1],
                            (pieces[1].y[0] + 1j * pieces[1].y[1])[1:]])

    t_up = protocol.t_up

    def interp(part):
        def f(t):
            t = np.asarray(t, dtype=float)
            out = np.where(t < t_up,
                           pieces[0].sol(np.clip(t, 0.0, t_up))[part],
                           pieces[1].sol(np.clip(t, t_up, protocol.t_final))[part])
            return out if out.ndim else float(out)
        return f

    traj = ResonatorTrajectory(times=times, alpha=alpha,
                               dispersion_branch=getattr(dispersion, "branch", -1),
                               diabatic=getattr(dispersion, "diabatic", False),
                               _interp_re=interp(0), _interp_im=interp(1))
    n_cap = getattr(dispersion, "n_max", None)
    if n_cap is not None and traj.n_r_max > PHOTON_OVERRUN * n_cap:
        raise NumericalError(
            f"trajectory reached n_r = {traj.n_r_max:.1f}, beyond the Floquet "
            f"grid maximum {n_cap:.1f} by more than 20%; rebuild the branch "
            f"set with a larger eps_max", module="semiclassical-dynamics")
    return traj


def steady_state_photon_number(eps_d: float, omega_d: float, dispersion,
                               kappa: float, n_upper: float | None = None,
                               scan_points: int = 2001) -> list[float]:
    """Self-consistent photon numbers n = L(w_eff(n)), ascending.

    All fixed points found on the scan interval are returned; more than one
    entry signals bistability.
    """
    if eps_d == 0.0:
        return [0.0]

    def lorentzian(n):
        det = dispersion(n) - omega_d
        return (eps_d / 2.0) ** 2 / (det**2 + kappa**2 / 4.0)

    if n_upper is None:
        base = lorentzian(0.0)
        n_upper = getattr(dispersion, "n_max", None) or 4.0 * base + 1.0
        n_upper = max(n_upper, 4.0 * base + 1.0)
    grid = np.linspace(0.0, n_upper, scan_points)
    f = np.array([lorentzian(n) - n for n in grid])
    roots = []
    from scipy.optimize import brentq
    for k in np.flatnonzero(np.diff(np.sign(f)) != 0):
        roots.append(brentq(lambda n: lorentzian(n) - n, grid[k], grid[k + 1],
                            xtol=1e-10))
    if not roots and f[0] < 0:
        roots.append(0.0)
    return sorted(float(r) for r in roots)


@dataclass
class PhotonCalibration:
    """Drive-amplitude to maximum-photon-number mapping per initial state."""

    eps_d_grid: np.ndarray
    n_max: dict
    chi: float
    omega_d: float

    def stark_shift_to_photons(self, shift: float) -> float:
        """Low-power ac-Stark conversion n_r = shift / chi."""
        return shift / self.chi

    def voltage_scale(self, voltage: float, eps_d: float) -> float:
        """Single scale factor mapping applied voltage to eps_d."""
        return eps_d / voltage


def calibrate_photon_axis(chi: float, kappa: float, omega_d: float,
                          dispersions: dict, pulse: DriveProtocol,
                          eps_d_grid) -> PhotonCalibration:
    """Maximum photon number over the pulse for each drive amplitude.

    dispersions maps initial state -> diabatic dispersion curve.  The
    low-power anchor is the ac-Stark relation shift = chi * n_r.
    """
    if chi == 0:
        raise ValueError("chi must be nonzero")
    eps_d_grid = np.asarray(eps_d_grid, dtype=float)
    n_max = {}
    for state, curve in dispersions.items():
        peaks = []
        for eps_d in eps_d_grid:
            proto = DriveProtocol(eps_d=eps_d, omega_d=omega_d, t_up=pulse.t_up,
                                  t_final=pulse.t_final, initial_state=state)
            peaks.append(resonator_trajectory(proto, curve, kappa).n_r_max)
        n_max[state] = np.array(peaks)
    return PhotonCalibration(eps_d_grid=eps_d_grid, n_max=n_max, chi=chi,
                             omega_d=omega_d)


@dataclass
class StateHistory:
    """Sampled Schrodinger evolution in the transmon eigenbasis."""

    times: np.ndarray
    states: np.ndarray        # (n_samples, dim)
    eps_t: np.ndarray         # effective drive amplitude at the samples
    grid_indices: np.ndarray  # nearest branch-set grid index at the samples
    norm_defect: float
    state_up: np.ndarray      # state at the end of the ramp-up
    index_up: int             # grid index at the end of the ramp-up
    periods_up: int
    n_periods: int


def evolve_schrodinger(circuit: CircuitParams, protocol: DriveProtocol,
                       trajectory: ResonatorTrajectory,
                       branch_set: fl.FloquetBranchSet,
                       sample_dt: float = PROJECTION_CADENCE_NS) -> StateHistory:
    """Evolve the transmon through the pulse by whole-period propagators.

    One step per drive period with the envelope frozen at the period start
    and quantized to the branch-set amplitude grid; each step is exactly
    unitary, so norm defects stay at rounding level.
    """
    if branch_set.omega_d != protocol.omega_d:
        raise ValueError("branch set and protocol drive frequencies differ")
    dim = branch_set.n_levels
    period = TWO_PI / protocol.omega_d
    n_periods = int(np.ceil(protocol.t_final / period))
    periods_up = int(np.round(protocol.t_up / period))

    t_starts = np.arange(n_periods) * period
    eps_t = trajectory.eps_t_at(t_starts, circuit.g)
    grid_max = branch_set.eps_grid[-1]
    if np.max(eps_t) > PHOTON_OVERRUN * grid_max:
        raise NumericalError(
            f"drive amplitude {np.max(eps_t):.3f} exceeds the branch-set grid "
            f"maximum {grid_max:.3f} by more than 20%; rebuild with larger "
            f"eps_max", module="semiclassical-dynamics")
    step = branch_set.eps_grid[1] - branch_set.eps_grid[0]
    indices = np.clip(np.round(eps_t / step).astype(int), 0,
                      len(branch_set.eps_grid) - 1)

    phases = np.exp(-1j * branch_set.quasienergies * period)  # (n_pts, dim)
    modes = branch_set.modes

    psi = np.zeros(dim, dtype=complex)
    psi[protocol.initial_state] = 1.0
    stride = max(int(np.round(sample_dt / period)), 1)

    samples, sample_times, sample_eps, sample_idx = [psi.copy()], [0.0], [0.0], [0]
    state_up = None
    for p in range(n_periods):
        k = indices[p]
        z = modes[k]
        psi = z @ (phases[k] * (z.conj().T @ psi))
        if p + 1 == periods_up:
            state_up = psi.copy()
        if (p + 1) % stride == 0 or p + 1 == n_periods:
            samples.append(psi.copy())
            sample_times.append((p + 1) * period)
            nxt = min(p + 1, n_periods - 1)
            sample_eps.append(eps_t[nxt])
            sample_idx.append(indices[nxt])

    if state_up is None:
        state_up = psi.copy()
    norm_defect = float(abs(np.linalg.norm(psi) - 1.0))
    if norm_defect > 1e-8:
        raise NumericalError(f"norm defect {norm_defect:.2e} above 1e-8",
                             module="semiclassical-dynamics")
    return StateHistory(times=np.array(sample_times), states=np.array(samples),
                        eps_t=np.array(sample_eps),
                        grid_indices=np.array(sample_idx),
                        norm_defect=norm_defect, state_up=state_up,
                        index_up=int(indices[min(periods_up, n_periods - 1)]),
                        periods_up=periods_up, n_periods=n_periods)


@dataclass
class TransitionRecord:
    """Branch-population history and final survival for one pulse."""

    initial_state: int
    times: np.ndarray
    populations: np.ndarray   # (n_samples, n_branches)
    other: np.ndarray         # remainder outside tracked branches
    survival: float           # final P(i|i)
    collapse_applied: bool
    n_r_max: float = float("nan")

    def survival_history(self) -> np.ndarray:
        return self.populations[:, self.initial_state]


def floquet_projection(history: StateHistory,
                       branch_set: fl.FloquetBranchSet) -> TransitionRecord:
    """Project sampled states onto the instantaneous Floquet branch basis."""
    pops = np.empty((len(history.times), branch_set.n_levels))
    for s, (psi, k) in enumerate(zip(history.states, history.grid_indices)):
        amps = branch_set.modes[k].conj().T @ psi
        pops[s] = np.abs(amps) ** 2
    other = np.clip(1.0 - pops.sum(axis=1), 0.0, None)
    initial = int(np.argmax(pops[0]))
    return TransitionRecord(initial_state=initial, times=history.times,
                            populations=pops, other=other,
                            survival=float(pops[-1, initial]),
                            collapse_applied=False)


def readout_transition_probability(circuit: CircuitParams, protocol: DriveProtocol,
                                   collapse: bool,
                                   branch_set: fl.FloquetBranchSet,
                                   trajectory: ResonatorTrajectory | None = None,
                                   dispersion=None,
                                   sample_dt: float = PROJECTION_CADENCE_NS) -> TransitionRecord:
    """Full pulse pipeline: trajectory, evolution, projection, optional collapse.

    With collapse, Floquet-basis coherences are zeroed at the end of the
    ramp-up: P(i|i) = sum_j P_down(i|j) P_up(j|i).  Without it a single
    coherent evolution is projected, which exhibits interference fringes.
    """
    i0 = protocol.initial_state
    if trajectory is None:
        if dispersion is None:
            crossings = fl.detect_avoided_crossings(branch_set)
            track = fl.diabatic_track(branch_set, crossings, i0)
            dispersion = fl.dispersion_curve(branch_set, i0, track)
        trajectory = resonator_trajectory(protocol, dispersion, circuit.kappa)

    history = evolve_schrodinger(circuit, protocol, trajectory, branch_set,
                                 sample_dt=sample_dt)
    record = floquet_projection(history, branch_set)
    record.initial_state = i0
    record.n_r_max = trajectory.n_r_max
    record.survival = float(record.populations[-1, i0])
    if not collapse:
        return record

    basis_up = branch_set.modes[history.index_up]
    p_up = np.abs(basis_up.conj().T @ history.state_up) ** 2
    p_down = _ramp_down_transfer(circuit, protocol, trajectory, branch_set,
                                 history)
    finals = p_down @ p_up
    record.collapse_applied = True
    record.survival = float(finals[i0])
    # the time-resolved populations beyond t_up now describe the incoherent
    # mixture; replace the final row so the record is self-consistent
    record.populations[-1] = finals
    return record


def _ramp_down_transfer(circuit, protocol, trajectory, branch_set, history):
    """P_down(i|j): ramp-up-end Floquet mode j to final-time mode i."""
    period = TWO_PI / protocol.omega_d
    phases = np.exp(-1j * branch_set.quasienergies * period)
    t_starts = np.arange(history.n_periods) * period
    eps_t = trajectory.eps_t_at(t_starts, circuit.g)
    step = branch_set.eps_grid[1] - branch_set.eps_grid[0]
    indices = np.clip(np.round(eps_t / step).astype(int), 0,
                      len(branch_set.eps_grid) - 1)
    m = branch_set.modes[history.index_up].copy()
    for p in range(history.periods_up, history.n_periods):
        k = indices[p]
        z = branch_set.modes[k]
        m = z @ (phases[k][:, None] * (z.conj().T @ m))
    final_basis = branch_set.modes[indices[-1]]
    return np.abs(final_basis.conj().T @ m) ** 2


def landau_zener_transition_probability(gap: float, speed: float,
                                        span: float = 40.0,
                                        steps_per_unit: int = 400) -> float:
    """Numerically integrated two-level linear sweep through a crossing.

    H(t) = (speed * t / 2) sz + (gap / 2) sx swept over +-span natural
    widths; returns the probability of remaining on the initial diabatic
    state, to compare against exp(-pi gap^2 / (2 speed)).
    """
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    t_scale = max(gap / speed, 1.0 / np.sqrt(speed))
    t_max = span * t_scale

    def h(t):
        return 0.5 * speed * t * sz + 0.5 * gap * sx

    steps = int(steps_per_unit * span)
    u = fl.evolve_unitary(h, -t_max, t_max, steps)
    # start on the lower diabatic state (sz = -1 at t -> -inf)
    return float(np.abs(u[1, 1]) ** 2)
