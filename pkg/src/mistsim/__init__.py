"""Simulation of measurement-induced state transitions in driven transmons.

Builds the multiharmonic transmon and its readout circuit, fits circuit
parameters to spectroscopy, tracks Floquet branches of the driven qubit to
locate ionization thresholds, integrates the semiclassical readout dynamics,
and validates against quantum-trajectory simulations.
"""

from .circuit import (CircuitParams, DressedSpectrum, ResonanceLine,
                      build_coupled_hamiltonian, dispersive_shift,
                      dressed_spectrum, pulled_resonator_frequency,
                      resonance_condition_map)
from .dynamics import (DriveProtocol, ResonatorTrajectory, TransitionRecord,
                       calibrate_photon_axis, evolve_schrodinger,
                       floquet_projection, landau_zener_transition_probability,
                       readout_transition_probability, resonator_trajectory,
                       steady_state_photon_number)
from .errors import ConfigError, LabelingError, NumericalError
from .fitting import (FitResult, SpectroscopyTargets, Target, fit, loss,
                      standard_targets)
from .floquet import (AvoidedCrossing, DiabaticTrack, DispersionCurve,
                      FloquetBranchSet, FloquetPoint, detect_avoided_crossings,
                      diabatic_track, dispersion_curve,
                      effective_resonator_frequency, evolve_unitary,
                      floquet_eigensystem, landau_zener_probability,
                      one_period_propagator, track_branches)
from .presets import PRESET_NAMES, preset
from .trajectories import (TrajectoryEnsemble, branch_survival,
                           build_branch_projector, evolve_trajectories)
from .transmon import (ChargeOperator, Spectrum, TransmonParams,
                       build_charge_hamiltonian, charge_dispersion,
                       charge_operator, eigensystem, flux_scaled_ej,
                       parity_shifted, series_inductance_harmonics, spectrum,
                       transition_frequency)
from .units import ghz, mhz, to_ghz, to_mhz

__version__ = "0.1.0"
