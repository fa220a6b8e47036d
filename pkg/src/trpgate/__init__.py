"""Twisted rapid passage qubit control: resonances, dynamics, gates and sweeps."""

from .dynamics import (
    FAULT_TOLERANCE_THRESHOLD,
    IntegrationError,
    IntegratorSettings,
    Trajectory,
    TrajectoryPoint,
    adiabatic_frame,
    dressed_frame,
    evolve,
    final_probability,
    landau_zener,
    not_gate_error,
    pi_pulse_duration,
)
from .profiles import (
    DimensionlessParams,
    ExperimentalParams,
    Regime,
    ResonanceSet,
    SweepProfile,
    energy_gap,
    eta_from_experiment,
    eta_from_theory,
    frequency_schedules,
    inversion_time_quartic,
    lab_frame_field,
    phase,
    resonance_times,
    rotating_frame_field,
)

__version__ = "0.1.0"
