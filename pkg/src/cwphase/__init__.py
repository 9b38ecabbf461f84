"""Continuous phase estimation of a coherent beam with a diffusing phase.

Six estimation schemes (canonical, optimal heterodyne, windowed heterodyne,
windowed adaptive, semi-optimal adaptive, simple adaptive) are simulated
against a Wiener phase and scored by the steady-state Holevo variance.
"""

from .errors import ConfigurationError, NumericalInstabilityError
from .experiment import SweepRow, SweepSpec, report, resolve_params, run_sweep
from .metrics import HolevoAccumulator, asymptote, holevo_from_errors, holevo_from_sharpness
from .schemes import SchemeKind, TrajectoryResult, run_ensemble, run_trajectory
from .stochastic import RngStream, SimParams, TruePhase

__all__ = [
    "ConfigurationError", "NumericalInstabilityError", "SweepRow", "SweepSpec", "report",
    "resolve_params", "run_sweep", "HolevoAccumulator", "asymptote", "holevo_from_errors",
    "holevo_from_sharpness", "SchemeKind", "TrajectoryResult", "run_ensemble", "run_trajectory",
    "RngStream", "SimParams", "TruePhase",
]
