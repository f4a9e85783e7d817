"""Pseudo-spectral simulator and estimate-monitoring harness for 2-D dissipative IPM.

    rho_t + u . grad rho = -Lambda^alpha rho,   u = (-R1 R2 rho, R1^2 rho)

on a periodic box, in full form or split as ``rho = rho0(x2, t) + rho1``.
"""
__version__ = "0.1.0"

from .params import ConfigError, ParamSet, load_config
from .spectral import Field, Grid1D, Grid2D, SpecField, inverse_transform, transform
from .heat1d import DecayScan, NormSpec, Profile, decay_scan, heat_propagate
from .solver import (
    BlowUp,
    FullState,
    ResolutionExhausted,
    SolverAbort,
    SolverState,
    advance,
    compute_velocity,
    initial_full_state,
    initial_state,
    step,
)
from .diagnostics import (
    DiagnosticsRecord,
    compute_record,
    energy_balance,
    gronwall_envelope,
    inequality_ratios,
    threshold_monitor,
)
from .runner import RunResult, load_checkpoint, run, run_full, save_checkpoint

__all__ = [
    "BlowUp", "ConfigError", "DecayScan", "DiagnosticsRecord", "Field", "FullState",
    "Grid1D", "Grid2D", "NormSpec", "ParamSet", "Profile", "ResolutionExhausted",
    "RunResult", "SolverAbort", "SolverState", "SpecField", "advance", "compute_record",
    "compute_velocity", "decay_scan", "energy_balance", "gronwall_envelope",
    "heat_propagate", "inequality_ratios", "initial_full_state", "initial_state",
    "inverse_transform", "load_checkpoint", "load_config", "run", "run_full",
    "save_checkpoint", "step", "threshold_monitor", "transform",
]
