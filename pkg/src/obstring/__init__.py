"""Simulation of a viscoelastic string dropped on a rigid obstacle.

The string obeys a damped wave equation with pinned ends; the obstacle
constraint is enforced by a velocity penalty active only while the string
is below the barrier and moving downward.  The package provides an
implicit finite-difference solver, an independent sine-mode spectral
solver for cross-validation, energy/contact diagnostics, and a CLI.
"""

from .core import (
    ConfigurationError,
    FieldSeries,
    Grid1D,
    InitialData,
    NumericBlowupError,
    Physics,
    ProbeContractError,
    SimConfig,
    StringState,
    TimeGrid,
    evaluate_initial,
    example1_config,
    example2_config,
    single_mode_config,
    validate_config,
)
from .fd_solver import first_step, penalty_force, run, scheme_residual, step
from .trisolve import (
    ThomasFactorization,
    Tridiagonal,
    ZeroPivotError,
    assemble_step_matrix,
    dense_solve,
    thomas_solve,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "FieldSeries",
    "Grid1D",
    "InitialData",
    "NumericBlowupError",
    "Physics",
    "ProbeContractError",
    "SimConfig",
    "StringState",
    "ThomasFactorization",
    "TimeGrid",
    "Tridiagonal",
    "ZeroPivotError",
    "assemble_step_matrix",
    "dense_solve",
    "evaluate_initial",
    "example1_config",
    "example2_config",
    "first_step",
    "penalty_force",
    "run",
    "scheme_residual",
    "single_mode_config",
    "step",
    "thomas_solve",
    "validate_config",
]
