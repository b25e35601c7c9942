"""Sparse identification, two-phase estimation and forecasting of VARMA models."""
from .core import (
    AR,
    MA,
    LagPolynomial,
    PanelData,
    VarmaModel,
    check_invertible,
    check_stable,
    invert_to_var,
    pi_equivalent,
    yule_walker_residual,
)
from .evaluate import cv_select, dm_test, expanding_window_eval, lag_matrix, msfe
from .exceptions import (
    ConvergenceError,
    DegenerateTestError,
    DomainError,
    InfeasibleError,
    InvalidInputError,
    SolverError,
    SparseVarmaError,
    StudyAbortedError,
)
from .forecast import ForecastRequest, forecast_h
from .identify import IdentProblem, IdentTarget, limit_target, solve_target
from .penalty import HLAG, L1, LambdaGrid, PenaltySpec, lambda_max, make_grid, penalty_value, prox
from .pipeline import FitConfig, Tuning, default_orders, phase1_fit, phase2_fit, two_phase_fit
from .simulate import DgpSpec, build_dgp, fig1_model, simulate_path
from .solver import RowProblem, solve_all_rows, solve_row, spectral_step

__version__ = "0.1.0"

__all__ = [
    "AR", "MA", "L1", "HLAG",
    "LagPolynomial", "VarmaModel", "PanelData",
    "check_stable", "check_invertible", "invert_to_var", "pi_equivalent", "yule_walker_residual",
    "PenaltySpec", "LambdaGrid", "penalty_value", "prox", "lambda_max", "make_grid",
    "RowProblem", "solve_row", "solve_all_rows", "spectral_step",
    "DgpSpec", "build_dgp", "fig1_model", "simulate_path",
    "FitConfig", "Tuning", "default_orders", "phase1_fit", "phase2_fit", "two_phase_fit",
    "IdentProblem", "IdentTarget", "solve_target", "limit_target",
    "cv_select", "msfe", "dm_test", "expanding_window_eval", "lag_matrix",
    "ForecastRequest", "forecast_h",
    "SparseVarmaError", "InvalidInputError", "DomainError", "SolverError", "InfeasibleError",
    "ConvergenceError", "DegenerateTestError", "StudyAbortedError",
]
