"""Gradient methods built around the NY stepsize."""
from .model import (
    DegenerateSubspace,
    InvalidCurvature,
    LineSearchFailure,
    NonPositiveCurvature,
    NumericalFailure,
    Objective,
    QuadraticProblem,
    RunReport,
    SolverConfig,
    Status,
    StepKind,
)
from .solvers import Strategy, five_step_3d, solve_any, solve_ny, solve_strategy

__all__ = [
    "DegenerateSubspace",
    "InvalidCurvature",
    "LineSearchFailure",
    "NonPositiveCurvature",
    "NumericalFailure",
    "Objective",
    "QuadraticProblem",
    "RunReport",
    "SolverConfig",
    "Status",
    "StepKind",
    "Strategy",
    "five_step_3d",
    "solve_any",
    "solve_ny",
    "solve_strategy",
]
