"""Scheduling MILPs: builders, built-in solvers, oracle, LP text export."""

from .bnb import solve_bnb
from .build import (
    Schedule,
    SchedulingProblem,
    activation_window_sum,
    build_committed,
    build_general,
    build_peak_reduction,
    build_self_consumption,
    window_start,
)
from .lpfile import export_lp, format_lp, parse_lp, problems_structurally_equal
from .oracle import BruteForceResult, brute_force_schedule
from .problem import LpSolution, MilpProblem, MilpSolution, SolverOptions
from .simplex import SimplexStallError, solve_lp

__all__ = [
    "BruteForceResult",
    "LpSolution",
    "MilpProblem",
    "MilpSolution",
    "Schedule",
    "SchedulingProblem",
    "SimplexStallError",
    "SolverOptions",
    "activation_window_sum",
    "brute_force_schedule",
    "build_committed",
    "build_general",
    "build_peak_reduction",
    "build_self_consumption",
    "export_lp",
    "format_lp",
    "parse_lp",
    "problems_structurally_equal",
    "solve_bnb",
    "solve_lp",
    "window_start",
]
