"""Exact LP/MILP solving: bounded simplex, branch and bound, enumeration oracle."""

from .branch import MilpSolution, SolverOptions, brute_force_milp, solve_milp
from .lpfile import to_lp_text, write_lp
from .model import MilpModel
from .simplex import LpModel, LpSolution, dual_objective, max_residual, solve_lp

__all__ = [
    "LpModel",
    "LpSolution",
    "MilpModel",
    "MilpSolution",
    "SolverOptions",
    "brute_force_milp",
    "dual_objective",
    "max_residual",
    "solve_lp",
    "solve_milp",
    "to_lp_text",
    "write_lp",
]
