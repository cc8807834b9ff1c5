"""Numerical lab for the transformed thin-film equation with Navier slip, ``x u_t + p(D) u = N(u)``.

Submodules
----------
exponents
    The polynomial ``p``, the exponent lattice, weights and derivative schedules.
loggrid
    Logarithmic grids, finite differences, weighted norms and expansion fits.
operators
    The 5-linear form, the nonlinearity and the velocity form.
linear_solver
    Theta-scheme for the linear problem and its diagnostics.
nonlinear_solver
    Picard iteration and decay diagnostics.
hodograph
    Transforms to and from physical variables and expansion transport.
"""

from .exponents import BETA, lattice, p_poly, schedule, weight_set
from .loggrid import GridFunction, LogGrid, Trajectory, extract_expansion
from .linear_solver import LinearProblem, LinearSolver, solve_linear
from .nonlinear_solver import PicardConfig, picard_solve
from .operators import m_apply, nonlinearity

__version__ = "0.1.0"

__all__ = [
    "BETA",
    "lattice",
    "p_poly",
    "schedule",
    "weight_set",
    "LogGrid",
    "GridFunction",
    "Trajectory",
    "extract_expansion",
    "LinearProblem",
    "LinearSolver",
    "solve_linear",
    "PicardConfig",
    "picard_solve",
    "m_apply",
    "nonlinearity",
]
