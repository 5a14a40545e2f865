"""Mixed binary linear programming: model, exact solver, checker, LP I/O."""

from .bnb import MilpSolution, solve_exact
from .check import IncompleteAssignmentError, check_assignment
from .lpformat import LpExportError, export_lp, read_solution_file
from .model import BINARY, CONTINUOUS, EQ, GE, LE, LinearConstraint, MilpModel, MilpVar, ModelError
from .simplex import DenseSimplex, NumericalError

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE",
    "DenseSimplex", "IncompleteAssignmentError", "LinearConstraint", "LpExportError",
    "MilpModel", "MilpSolution", "MilpVar", "ModelError", "NumericalError",
    "check_assignment", "export_lp", "read_solution_file", "solve_exact",
]
