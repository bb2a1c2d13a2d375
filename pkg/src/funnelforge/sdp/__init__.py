"""Determinant-maximization SDP: affine LMI blocks, solver, verification."""

from .affine import AffExpr, blockmat, const_expr
from .problem import (
    Constraint,
    DimensionMismatch,
    MaxDetProblem,
    MaxDetSolution,
    problem_to_json,
    solution_to_json,
)
from .solver import solve
from .verify import ResidualReport, check_solution, jacobi_eigenvalues

__all__ = [
    "AffExpr",
    "blockmat",
    "const_expr",
    "Constraint",
    "DimensionMismatch",
    "MaxDetProblem",
    "MaxDetSolution",
    "problem_to_json",
    "solution_to_json",
    "solve",
    "ResidualReport",
    "check_solution",
    "jacobi_eigenvalues",
]
