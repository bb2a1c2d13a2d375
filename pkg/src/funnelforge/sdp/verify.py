"""Solution checking, deliberately independent of the solver's linear algebra.

Eigenvalues are computed with a cyclic Jacobi rotation sweep rather than the
LAPACK-backed routines the solver uses, so the residual report is a genuine
second opinion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import DimensionMismatch, MaxDetProblem


def jacobi_eigenvalues(A: np.ndarray, sweeps: int = 64) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 1:
        return A[0].copy()
    scale = max(float(np.max(np.abs(A))), 1.0)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Jp = A[:, p].copy()
                Jq = A[:, q].copy()
                A[:, p] = c * Jp - s * Jq
                A[:, q] = s * Jp + c * Jq
                Jp = A[p, :].copy()
                Jq = A[q, :].copy()
                A[p, :] = c * Jp - s * Jq
                A[q, :] = s * Jp + c * Jq
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))


@dataclass(frozen=True)
class ConstraintResidual:
    name: str
    sense: str
    min_eigenvalue: float  # of the >=0 form; nonnegative means satisfied


@dataclass(frozen=True)
class ResidualReport:
    residuals: list[ConstraintResidual]
    objective: float
    max_residual: float

    def satisfied(self, tol: float) -> bool:
        return self.max_residual >= -tol


def check_solution(problem: MaxDetProblem, values: dict, tol: float = 1e-7) -> ResidualReport:
    """Evaluate every constraint block at the candidate values.

    Pure verification: no solving, and the eigenvalue routine is separate
    from the solver's. Raises DimensionMismatch on malformed candidates.
    """
    x = problem.pack(values)
    residuals = []
    worst = np.inf
    for c in problem.constraints:
        G = np.einsum("k,kab->ab", np.concatenate([x, [1.0]]), c.psd_tensor())
        lam = float(jacobi_eigenvalues(G)[0])
        residuals.append(ConstraintResidual(c.name, c.sense, lam))
        worst = min(worst, lam)
    if problem.detvar is None:
        raise ValueError("problem has no detvar")
    Q = np.asarray(values[problem.detvar], dtype=float)
    spec = problem.specs[problem.detvar]
    if Q.shape != (spec.rows, spec.cols):
        raise DimensionMismatch(f"detvar shape {Q.shape} != {(spec.rows, spec.cols)}")
    eigs = jacobi_eigenvalues(0.5 * (Q + Q.T))
    objective = float(np.sum(np.log(eigs))) if np.all(eigs > 0) else -np.inf
    return ResidualReport(residuals, objective, worst if residuals else np.inf)
