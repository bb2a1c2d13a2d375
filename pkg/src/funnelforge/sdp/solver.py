"""Log-barrier path-following solver for small dense maxdet problems.

Phase 1 finds a strictly feasible point by minimizing an auxiliary slack
added to every block; phase 2 follows the central path of

    minimize  -log det G_det(x) - (1/t) * sum_k log det G_k(x)

with damped Newton steps, multiplying t by the barrier reduction factor
until the duality-gap bound (total constraint size / t) drops below tol.
"""

from __future__ import annotations

import numpy as np

from .problem import Constraint, MaxDetProblem, MaxDetSolution

BARRIER_FACTOR = 10.0
FEAS_MARGIN = 1e-9
NEWTON_DECREMENT_TOL = 1e-11
MAX_LINESEARCH = 60


class _Block:
    """One PSD block: value/gradient/Hessian of -log det G(x)."""

    __slots__ = ("tensor", "A", "const")

    def __init__(self, tensor: np.ndarray):
        self.tensor = tensor
        self.A = tensor[:-1]
        self.const = tensor[-1]

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("k,kab->ab", x, self.A) + self.const

    def chol(self, x: np.ndarray) -> np.ndarray | None:
        G = self.matrix(x)
        try:
            return np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            return None


def _logdet_from_chol(L: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _inv_from_chol(L: np.ndarray) -> np.ndarray:
    n = L.shape[0]
    Linv = np.linalg.solve(L, np.eye(n))
    return Linv.T @ Linv


def _barrier_value(blocks, weights, x) -> float | None:
    """Weighted sum of -log det over blocks; None if any block leaves the cone."""
    total = 0.0
    for blk, w in zip(blocks, weights):
        L = blk.chol(x)
        if L is None:
            return None
        total -= w * _logdet_from_chol(L)
    return total


def _solve_newton_system(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    reg = 0.0
    scale = max(float(np.trace(H)) / max(len(g), 1), 1e-30)
    for _ in range(8):
        try:
            L = np.linalg.cholesky(H + reg * np.eye(len(g)))
            return -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            reg = scale * 1e-14 if reg == 0.0 else reg * 100.0
    return -np.linalg.lstsq(H + reg * np.eye(len(g)), g, rcond=None)[0]


def _center(blocks, weights, lin, x, budget, stop=None):
    """Damped Newton on lin @ x + sum_i weights[i] * (-log det G_i(x)).

    Returns (x, steps_used, converged). `stop` may end centering early.
    """
    steps = 0
    while steps < budget:
        g = lin.copy()
        H = np.zeros((len(x), len(x)))
        fval = float(lin @ x)
        for blk, w in zip(blocks, weights):
            L = blk.chol(x)
            if L is None:
                raise FloatingPointError("iterate left the cone interior")
            fval -= w * _logdet_from_chol(L)
            S = _inv_from_chol(L)
            g -= w * np.einsum("jab,ba->j", blk.A, S)
            V = np.einsum("ab,jbc->jac", S, blk.A)
            H += w * np.einsum("jab,kba->jk", V, V)
        dx = _solve_newton_system(H, g)
        lam2 = float(-g @ dx)
        if lam2 <= 0.0:
            # regularized direction lost descent; treat as converged
            return x, steps, True
        if 0.5 * lam2 <= NEWTON_DECREMENT_TOL:
            return x, steps, True
        alpha = 1.0
        accepted = False
        for _ in range(MAX_LINESEARCH):
            cand = x + alpha * dx
            fcand = _barrier_value(blocks, weights, cand)
            if fcand is not None and float(lin @ cand) + fcand <= fval - 0.25 * alpha * lam2:
                x = cand
                accepted = True
                break
            alpha *= 0.5
        steps += 1
        if not accepted:
            return x, steps, True  # stalled at numerical precision
        if stop is not None and stop(x):
            return x, steps, True
    return x, steps, False


def _min_eig(constraints: list[Constraint], x: np.ndarray) -> float:
    worst = np.inf
    for c in constraints:
        G = np.einsum("k,kab->ab", np.concatenate([x, [1.0]]), c.psd_tensor())
        worst = min(worst, float(np.linalg.eigvalsh(G)[0]))
    return worst


def solve(problem: MaxDetProblem, tol: float = 1e-7, max_iter: int = 200) -> MaxDetSolution:
    """Maximize log det of the designated variable subject to the LMIs."""
    if problem.detvar is None:
        raise ValueError("problem has no detvar")
    if tol <= 0:
        raise ValueError("tol must be positive")
    problem._freeze()
    d = problem.dim
    det_expr = problem.var(problem.detvar)
    det_tensor = np.moveaxis(det_expr.coef, 2, 0)
    con_tensors = [c.psd_tensor() for c in problem.constraints]
    m_total = sum(c.size for c in problem.constraints)

    def finish(status, x, iters):
        values = problem.unpack(x)
        Q = np.asarray(values[problem.detvar])
        eigs = np.linalg.eigvalsh(Q)
        obj = float(np.sum(np.log(eigs))) if np.all(eigs > 0) else -np.inf
        return MaxDetSolution(
            status=status,
            values=values,
            objective=obj,
            max_residual=_min_eig(problem.constraints, x) if problem.constraints else np.inf,
            newton_iterations=iters,
        )

    # initial guess: detvar = identity, everything else zero
    x = np.zeros(d)
    spec = problem.specs[problem.detvar]
    k = spec.offset
    for i in range(spec.rows):
        for j in range(i, spec.rows):
            if i == j:
                x[k] = 1.0
            k += 1

    used = 0

    # ---- phase 1: feasibility via an auxiliary slack on every block ----------
    lam_min = _min_eig(problem.constraints, x) if problem.constraints else np.inf
    det0 = np.einsum("k,kab->ab", np.concatenate([x, [1.0]]), det_tensor)
    lam_min = min(lam_min, float(np.linalg.eigvalsh(det0)[0]))
    if lam_min <= 2.0 * FEAS_MARGIN:
        ext = []
        for t in [det_tensor] + con_tensors:
            m = t.shape[1]
            te = np.zeros((d + 2, m, m))
            te[:d] = t[:d]
            te[d] = np.eye(m)  # slack coefficient
            te[d + 1] = t[d]
            ext.append(_Block(te))
        m_ext = m_total + det_tensor.shape[1]
        y = np.concatenate([x, [max(0.0, -lam_min) + 1.0]])
        lin = np.zeros(d + 1)
        lin[d] = 1.0
        tau = 1.0
        feasible = False
        while used < max_iter:
            w = np.full(len(ext), 1.0 / tau)
            y, steps, _ = _center(ext, w, lin, y, max_iter - used, stop=lambda z: z[d] <= -2.0 * FEAS_MARGIN)
            used += steps
            if y[d] <= -2.0 * FEAS_MARGIN:
                feasible = True
                break
            if y[d] - m_ext / tau > FEAS_MARGIN:
                return finish("Infeasible", y[:d], used)
            if tau > 1e13:
                return finish("Infeasible", y[:d], used)
            tau *= BARRIER_FACTOR
        if not feasible:
            return finish("MaxIterations", y[:d], used)
        x = y[:d]

    # ---- phase 2: follow the central path of the maxdet objective ------------
    blocks = [_Block(det_tensor)] + [_Block(t) for t in con_tensors]
    lin = np.zeros(d)
    t = 1.0
    while True:
        w = np.concatenate([[1.0], np.full(len(con_tensors), 1.0 / t)])
        x, steps, converged = _center(blocks, w, lin, x, max_iter - used)
        used += steps
        if not converged and used >= max_iter:
            return finish("MaxIterations", x, used)
        if m_total / t <= tol:
            break
        t *= BARRIER_FACTOR
    return finish("Optimal", x, used)
