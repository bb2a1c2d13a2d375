"""Norm-bound linear differential inclusions fitted from sampled dynamics.

A triple (N1, N2, N3) describes the matrix set {N1 + N2 D N3 : ||D|| <= 1}.
The fit used here keeps N2 = beta * I and N3 = I, so membership of a sample
S reduces to a spectral-norm test ||S - N1|| <= beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import JointState, RobotModel, coriolis_matrix, jacobian, linearize, mass_matrix

MEMBERSHIP_TOL = 1e-9


class EmptySamples(ValueError):
    pass


@dataclass(frozen=True)
class NormBoundTriple:
    N1: np.ndarray
    N2: np.ndarray
    N3: np.ndarray

    @property
    def beta(self) -> float:
        """Radius of the uncertainty ball (N2 = beta * I convention)."""
        return float(self.N2[0, 0]) if self.N2.size else 0.0

    def membership_violation(self, S: np.ndarray) -> float:
        """How far S sits outside the set; <= 0 means member."""
        return float(np.linalg.norm(S - self.N1, ord=2) - self.beta)

    def contains(self, S: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.membership_violation(S) <= tol


@dataclass(frozen=True)
class StateBox:
    """Per-joint position half-widths (rad) and velocity half-widths (rad/s)
    centered on an equilibrium."""

    pos_halfwidth: np.ndarray
    vel_halfwidth: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos_halfwidth", np.asarray(self.pos_halfwidth, dtype=float))
        object.__setattr__(self, "vel_halfwidth", np.asarray(self.vel_halfwidth, dtype=float))
        if np.any(self.pos_halfwidth < 0) or np.any(self.vel_halfwidth < 0):
            raise ValueError("box half-widths must be nonnegative")

    def scaled(self, factor: float) -> "StateBox":
        return StateBox(self.pos_halfwidth * factor, self.vel_halfwidth * factor)


@dataclass(frozen=True)
class NormBoundLDI:
    """Uncertainty triples for the velocity-coefficient block, the inverse
    inertia, and the Jacobian, valid on a state box around q_e."""

    A: NormBoundTriple
    B: NormBoundTriple
    J: NormBoundTriple
    q_e: np.ndarray
    box: StateBox


def fit_norm_bound(samples: list[np.ndarray]) -> NormBoundTriple:
    """Center at the element-wise mean, radius = max spectral deviation."""
    if len(samples) == 0:
        raise EmptySamples("need at least one sample matrix")
    stack = np.asarray(samples, dtype=float)
    N1 = stack.mean(axis=0)
    beta = max(float(np.linalg.norm(S - N1, ord=2)) for S in stack)
    n = N1.shape[0]
    return NormBoundTriple(N1, beta * np.eye(n), np.eye(N1.shape[1]))


def _grid(center: np.ndarray, halfwidth: np.ndarray, density: int) -> np.ndarray:
    axes = [np.linspace(c - h, c + h, density) if h > 0 else np.array([c]) for c, h in zip(center, halfwidth)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_ldi(
    model: RobotModel,
    q_e: np.ndarray,
    box: StateBox,
    grid_pos: int = 5,
    grid_vel: int = 3,
    safety: float = 1.1,
) -> NormBoundLDI:
    """Fit the three uncertainty triples on a grid over the box.

    Velocities enter only through the Coriolis argument of the A samples.
    Fitted radii are inflated by the multiplicative safety factor to cover
    states between grid points.
    """
    if grid_pos < 2 or grid_vel < 2:
        raise ValueError("grid densities must be >= 2")
    q_e = np.asarray(q_e, dtype=float)
    q_grid = _grid(q_e, box.pos_halfwidth, grid_pos)
    v_grid = _grid(np.zeros_like(q_e), box.vel_halfwidth, grid_vel)

    a_samples = []
    b_samples = []
    j_samples = []
    for q in q_grid:
        Minv = np.linalg.inv(mass_matrix(model, q))
        b_samples.append(Minv)
        j_samples.append(jacobian(model, q))
        for v in v_grid:
            a_samples.append(Minv @ coriolis_matrix(model, JointState(q, v)))

    def inflated(triple: NormBoundTriple) -> NormBoundTriple:
        n = triple.N1.shape[0]
        return NormBoundTriple(triple.N1, safety * triple.beta * np.eye(n), triple.N3)

    return NormBoundLDI(
        A=inflated(fit_norm_bound(a_samples)),
        B=inflated(fit_norm_bound(b_samples)),
        J=inflated(fit_norm_bound(j_samples)),
        q_e=q_e,
        box=box,
    )


def degenerate_ldi(model: RobotModel, q_e: np.ndarray) -> NormBoundLDI:
    """Zero-uncertainty inclusion: triples collapse to the linearization."""
    lin = linearize(model, q_e)
    n = model.n
    z = np.zeros((n, n))
    eye = np.eye(n)
    return NormBoundLDI(
        A=NormBoundTriple(lin.A_block, z, eye),
        B=NormBoundTriple(lin.B_block, z, eye),
        J=NormBoundTriple(lin.J_e, z, eye),
        q_e=np.asarray(q_e, dtype=float),
        box=StateBox(np.zeros(n), np.zeros(n)),
    )


@dataclass(frozen=True)
class LDIValidationReport:
    n_samples: int
    max_violation_A: float
    max_violation_B: float
    max_violation_J: float

    @property
    def max_violation(self) -> float:
        return max(self.max_violation_A, self.max_violation_B, self.max_violation_J)

    @property
    def passed(self) -> bool:
        return self.max_violation <= MEMBERSHIP_TOL


def validate_ldi(
    ldi: NormBoundLDI,
    model: RobotModel,
    n_random: int,
    rng: np.random.Generator | None = None,
) -> LDIValidationReport:
    """Check membership of fresh uniform samples drawn inside the box."""
    if n_random < 1:
        raise ValueError("n_random must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = len(ldi.q_e)
    qs = ldi.q_e + rng.uniform(-1.0, 1.0, size=(n_random, n)) * ldi.box.pos_halfwidth
    vs = rng.uniform(-1.0, 1.0, size=(n_random, n)) * ldi.box.vel_halfwidth
    va = vb = vj = -np.inf
    for q, v in zip(qs, vs):
        Minv = np.linalg.inv(mass_matrix(model, q))
        va = max(va, ldi.A.membership_violation(Minv @ coriolis_matrix(model, JointState(q, v))))
        vb = max(vb, ldi.B.membership_violation(Minv))
        vj = max(vj, ldi.J.membership_violation(jacobian(model, q)))
    return LDIValidationReport(n_random, va, vb, vj)
