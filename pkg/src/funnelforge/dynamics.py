"""Planar n-link manipulator dynamics and kinematics.

Closed-form inertia/Coriolis terms are implemented for the 2-link arm with
point masses at the distal end of each link, moving in a horizontal plane
(no gravity term). All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SINGULARITY_TOL = 1e-6


class UnsupportedModel(ValueError):
    """Raised when closed-form dynamics are requested for n != 2."""


class Unreachable(ValueError):
    """Raised when a workspace target lies outside the reachable annulus."""


@dataclass(frozen=True)
class RobotModel:
    """Geometric and inertial parameters of the arm.

    link_lengths are in meters, point_masses in kg (each mass sits at the
    distal end of its link), torque_limits in N*m per joint.
    """

    link_lengths: tuple[float, ...]
    point_masses: tuple[float, ...]
    torque_limits: tuple[float, ...]
    base_position: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        n = len(self.link_lengths)
        if n < 1:
            raise ValueError("need at least one link")
        if len(self.point_masses) != n or len(self.torque_limits) != n:
            raise ValueError("link_lengths, point_masses, torque_limits must have equal length")
        if any(l <= 0 for l in self.link_lengths):
            raise ValueError("link lengths must be strictly positive")
        if any(m <= 0 for m in self.point_masses):
            raise ValueError("point masses must be strictly positive")
        if any(u <= 0 for u in self.torque_limits):
            raise ValueError("torque limits must be strictly positive")

    @property
    def n(self) -> int:
        return len(self.link_lengths)

    @property
    def reach(self) -> float:
        return float(sum(self.link_lengths))

    def _require_two_link(self):
        if self.n != 2:
            raise UnsupportedModel(f"closed-form dynamics only ship for n=2, got n={self.n}")


@dataclass(frozen=True)
class JointState:
    """Joint positions q (rad) and velocities qdot (rad/s)."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=float))
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ValueError("joint state entries must be finite")
        if self.q.shape != self.qdot.shape:
            raise ValueError("q and qdot must have the same shape")


@dataclass(frozen=True)
class LinearizedModel:
    """State-space blocks of the dynamics linearized at (q_e, 0).

    A_block multiplies the joint velocity in the acceleration row; for the
    point-mass planar arm it vanishes because the Coriolis matrix is zero at
    rest. B_block is the inverse inertia matrix, J_e the end-effector
    Jacobian at q_e.
    """

    q_e: np.ndarray
    x_e: np.ndarray
    A_block: np.ndarray
    B_block: np.ndarray
    J_e: np.ndarray


class IKSolution(NamedTuple):
    q: np.ndarray
    near_singular: bool


def mass_matrix(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """Symmetric positive-definite inertia matrix M(q) in kg*m^2."""
    model._require_two_link()
    q = np.asarray(q, dtype=float)
    l1, l2 = model.link_lengths
    m1, m2 = model.point_masses
    c2 = np.cos(q[1])
    m11 = (m1 + m2) * l1**2 + m2 * l2**2 + 2.0 * m2 * l1 * l2 * c2
    m12 = m2 * l2**2 + m2 * l1 * l2 * c2
    m22 = m2 * l2**2
    return np.array([[m11, m12], [m12, m22]])


def coriolis_matrix(model: RobotModel, state: JointState) -> np.ndarray:
    """Coriolis/centrifugal coefficient matrix C(q, qdot).

    Convention follows the Christoffel symbols of M, so Mdot - 2C is
    skew-symmetric.
    """
    model._require_two_link()
    l1, l2 = model.link_lengths
    m2 = model.point_masses[1]
    s2 = np.sin(state.q[1])
    qd1, qd2 = state.qdot
    h = -m2 * l1 * l2 * s2
    return np.array([[h * qd2, h * (qd1 + qd2)], [-h * qd1, 0.0]])


def forward_kinematics(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """End-effector position in meters for joint angles q."""
    model._require_two_link()
    q = np.asarray(q, dtype=float)
    l1, l2 = model.link_lengths
    bx, by = model.base_position
    return np.array(
        [
            bx + l1 * np.cos(q[0]) + l2 * np.cos(q[0] + q[1]),
            by + l1 * np.sin(q[0]) + l2 * np.sin(q[0] + q[1]),
        ]
    )


def jacobian(model: RobotModel, q: np.ndarray) -> np.ndarray:
    """End-effector Jacobian d(forward_kinematics)/dq, shape (2, 2)."""
    model._require_two_link()
    q = np.asarray(q, dtype=float)
    l1, l2 = model.link_lengths
    s1, c1 = np.sin(q[0]), np.cos(q[0])
    s12, c12 = np.sin(q[0] + q[1]), np.cos(q[0] + q[1])
    return np.array(
        [
            [-l1 * s1 - l2 * s12, -l2 * s12],
            [l1 * c1 + l2 * c12, l2 * c12],
        ]
    )


def inverse_kinematics(
    model: RobotModel,
    x: np.ndarray,
    branch: str = "elbow-down",
    reach_tol: float = 1e-9,
) -> IKSolution:
    """Joint angles whose forward kinematics hit x, on the requested branch.

    branch "elbow-down" selects q2 <= 0, "elbow-up" selects q2 >= 0. Targets
    within reach_tol of the annulus boundary are clamped onto it; anything
    farther out raises Unreachable. The near_singular flag marks solutions
    with q2 within 1e-6 of the straight or folded configuration.
    """
    model._require_two_link()
    if branch not in ("elbow-down", "elbow-up"):
        raise ValueError(f"unknown IK branch {branch!r}")
    x = np.asarray(x, dtype=float)
    l1, l2 = model.link_lengths
    rel = x - np.asarray(model.base_position, dtype=float)
    r = float(np.hypot(rel[0], rel[1]))
    r_max, r_min = l1 + l2, abs(l1 - l2)
    if r > r_max + reach_tol or r < r_min - reach_tol:
        raise Unreachable(f"target at radius {r:.6g} outside annulus [{r_min:.6g}, {r_max:.6g}]")
    cos_q2 = np.clip((r**2 - l1**2 - l2**2) / (2.0 * l1 * l2), -1.0, 1.0)
    q2 = float(np.arccos(cos_q2))
    if branch == "elbow-down":
        q2 = -q2
    q1 = float(np.arctan2(rel[1], rel[0]) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2)))
    q = np.array([q1, q2])
    near = min(abs(abs(q2)), abs(np.pi - abs(q2))) < SINGULARITY_TOL
    return IKSolution(q, bool(near))


def linearize(model: RobotModel, q_e: np.ndarray) -> LinearizedModel:
    """Linearized state-space blocks about the equilibrium (q_e, 0)."""
    q_e = np.asarray(q_e, dtype=float)
    M = mass_matrix(model, q_e)
    Minv = np.linalg.inv(M)
    C0 = coriolis_matrix(model, JointState(q_e, np.zeros_like(q_e)))
    return LinearizedModel(
        q_e=q_e,
        x_e=forward_kinematics(model, q_e),
        A_block=Minv @ C0,
        B_block=Minv,
        J_e=jacobian(model, q_e),
    )


def dynamics_rhs(model: RobotModel, state: JointState, u: np.ndarray) -> np.ndarray:
    """Time derivative (qdot, qddot) of the state under joint torques u."""
    u = np.asarray(u, dtype=float)
    M = mass_matrix(model, state.q)
    C = coriolis_matrix(model, state)
    qddot = np.linalg.solve(M, u - C @ state.qdot)
    return np.concatenate([state.qdot, qddot])


def kinetic_energy(model: RobotModel, state: JointState) -> float:
    """Total kinetic energy 0.5 * qdot^T M(q) qdot."""
    M = mass_matrix(model, state.q)
    return 0.5 * float(state.qdot @ M @ state.qdot)


def example_model() -> RobotModel:
    """The 2-link arm used throughout the shipped example configs."""
    return RobotModel(
        link_lengths=(0.75, 0.75),
        point_masses=(2.5, 2.5),
        torque_limits=(25.0, 25.0),
    )
