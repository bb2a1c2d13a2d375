import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnelforge.dynamics import (
    JointState,
    RobotModel,
    Unreachable,
    UnsupportedModel,
    coriolis_matrix,
    dynamics_rhs,
    example_model,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    kinetic_energy,
    linearize,
    mass_matrix,
)
from funnelforge.executor import rk4_step

from .oracles import euler_lagrange_torque, fd_jacobian

angles = st.floats(-np.pi, np.pi, allow_nan=False)
speeds = st.floats(-3.0, 3.0, allow_nan=False)


def test_model_invariants():
    with pytest.raises(ValueError):
        RobotModel((0.75, -0.1), (2.5, 2.5), (25.0, 25.0))
    with pytest.raises(ValueError):
        RobotModel((0.75,), (2.5, 2.5), (25.0,))
    with pytest.raises(ValueError):
        RobotModel((), (), ())


def test_closed_form_only_for_two_links():
    three = RobotModel((1.0, 1.0, 1.0), (1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    with pytest.raises(UnsupportedModel):
        mass_matrix(three, np.zeros(3))


def test_mass_matrix_frozen_values(model):
    M0 = mass_matrix(model, np.array([0.3, 0.0]))
    np.testing.assert_allclose(M0, [[7.03125, 2.8125], [2.8125, 1.40625]], atol=1e-12)
    M1 = mass_matrix(model, np.array([-1.1, np.pi / 2]))
    np.testing.assert_allclose(M1, [[4.21875, 1.40625], [1.40625, 1.40625]], atol=1e-12)


@given(q1=angles, q2=angles)
@settings(max_examples=200, deadline=None)
def test_mass_matrix_symmetric_pd(q1, q2):
    M = mass_matrix(example_model(), np.array([q1, q2]))
    np.testing.assert_allclose(M, M.T, atol=0)
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_coriolis_vanishes_at_rest_and_straight(model):
    q = np.array([0.7, -1.2])
    C = coriolis_matrix(model, JointState(q, np.zeros(2)))
    np.testing.assert_allclose(C, 0, atol=0)
    C = coriolis_matrix(model, JointState(np.array([1.0, 0.0]), np.array([2.0, -1.0])))
    np.testing.assert_allclose(C, 0, atol=1e-15)


def test_euler_lagrange_residual(model):
    rng = np.random.default_rng(3)
    for _ in range(20):
        q = rng.uniform(-np.pi, np.pi, 2)
        qd = rng.uniform(-2, 2, 2)
        qdd = rng.uniform(-2, 2, 2)
        lhs = mass_matrix(model, q) @ qdd + coriolis_matrix(model, JointState(q, qd)) @ qd
        rhs = euler_lagrange_torque(model, q, qd, qdd)
        np.testing.assert_allclose(lhs, rhs, atol=1e-6)


def test_mdot_minus_2c_skew(model):
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(10):
        q = rng.uniform(-np.pi, np.pi, 2)
        qd = rng.uniform(-2, 2, 2)
        Mdot = (mass_matrix(model, q + h * qd) - mass_matrix(model, q - h * qd)) / (2 * h)
        S = Mdot - 2 * coriolis_matrix(model, JointState(q, qd))
        np.testing.assert_allclose(S, -S.T, atol=1e-7)


def test_forward_kinematics_examples(model):
    np.testing.assert_allclose(forward_kinematics(model, [0.0, 0.0]), [1.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(forward_kinematics(model, [np.pi / 2, 0.0]), [0.0, 1.5], atol=1e-15)
    np.testing.assert_allclose(
        forward_kinematics(model, [np.pi / 2, -np.pi / 2]), [0.75, 0.75], atol=1e-15
    )


@given(q1=angles, q2=angles)
@settings(max_examples=100, deadline=None)
def test_fk_within_reach(q1, q2):
    x = forward_kinematics(example_model(), np.array([q1, q2]))
    assert np.linalg.norm(x) <= 1.5 + 1e-12


def test_jacobian_examples(model):
    np.testing.assert_allclose(jacobian(model, [0.0, 0.0]), [[0, 0], [1.5, 0.75]], atol=1e-15)
    np.testing.assert_allclose(
        jacobian(model, [np.pi / 2, 0.0]), [[-1.5, -0.75], [0, 0]], atol=1e-12
    )


def test_jacobian_matches_finite_differences(model):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        q = rng.uniform(-np.pi, np.pi, 2)
        J = jacobian(model, q)
        Jfd = fd_jacobian(lambda qq: forward_kinematics(model, qq), q)
        worst = max(worst, float(np.max(np.abs(J - Jfd))))
    assert worst <= 1e-6


def test_jacobian_singular_when_straight(model):
    for q2 in (0.0, np.pi):
        for q1 in (0.0, 0.4, -2.0):
            assert abs(np.linalg.det(jacobian(model, [q1, q2]))) <= 1e-9


def test_ik_examples(model):
    q, near = inverse_kinematics(model, (1.5, 0.0))
    np.testing.assert_allclose(q, [0.0, 0.0], atol=1e-9)
    assert near  # boundary of the annulus is the straight-arm singularity
    q, near = inverse_kinematics(model, (0.75, 0.75), branch="elbow-down")
    np.testing.assert_allclose(q, [np.pi / 2, -np.pi / 2], atol=1e-9)
    assert not near
    with pytest.raises(Unreachable):
        inverse_kinematics(model, (3.0, 0.0))


def test_ik_round_trip_both_branches(model):
    rng = np.random.default_rng(2)
    for _ in range(200):
        r = rng.uniform(0.1, 1.45)
        th = rng.uniform(-np.pi, np.pi)
        x = np.array([r * np.cos(th), r * np.sin(th)])
        for branch, sign in (("elbow-down", -1), ("elbow-up", +1)):
            q, _ = inverse_kinematics(model, x, branch=branch)
            assert sign * q[1] >= 0
            np.testing.assert_allclose(forward_kinematics(model, q), x, atol=1e-9)


def test_linearize(model):
    lin = linearize(model, np.array([0.0, 0.0]))
    np.testing.assert_allclose(
        lin.B_block, np.linalg.inv([[7.03125, 2.8125], [2.8125, 1.40625]]), atol=1e-12
    )
    np.testing.assert_allclose(lin.A_block, 0, atol=0)
    q_e = np.array([np.pi / 4, np.pi / 3])
    lin = linearize(model, q_e)
    np.testing.assert_allclose(lin.B_block @ mass_matrix(model, q_e), np.eye(2), atol=1e-10)
    np.testing.assert_allclose(lin.J_e, jacobian(model, q_e), atol=0)


def test_dynamics_rhs(model):
    rest = JointState(np.array([0.4, -0.9]), np.zeros(2))
    np.testing.assert_allclose(dynamics_rhs(model, rest, np.zeros(2)), 0, atol=0)
    e1 = np.array([1.0, 0.0])
    out = dynamics_rhs(model, rest, e1)
    Minv = np.linalg.inv(mass_matrix(model, rest.q))
    np.testing.assert_allclose(out[2:], Minv[:, 0], atol=1e-12)
    np.testing.assert_allclose(out[:2], 0, atol=0)


def test_energy_conserved_unforced(model):
    state = JointState(np.array([0.3, -1.1]), np.array([1.2, -0.6]))
    e0 = kinetic_energy(model, state)
    dt = 1e-3
    for _ in range(1000):
        state = rk4_step(model, state, np.zeros(2), dt)
    assert abs(kinetic_energy(model, state) - e0) <= 1e-6
