import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from funnelforge.dynamics import JointState, coriolis_matrix, inverse_kinematics, linearize, mass_matrix
from funnelforge.ldi import (
    EmptySamples,
    StateBox,
    build_ldi,
    degenerate_ldi,
    fit_norm_bound,
    validate_ldi,
)

Q_E = None


@pytest.fixture(scope="module")
def q_e(model):
    return inverse_kinematics(model, (0.55, -0.55)).q


def test_fit_requires_samples():
    with pytest.raises(EmptySamples):
        fit_norm_bound([])


def test_fit_singleton():
    S = np.array([[1.0, 2.0], [3.0, 4.0]])
    t = fit_norm_bound([S])
    np.testing.assert_allclose(t.N1, S)
    assert t.beta == 0.0
    assert t.contains(S)


def test_fit_two_samples():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    B = np.array([[2.0, 1.0], [-1.0, 0.0]])
    t = fit_norm_bound([A, B])
    np.testing.assert_allclose(t.N1, (A + B) / 2)
    assert t.beta == pytest.approx(np.linalg.norm((A - B) / 2, 2))
    assert t.contains(A) and t.contains(B)


def test_fit_identity_pair_membership():
    t = fit_norm_bound([np.eye(2), 3 * np.eye(2)])
    np.testing.assert_allclose(t.N1, 2 * np.eye(2))
    assert t.beta == pytest.approx(1.0)
    assert t.contains(2.5 * np.eye(2))
    assert not t.contains(3.5 * np.eye(2))


@given(
    arrays(np.float64, (4, 2, 2), elements=st.floats(-5, 5, allow_nan=False)),
)
@settings(max_examples=100, deadline=None)
def test_fit_membership_property(stack):
    t = fit_norm_bound(list(stack))
    for S in stack:
        assert t.membership_violation(S) <= 1e-12


def test_degenerate_box_matches_linearization(model, q_e):
    box = StateBox(np.full(2, 1e-12), np.full(2, 1e-12))
    ldi = build_ldi(model, q_e, box)
    lin = linearize(model, q_e)
    np.testing.assert_allclose(ldi.A.N1, lin.A_block, atol=1e-10)
    np.testing.assert_allclose(ldi.B.N1, lin.B_block, atol=1e-10)
    np.testing.assert_allclose(ldi.J.N1, lin.J_e, atol=1e-10)
    assert ldi.A.beta <= 1e-10 and ldi.B.beta <= 1e-10 and ldi.J.beta <= 1e-10


def test_zero_velocity_box_gives_zero_A_radius(model, q_e):
    ldi = build_ldi(model, q_e, StateBox(np.full(2, 0.25), np.zeros(2)))
    assert ldi.A.beta == 0.0  # all Coriolis samples vanish at rest
    assert ldi.J.beta > 0.0


def test_grid_membership_and_fresh_samples(model, q_e):
    box = StateBox(np.full(2, 0.25), np.full(2, 2.0))
    ldi = build_ldi(model, q_e, box, grid_pos=5, grid_vel=3, safety=1.1)
    rng = np.random.default_rng(12)
    report = validate_ldi(ldi, model, 200, rng=rng)
    assert report.passed
    assert report.max_violation <= 0  # safety factor leaves real slack


def test_box_growth_never_shrinks_radii(model, q_e):
    base = StateBox(np.full(2, 0.1), np.full(2, 0.5))
    betas = []
    for factor in (1.0, 2.0, 4.0):
        ldi = build_ldi(model, q_e, base.scaled(factor))
        betas.append((ldi.A.beta, ldi.B.beta, ldi.J.beta))
    for smaller, larger in zip(betas, betas[1:]):
        assert all(b2 >= b1 for b1, b2 in zip(smaller, larger))


def test_validation_catches_undercoverage(model, q_e):
    box = StateBox(np.full(2, 0.15), np.full(2, 1.0))
    ldi = build_ldi(model, q_e, box, safety=1.0)
    # pretend validity on a box twice as large
    wide = build_ldi(model, q_e, box.scaled(2.0), safety=1.0)
    cheat = type(ldi)(A=ldi.A, B=ldi.B, J=ldi.J, q_e=ldi.q_e, box=wide.box)
    report = validate_ldi(cheat, model, 500, rng=np.random.default_rng(3))
    assert report.max_violation > 0


def test_validate_ldi_large_sample(model, q_e):
    box = StateBox(np.full(2, 0.3), np.full(2, 2.0))
    ldi = build_ldi(model, q_e, box, safety=1.1)
    report = validate_ldi(ldi, model, 10_000, rng=np.random.default_rng(0))
    assert report.passed


def test_degenerate_ldi_zero_violation(model, q_e):
    ldi = degenerate_ldi(model, q_e)
    Minv = np.linalg.inv(mass_matrix(model, q_e))
    assert ldi.B.membership_violation(Minv) <= 1e-12
    C = coriolis_matrix(model, JointState(q_e, np.zeros(2)))
    assert ldi.A.membership_violation(Minv @ C) <= 1e-12
