import json
import time
from pathlib import Path

import numpy as np
import pytest

from funnelforge.sdp import (
    DimensionMismatch,
    MaxDetProblem,
    check_solution,
    jacobi_eigenvalues,
    problem_to_json,
    solution_to_json,
    solve,
)

GOLDEN = Path(__file__).parent / "golden"


def scalar_cap_problem():
    p = MaxDetProblem()
    p.add_symmetric("Q", 1)
    Q = p.var("Q")
    p.set_detvar("Q")
    p.add_psd(1.0 - Q, name="cap")
    p.add_psd(Q, name="pd")
    return p


def trace_cap_problem(limit=2.0):
    p = MaxDetProblem()
    p.add_symmetric("Q", 2)
    Q = p.var("Q")
    p.set_detvar("Q")
    e0 = np.array([[1.0, 0.0]])
    e1 = np.array([[0.0, 1.0]])
    p.add_psd(limit - (e0 @ Q @ e0.T + e1 @ Q @ e1.T), name="trace")
    p.add_psd(Q, name="pd")
    return p


def diag_cap_problem():
    p = MaxDetProblem()
    p.add_symmetric("Q", 2)
    Q = p.var("Q")
    p.set_detvar("Q")
    p.add_psd(np.diag([1.0, 4.0]) - Q, name="cap")
    p.add_psd(Q, name="pd")
    return p


def contradictory_problem():
    p = MaxDetProblem()
    p.add_symmetric("Q", 2)
    Q = p.var("Q")
    p.set_detvar("Q")
    p.add_psd(Q - 2.0 * np.eye(2), name="lower")
    p.add_psd(np.eye(2) - Q, name="upper")
    return p


def test_analytic_problems_within_1e6():
    t0 = time.time()
    s = solve(scalar_cap_problem())
    assert s.status == "Optimal"
    assert np.asarray(s.values["Q"])[0, 0] == pytest.approx(1.0, abs=1e-6)

    s = solve(trace_cap_problem())
    assert s.status == "Optimal"
    # equal eigenvalues maximize det at a fixed trace (AM-GM), so Q = I
    np.testing.assert_allclose(np.asarray(s.values["Q"]), np.eye(2), atol=1e-6)
    assert s.objective == pytest.approx(0.0, abs=1e-6)

    s = solve(diag_cap_problem())
    assert s.status == "Optimal"
    np.testing.assert_allclose(np.asarray(s.values["Q"]), np.diag([1.0, 4.0]), atol=1e-6)
    assert s.objective == pytest.approx(np.log(4.0), abs=1e-6)

    s = solve(contradictory_problem())
    assert s.status == "Infeasible"
    assert time.time() - t0 < 1.0


def test_diag_cap_against_grid_search():
    # brute-force the diagonal restriction of the third problem
    best = -np.inf
    for q1 in np.linspace(0.05, 1.0, 40):
        for q2 in np.linspace(0.05, 4.0, 40):
            best = max(best, np.log(q1) + np.log(q2))
    s = solve(diag_cap_problem())
    assert s.objective >= best - 1e-6


def test_solver_residual_matches_independent_check():
    for prob in (scalar_cap_problem(), trace_cap_problem(), diag_cap_problem()):
        s = solve(prob)
        report = check_solution(prob, s.values)
        assert abs(report.max_residual - s.max_residual) <= 1e-8
        assert report.max_residual >= -1e-7
        assert report.objective == pytest.approx(s.objective, abs=1e-9)


def test_check_solution_reports_violations():
    p = trace_cap_problem()
    ok = check_solution(p, {"Q": np.eye(2)})
    assert all(r.min_eigenvalue >= -1e-12 for r in ok.residuals)
    bad = check_solution(p, {"Q": 1.5 * np.eye(2)})
    by_name = {r.name: r.min_eigenvalue for r in bad.residuals}
    assert by_name["trace"] == pytest.approx(-1.0)
    assert bad.max_residual == pytest.approx(-1.0)


def test_check_solution_dimension_mismatch():
    p = trace_cap_problem()
    with pytest.raises(DimensionMismatch):
        check_solution(p, {"Q": np.eye(3)})
    with pytest.raises(DimensionMismatch):
        check_solution(p, {})


def test_scaling_covariance():
    # scaling every constraint block by c > 0 must not move the optimum
    def scaled(c):
        p = MaxDetProblem()
        p.add_symmetric("Q", 2)
        Q = p.var("Q")
        p.set_detvar("Q")
        p.add_psd((np.diag([1.0, 4.0]) - Q) * c, name="cap")
        p.add_psd(Q * c, name="pd")
        return solve(p)

    base = np.asarray(scaled(1.0).values["Q"])
    for c in (0.05, 20.0):
        np.testing.assert_allclose(np.asarray(scaled(c).values["Q"]), base, atol=1e-6)


def test_monotonicity_under_added_constraints():
    free = solve(diag_cap_problem())
    p = diag_cap_problem()
    Q = p.var("Q")
    e0 = np.array([[1.0, 0.0]])
    e1 = np.array([[0.0, 1.0]])
    p.add_psd(3.0 - (e0 @ Q @ e0.T + e1 @ Q @ e1.T), name="trace")
    tightened = solve(p)
    assert tightened.status == "Optimal"
    assert tightened.objective <= free.objective + 1e-9


def test_scalar_bounds_become_blocks():
    p = MaxDetProblem()
    p.add_symmetric("Q", 1)
    p.add_scalar("t", lower=0.5, upper=2.0)
    Q = p.var("Q")
    t = p.var("t")
    p.set_detvar("Q")
    p.add_psd(t - Q, name="cap")
    s = solve(p)
    assert s.status == "Optimal"
    # Q is maximized, so t rides its upper bound
    assert s.values["t"] == pytest.approx(2.0, abs=1e-5)
    assert np.asarray(s.values["Q"])[0, 0] == pytest.approx(2.0, abs=1e-5)


def test_nonsymmetric_block_rejected():
    p = MaxDetProblem()
    p.add_symmetric("Q", 2)
    Q = p.var("Q")
    p.set_detvar("Q")
    with pytest.raises(ValueError, match="symmetric"):
        p.add_psd(np.array([[1.0, 1.0], [0.0, 1.0]]) @ Q)


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(8)
    for n in (1, 2, 5, 9):
        for _ in range(20):
            A = rng.normal(size=(n, n))
            A = A + A.T
            np.testing.assert_allclose(
                jacobi_eigenvalues(A), np.linalg.eigvalsh(A), atol=1e-10
            )


def test_problem_and_solution_serialize_to_golden():
    p = trace_cap_problem()
    s = solve(p)
    doc = {"problem": problem_to_json(p), "solution": solution_to_json(s)}
    golden_path = GOLDEN / "sdp_trace_cap.json"
    golden = json.loads(golden_path.read_text())
    assert doc["problem"] == golden["problem"]
    got = doc["solution"]
    want = golden["solution"]
    assert got["status"] == want["status"]
    np.testing.assert_allclose(got["values"]["Q"], want["values"]["Q"], atol=1e-9)
    assert got["objective"] == pytest.approx(want["objective"], abs=1e-9)
