"""Barrier-pair synthesis: assemble the LMI families and solve the maxdet
program for one equilibrium, desired region, and set of undesirable regions.

A barrier pair couples an ellipsoidal invariant set z' Qinv z <= 1 (in joint
deviation coordinates z = [q - q_e; qdot]) with the state feedback u = K z
that certifies it against the fitted differential inclusion.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import sdp
from .dynamics import JointState, RobotModel, forward_kinematics, inverse_kinematics, jacobian
from .ldi import NormBoundLDI, NormBoundTriple, StateBox, build_ldi
from .world import Polytope, contains, sample_edges


class InsideObstacle(ValueError):
    pass


class SynthesisInfeasible(RuntimeError):
    """Recoverable: the sampler should discard this equilibrium."""


class CertificationError(RuntimeError):
    """Solver claimed Optimal but the independent check disagrees."""


class HalfSpace(NamedTuple):
    """Deviation-form slab |a (x - x_e)| < abar carving one obstacle facet."""

    a: np.ndarray  # unit row vector, shape (2,)
    abar: float
    region: str
    facet: int


@dataclass(frozen=True)
class SynthesisConfig:
    """Bounds and knobs of one synthesis session. All derived quantities are
    recomputed from these values; nothing else is hard-coded."""

    alpha: float = 1.0
    xbar: tuple[float, ...] = (0.2, 0.2)
    qdotbar: tuple[float, ...] = (2.0, 2.0)
    ubar: tuple[float, ...] | None = None  # None: use the robot's torque limits
    edge_samples: int = 5
    ldi_grid_pos: int = 5
    ldi_grid_vel: int = 3
    ldi_safety: float = 1.1
    ik_branch: str = "elbow-down"
    rest_inclusion: bool = True
    solver_tol: float = 1e-7
    solver_max_iter: int = 600
    max_box_halfwidth: float = np.pi

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        for name in ("xbar", "qdotbar"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"{name} entries must be positive")
        if self.ubar is not None and any(v <= 0 for v in self.ubar):
            raise ValueError("ubar entries must be positive")

    def torque_bounds(self, model: RobotModel) -> np.ndarray:
        return np.asarray(self.ubar if self.ubar is not None else model.torque_limits, dtype=float)


def selectors(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity selector matrices [I 0] and [0 I]."""
    S1 = np.hstack([np.eye(n), np.zeros((n, n))])
    S2 = np.hstack([np.zeros((n, n)), np.eye(n)])
    return S1, S2


@dataclass(frozen=True)
class BarrierPair:
    """Shape matrix Q, gain K, and the equilibrium they are anchored to."""

    Q: np.ndarray
    K: np.ndarray
    q_e: np.ndarray
    x_e: np.ndarray
    alpha: float
    ldi: NormBoundLDI
    provenance: dict | None = None
    Qinv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float))
        object.__setattr__(self, "q_e", np.asarray(self.q_e, dtype=float))
        object.__setattr__(self, "x_e", np.asarray(self.x_e, dtype=float))
        object.__setattr__(self, "Qinv", np.linalg.inv(self.Q))

    @property
    def n(self) -> int:
        return len(self.q_e)

    def deviation(self, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(q, dtype=float) - self.q_e, np.asarray(qdot, dtype=float)])

    def barrier(self, q: np.ndarray, qdot: np.ndarray) -> float:
        z = self.deviation(q, qdot)
        return float(z @ self.Qinv @ z) - 1.0

    def control(self, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
        return self.K @ self.deviation(q, qdot)

    def position_quadratic(self) -> np.ndarray:
        """Position block of Qinv: barrier at rest is q~' P q~ - 1."""
        n = self.n
        return self.Qinv[:n, :n]


def barrier_value(bp: BarrierPair, state: JointState) -> float:
    return bp.barrier(state.q, state.qdot)


def controller_output(bp: BarrierPair, state: JointState) -> np.ndarray:
    return bp.control(state.q, state.qdot)


def select_exclusion_edges(x_e: np.ndarray, obstacles: list[Polytope]) -> list[HalfSpace]:
    """One separating facet per obstacle.

    A facet qualifies when x_e lies strictly beyond it (on the non-obstacle
    side); among qualifying facets the one whose supporting line is farthest
    from x_e wins, ties broken by lowest facet index. Constraining the funnel
    to |a (x - x_e)| < abar then keeps it on x_e's side of that line.
    """
    x_e = np.asarray(x_e, dtype=float)
    out = []
    for p in obstacles:
        slack = p.normals @ x_e - p.offsets  # > 0 means beyond that facet
        best = None
        for k, s in enumerate(slack):
            if s > 0 and (best is None or s > slack[best] + 1e-12):
                best = k
        if best is None:
            raise InsideObstacle(f"equilibrium {x_e.tolist()} lies inside region {p.name!r}")
        out.append(HalfSpace(p.normals[best].copy(), float(slack[best]), p.name, best))
    return out


# -- LMI families ----------------------------------------------------------------


def lmi_inclusion(
    Q: sdp.AffExpr,
    q_e: np.ndarray,
    region: Polytope,
    model: RobotModel,
    n_p: int,
    branch: str = "elbow-down",
) -> list[tuple[str, sdp.AffExpr, str]]:
    """Pin the joint-space projections of region boundary samples inside the
    position shadow of the ellipsoid: [[1, d'], [d, S1 Q S1']] >= 0."""
    n = len(q_e)
    S1, _ = selectors(n)
    dim = Q.dim
    shadow = S1 @ Q @ S1.T
    blocks = []
    for i, x in enumerate(sample_edges(region, n_p)):
        d = (inverse_kinematics(model, x, branch).q - q_e).reshape(n, 1)
        expr = sdp.blockmat([[1.0, d.T], [d, shadow]], dim)
        blocks.append((f"include:{region.name}[{i}]", expr, ">=0"))
    return blocks


def lmi_rest_inclusion(
    Q: sdp.AffExpr,
    q_e: np.ndarray,
    region: Polytope,
    model: RobotModel,
    n_p: int,
    branch: str = "elbow-down",
) -> list[tuple[str, sdp.AffExpr, str]]:
    """Stronger variant pinning the full rest states [d; 0] inside the
    ellipsoid itself, so region points at zero velocity start inside the
    funnel (the shadow form only guarantees membership at *some* velocity)."""
    n = len(q_e)
    dim = Q.dim
    blocks = []
    for i, x in enumerate(sample_edges(region, n_p)):
        d = inverse_kinematics(model, x, branch).q - q_e
        z = np.concatenate([d, np.zeros(n)]).reshape(2 * n, 1)
        expr = sdp.blockmat([[1.0, z.T], [z, Q]], dim)
        blocks.append((f"include-rest:{region.name}[{i}]", expr, ">=0"))
    return blocks


def _slab_block(
    Q: sdp.AffExpr,
    scalar: sdp.AffExpr,
    a: np.ndarray,
    bound: float,
    Jt: NormBoundTriple,
    name: str,
) -> tuple[str, sdp.AffExpr, str]:
    """Robust slab constraint |a (J1 + J2 D J3) q~| < bound over the ellipsoid."""
    n = Jt.N1.shape[0]
    p = Jt.N2.shape[1]
    S1, _ = selectors(n)
    dim = Q.dim
    a = np.asarray(a, dtype=float).reshape(1, n)
    row_nom = (a @ Jt.N1 @ S1) @ Q  # 1 x 2n
    row_fac = (Jt.N3 @ S1) @ Q  # p x 2n
    zeros_top = np.zeros((2 * n, p))
    block = sdp.blockmat(
        [
            [bound**2 * Q, zeros_top, row_nom.T, row_fac.T],
            [zeros_top.T, scalar * np.eye(p), (scalar * (a @ Jt.N2)).T, np.zeros((p, p))],
            [row_nom, scalar * (a @ Jt.N2), 1.0, np.zeros((1, p))],
            [row_fac, np.zeros((p, p)), np.zeros((p, 1)), scalar * np.eye(p)],
        ],
        dim,
    )
    return (name, block, ">=0")


def lmi_exclusion(
    Q: sdp.AffExpr,
    gammas: list[sdp.AffExpr],
    halfspaces: list[HalfSpace],
    ldi: NormBoundLDI,
) -> list[tuple[str, sdp.AffExpr, str]]:
    """One S-procedure block per undesirable region's selected facet."""
    return [
        _slab_block(Q, g, hs.a, hs.abar, ldi.J, f"exclude:{hs.region}")
        for g, hs in zip(gammas, halfspaces)
    ]


def lmi_pos_limit(
    Q: sdp.AffExpr,
    mus: list[sdp.AffExpr],
    xbar: np.ndarray,
    ldi: NormBoundLDI,
) -> list[tuple[str, sdp.AffExpr, str]]:
    """Workspace deviation bounds |b_i (x - x_e)| < xbar_i, same robust slab
    shape as the exclusion family."""
    n = ldi.J.N1.shape[0]
    eye = np.eye(n)
    return [
        _slab_block(Q, mu, eye[i], float(xbar[i]), ldi.J, f"pos-limit:{i}")
        for i, mu in enumerate(mus)
    ]


def lmi_vel_limit(Q: sdp.AffExpr, qdotbar: np.ndarray) -> list[tuple[str, sdp.AffExpr, str]]:
    """Joint speed bounds via Schur: [[Q, (b_i S2 Q)'], [b_i S2 Q, qd_i^2]]."""
    n = len(qdotbar)
    _, S2 = selectors(n)
    eye = np.eye(n)
    dim = Q.dim
    out = []
    for i in range(n):
        row = (eye[i : i + 1] @ S2) @ Q
        expr = sdp.blockmat([[Q, row.T], [row, float(qdotbar[i]) ** 2]], dim)
        out.append((f"vel-limit:{i}", expr, ">=0"))
    return out


def lmi_input_limit(Q: sdp.AffExpr, Y: sdp.AffExpr, ubar: np.ndarray) -> list[tuple[str, sdp.AffExpr, str]]:
    """Torque bounds through the substitution Y = K Q."""
    n = len(ubar)
    eye = np.eye(n)
    dim = Q.dim
    out = []
    for i in range(n):
        row = eye[i : i + 1] @ Y
        expr = sdp.blockmat([[Q, row.T], [row, float(ubar[i]) ** 2]], dim)
        out.append((f"input-limit:{i}", expr, ">=0"))
    return out


def lmi_stability(
    Q: sdp.AffExpr,
    Y: sdp.AffExpr,
    mu_x: sdp.AffExpr,
    mu_u: sdp.AffExpr,
    alpha: float,
    ldi: NormBoundLDI,
) -> tuple[str, sdp.AffExpr, str]:
    """Decay-rate Lyapunov block for the uncertain closed loop, <= 0."""
    n = ldi.A.N1.shape[0]
    pa = ldi.A.N2.shape[1]
    pb = ldi.B.N2.shape[1]
    S1, S2 = selectors(n)
    he = ((S1.T @ S2) @ Q + (S2.T @ ldi.A.N1 @ S2) @ Q + (S2.T @ ldi.B.N1) @ Y).sym()
    H = he + mu_x * (S2.T @ ldi.A.N2 @ ldi.A.N2.T @ S2) + mu_u * (S2.T @ ldi.B.N2 @ ldi.B.N2.T @ S2)
    rowA = (ldi.A.N3 @ S2) @ Q
    rowB = ldi.B.N3 @ Y
    dim = Q.dim
    block = sdp.blockmat(
        [
            [H + 2.0 * alpha * Q, rowA.T, rowB.T],
            [rowA, -(mu_x * np.eye(pa)), np.zeros((pa, pb))],
            [rowB, np.zeros((pb, pa)), -(mu_u * np.eye(pb))],
        ],
        dim,
    )
    return ("stability", block, "<=0")


# -- assembly ----------------------------------------------------------------------


def ldi_box_for(model: RobotModel, q_e: np.ndarray, config: SynthesisConfig) -> StateBox:
    """Validity box tied to the workspace bound: position half-width is the
    smallest workspace bound mapped through the weakest direction of J(q_e)."""
    sigma_min = float(np.linalg.svd(jacobian(model, q_e), compute_uv=False)[-1])
    if sigma_min <= 0:
        raise SynthesisInfeasible("singular Jacobian at equilibrium")
    r = min(config.xbar) / sigma_min
    if r > config.max_box_halfwidth:
        raise SynthesisInfeasible(
            f"equilibrium too close to a singularity (box half-width {r:.3g} rad)"
        )
    n = len(q_e)
    return StateBox(np.full(n, r), np.asarray(config.qdotbar, dtype=float))


def assemble_problem(
    q_e: np.ndarray,
    desired_region: Polytope | None,
    halfspaces: list[HalfSpace],
    ldi: NormBoundLDI,
    config: SynthesisConfig,
    model: RobotModel,
) -> sdp.MaxDetProblem:
    n = len(q_e)
    p = sdp.MaxDetProblem()
    p.add_symmetric("Q", 2 * n)
    p.add_matrix("Y", n, 2 * n)
    for i in range(len(halfspaces)):
        p.add_scalar(f"gamma_{i}")
    for i in range(n):
        p.add_scalar(f"mu_{i}")
    p.add_scalar("mu_x")
    p.add_scalar("mu_u")
    p.set_detvar("Q")

    Q = p.var("Q")
    Y = p.var("Y")
    gammas = [p.var(f"gamma_{i}") for i in range(len(halfspaces))]
    mus = [p.var(f"mu_{i}") for i in range(n)]
    mu_x = p.var("mu_x")
    mu_u = p.var("mu_u")

    def add(blocks):
        for name, expr, sense in blocks if isinstance(blocks, list) else [blocks]:
            (p.add_psd if sense == ">=0" else p.add_nsd)(expr, name=name)

    add([("Q-pd", Q, ">=0")])
    if desired_region is not None:
        add(lmi_inclusion(Q, q_e, desired_region, model, config.edge_samples, config.ik_branch))
        if config.rest_inclusion:
            add(lmi_rest_inclusion(Q, q_e, desired_region, model, config.edge_samples, config.ik_branch))
    add(lmi_exclusion(Q, gammas, halfspaces, ldi))
    add(lmi_pos_limit(Q, mus, np.asarray(config.xbar, dtype=float), ldi))
    add(lmi_vel_limit(Q, np.asarray(config.qdotbar, dtype=float)))
    add(lmi_input_limit(Q, Y, config.torque_bounds(model)))
    add(lmi_stability(Q, Y, mu_x, mu_u, config.alpha, ldi))
    return p


def synth_bp(
    x_e: np.ndarray,
    desired_region: Polytope | None,
    obstacles: list[Polytope],
    config: SynthesisConfig,
    model: RobotModel,
    q_e: np.ndarray | None = None,
    provenance: dict | None = None,
) -> BarrierPair:
    """Synthesize a barrier pair anchored at x_e.

    q_e may be passed directly (the planner supplies projected joint
    positions); otherwise it comes from inverse kinematics on the configured
    branch. Raises SynthesisInfeasible when no certified funnel exists at
    this equilibrium and InsideObstacle when x_e violates an obstacle.
    """
    x_e = np.asarray(x_e, dtype=float)
    if q_e is None:
        q_e = inverse_kinematics(model, x_e, config.ik_branch).q
    else:
        q_e = np.asarray(q_e, dtype=float)
    halfspaces = select_exclusion_edges(x_e, obstacles)
    box = ldi_box_for(model, q_e, config)
    ldi = build_ldi(
        model,
        q_e,
        box,
        grid_pos=config.ldi_grid_pos,
        grid_vel=config.ldi_grid_vel,
        safety=config.ldi_safety,
    )
    problem = assemble_problem(q_e, desired_region, halfspaces, ldi, config, model)
    sol = sdp.solve(problem, tol=config.solver_tol, max_iter=config.solver_max_iter)
    if not sol.optimal:
        raise SynthesisInfeasible(f"synthesis at {x_e.tolist()} ended {sol.status}")
    report = sdp.check_solution(problem, sol.values, tol=config.solver_tol)
    if not report.satisfied(1e-7):
        raise CertificationError(
            f"independent residual check failed: worst {report.max_residual:.3e}"
        )
    Qv = np.asarray(sol.values["Q"])
    Yv = np.asarray(sol.values["Y"])
    K = Yv @ np.linalg.inv(Qv)
    return BarrierPair(Q=Qv, K=K, q_e=q_e, x_e=x_e, alpha=config.alpha, ldi=ldi, provenance=provenance)


# -- serialization -----------------------------------------------------------------


def config_hash(config_doc: dict) -> str:
    return hashlib.sha256(json.dumps(config_doc, sort_keys=True).encode()).hexdigest()[:16]


def _triple_to_json(t: NormBoundTriple) -> dict:
    return {"N1": t.N1.tolist(), "N2": t.N2.tolist(), "N3": t.N3.tolist()}


def _triple_from_json(d: dict) -> NormBoundTriple:
    return NormBoundTriple(np.array(d["N1"]), np.array(d["N2"]), np.array(d["N3"]))


def bp_to_json(bp: BarrierPair) -> dict:
    return {
        "Q": bp.Q.tolist(),
        "K": bp.K.tolist(),
        "q_e": bp.q_e.tolist(),
        "x_e": bp.x_e.tolist(),
        "alpha": bp.alpha,
        "ldi": {
            "A": _triple_to_json(bp.ldi.A),
            "B": _triple_to_json(bp.ldi.B),
            "J": _triple_to_json(bp.ldi.J),
            "q_e": bp.ldi.q_e.tolist(),
            "box": {
                "pos_halfwidth": bp.ldi.box.pos_halfwidth.tolist(),
                "vel_halfwidth": bp.ldi.box.vel_halfwidth.tolist(),
            },
        },
        "provenance": bp.provenance,
    }


def bp_from_json(d: dict) -> BarrierPair:
    ldi = NormBoundLDI(
        A=_triple_from_json(d["ldi"]["A"]),
        B=_triple_from_json(d["ldi"]["B"]),
        J=_triple_from_json(d["ldi"]["J"]),
        q_e=np.array(d["ldi"]["q_e"]),
        box=StateBox(
            np.array(d["ldi"]["box"]["pos_halfwidth"]),
            np.array(d["ldi"]["box"]["vel_halfwidth"]),
        ),
    )
    return BarrierPair(
        Q=np.array(d["Q"]),
        K=np.array(d["K"]),
        q_e=np.array(d["q_e"]),
        x_e=np.array(d["x_e"]),
        alpha=float(d["alpha"]),
        ldi=ldi,
        provenance=d.get("provenance"),
    )
