"""Closed-loop simulation of the nonlinear plant under a funnel chain.

The active controller switches to the next barrier pair the first time its
barrier value drops below the handoff threshold; a leg succeeds when the
end-effector is labeled with the goal region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import JointState, RobotModel, dynamics_rhs, forward_kinematics
from .logic import BuchiAutomaton
from .synthesis import BarrierPair
from .world import Polytope, Workspace, label


class SafetyViolation(RuntimeError):
    def __init__(self, message: str, trace: "Trace"):
        super().__init__(message)
        self.trace = trace


class Timeout(RuntimeError):
    def __init__(self, message: str, trace: "Trace"):
        super().__init__(message)
        self.trace = trace


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TraceSample:
    t: float
    q: np.ndarray
    qdot: np.ndarray
    u: np.ndarray
    x: np.ndarray
    active: int
    b_active: float
    b_next: float | None
    labels: frozenset[str]
    clamped: bool


@dataclass
class Trace:
    dt: float
    samples: list[TraceSample] = field(default_factory=list)
    status: str = "running"
    clamp_count: int = 0

    @property
    def final_state(self) -> JointState:
        s = self.samples[-1]
        return JointState(s.q, s.qdot)

    @property
    def final_active(self) -> int:
        return self.samples[-1].active

    def label_sequence(self) -> list[frozenset[str]]:
        """Consecutive-duplicate-free label sets along the trace."""
        out: list[frozenset[str]] = []
        for s in self.samples:
            if not out or s.labels != out[-1]:
                out.append(s.labels)
        return out


def rk4_step(model: RobotModel, state: JointState, u: np.ndarray, dt: float) -> JointState:
    """Classical fourth-order step with the torque held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = model.n

    def f(y):
        return dynamics_rhs(model, JointState(y[:n], y[n:]), u)

    y = np.concatenate([state.q, state.qdot])
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return JointState(y[:n], y[n:])


def simulate_chain(
    chain: list[BarrierPair],
    initial: JointState,
    goal_region: Polytope,
    workspace: Workspace,
    model: RobotModel,
    forbidden: frozenset[str] = frozenset(),
    dt: float = 1e-3,
    t_max: float = 30.0,
    epsilon: float = -0.2,
    ubar: np.ndarray | None = None,
) -> Trace:
    """Run the switching controller until the goal region is reached.

    Raises SafetyViolation if any sample's label set touches `forbidden`,
    and Timeout when t_max elapses first; both carry the partial trace.
    """
    if not chain:
        raise ConfigError("empty chain")
    if chain[0].barrier(initial.q, initial.qdot) > 0:
        raise ValueError("initial state lies outside the first funnel")
    if ubar is None:
        ubar = np.full(len(initial.q), np.inf)
    ubar = np.asarray(ubar, dtype=float)

    trace = Trace(dt=dt)
    state = initial
    active = 0
    n_steps = int(round(t_max / dt))
    for k in range(n_steps + 1):
        t = k * dt
        while active + 1 < len(chain) and chain[active + 1].barrier(state.q, state.qdot) <= epsilon:
            active += 1
        b_active = chain[active].barrier(state.q, state.qdot)
        b_next = chain[active + 1].barrier(state.q, state.qdot) if active + 1 < len(chain) else None
        u_raw = chain[active].control(state.q, state.qdot)
        u = np.clip(u_raw, -ubar, ubar)
        clamped = bool(np.any(np.abs(u_raw) > ubar * (1.0 + 1e-12)))
        if clamped:
            trace.clamp_count += 1
        x = forward_kinematics(model, state.q)
        labels = label(workspace, x).labels
        trace.samples.append(
            TraceSample(t, state.q, state.qdot, u, x, active, b_active, b_next, labels, clamped)
        )
        hit = labels & forbidden
        if hit:
            trace.status = "safety-violation"
            raise SafetyViolation(f"entered forbidden region(s) {sorted(hit)} at t={t:.3f}", trace)
        if goal_region.name in labels:
            trace.status = "success"
            return trace
        state = rk4_step(model, state, u, dt)
    trace.status = "timeout"
    raise Timeout(f"goal region {goal_region.name!r} not reached within {t_max:.3f}s", trace)


@dataclass
class LegReport:
    from_region: str
    to_region: str
    trace: Trace

    @property
    def success(self) -> bool:
        return self.trace.status == "success"


@dataclass
class MissionReport:
    legs: list[LegReport]
    success: bool

    def leg(self, i: int) -> LegReport:
        return self.legs[i]


def run_mission(
    requests: list[tuple[str, str]],
    chains: dict[tuple[str, str], list[BarrierPair]],
    workspace: Workspace,
    model: RobotModel,
    initial: JointState,
    dt: float = 1e-3,
    t_max: float = 30.0,
    epsilon: float = -0.2,
    ubar: np.ndarray | None = None,
) -> MissionReport:
    """Execute the patrol legs in order, chaining each leg's final state into
    the next. When the next leg's first funnel has not yet been entered, the
    barrier pair that was active at the previous leg's end is prepended as a
    bridge (it shares its equilibrium with the next leg's first funnel)."""
    legs: list[LegReport] = []
    state = initial
    carry: BarrierPair | None = None
    for req in requests:
        chain = chains.get(req)
        if chain is None:
            raise ConfigError(f"no chain supplied for transition {req[0]} -> {req[1]}")
        chain_eff = list(chain)
        if carry is not None and chain_eff[0].barrier(state.q, state.qdot) > epsilon:
            chain_eff = [carry] + chain_eff
        forbidden = frozenset(workspace.regions) - {req[0], req[1]}
        trace = simulate_chain(
            chain_eff,
            state,
            workspace.regions[req[1]],
            workspace,
            model,
            forbidden=forbidden,
            dt=dt,
            t_max=t_max,
            epsilon=epsilon,
            ubar=ubar,
        )
        legs.append(LegReport(req[0], req[1], trace))
        state = trace.final_state
        carry = chain_eff[trace.final_active]
    return MissionReport(legs=legs, success=all(l.success for l in legs))


@dataclass(frozen=True)
class TraceVerdict:
    accepted_prefix: int
    divergence_index: int | None
    projected: list[frozenset[str]]

    @property
    def accepted(self) -> bool:
        return self.divergence_index is None


def validate_trace(trace: Trace, automaton: BuchiAutomaton) -> TraceVerdict:
    """Project the trace's label sets onto the automaton's propositions,
    deduplicate consecutive repeats, and replay against the transitions."""
    projected: list[frozenset[str]] = []
    for labels in trace.label_sequence():
        sym = frozenset(labels) & automaton.ap
        if not projected or sym != projected[-1]:
            projected.append(sym)
    states = automaton.initial
    for i, sym in enumerate(projected):
        states = automaton.step(states, sym)
        if not states:
            return TraceVerdict(accepted_prefix=i, divergence_index=i, projected=projected)
    return TraceVerdict(accepted_prefix=len(projected), divergence_index=None, projected=projected)


# -- serialization ---------------------------------------------------------------


def trace_to_json(trace: Trace) -> dict:
    return {
        "dt": trace.dt,
        "status": trace.status,
        "clamp_count": trace.clamp_count,
        "samples": [
            {
                "t": s.t,
                "q": s.q.tolist(),
                "qdot": s.qdot.tolist(),
                "u": s.u.tolist(),
                "x": s.x.tolist(),
                "active": s.active,
                "b_active": s.b_active,
                "b_next": s.b_next,
                "labels": sorted(s.labels),
                "clamped": s.clamped,
            }
            for s in trace.samples
        ],
    }


def trace_from_json(d: dict) -> Trace:
    trace = Trace(dt=d["dt"], status=d["status"], clamp_count=d["clamp_count"])
    for s in d["samples"]:
        trace.samples.append(
            TraceSample(
                t=s["t"],
                q=np.array(s["q"]),
                qdot=np.array(s["qdot"]),
                u=np.array(s["u"]),
                x=np.array(s["x"]),
                active=s["active"],
                b_active=s["b_active"],
                b_next=s["b_next"],
                labels=frozenset(s["labels"]),
                clamped=s["clamped"],
            )
        )
    return trace


def trace_to_csv(trace: Trace) -> str:
    n = len(trace.samples[0].q) if trace.samples else 0
    header = (
        ["t"]
        + [f"q{i}" for i in range(n)]
        + [f"qdot{i}" for i in range(n)]
        + [f"u{i}" for i in range(n)]
        + ["x", "y", "active", "b_active", "b_next", "labels", "clamped"]
    )
    lines = [",".join(header)]
    for s in trace.samples:
        row = (
            [repr(s.t)]
            + [repr(v) for v in s.q]
            + [repr(v) for v in s.qdot]
            + [repr(v) for v in s.u]
            + [repr(s.x[0]), repr(s.x[1]), str(s.active), repr(s.b_active)]
            + [repr(s.b_next) if s.b_next is not None else ""]
            + [";".join(sorted(s.labels)), "1" if s.clamped else "0"]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
