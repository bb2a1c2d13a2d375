"""Tree planners: the workspace-distance baseline and the barrier-pair tree.

The barrier-pair tree grows from the goal region: each iteration samples a
joint position, projects it onto the epsilon level set of the nearest
existing funnel, and synthesizes a new funnel there. It terminates when the
newest funnel's epsilon sub-level set captures the initial equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import RobotModel, forward_kinematics, inverse_kinematics
from .synthesis import (
    BarrierPair,
    InsideObstacle,
    SynthesisConfig,
    SynthesisInfeasible,
    bp_from_json,
    bp_to_json,
    synth_bp,
)
from .world import Polytope, contains


class MaxIterations(RuntimeError):
    pass


class InfeasibleEndpoint(RuntimeError):
    pass


class InitNotAttached(ValueError):
    pass


class DegenerateDirection(ValueError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    epsilon: float = -0.2
    delta: float = 0.1  # workspace step of the baseline tree, meters
    max_iterations: int = 500
    rng_seed: int = 0
    joint_box: float = np.pi  # q_rand is uniform over [-joint_box, joint_box]^n

    def __post_init__(self):
        if not (-1.0 < self.epsilon <= 0.0):
            raise ValueError("epsilon must be in (-1, 0]")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


# -- baseline workspace tree ---------------------------------------------------


@dataclass
class RRTGraph:
    vertices: list[np.ndarray] = field(default_factory=list)
    parents: list[int | None] = field(default_factory=list)

    def add_vertex(self, x: np.ndarray, parent: int | None = None) -> int:
        self.vertices.append(np.asarray(x, dtype=float))
        self.parents.append(parent)
        return len(self.vertices) - 1

    def path_from(self, vid: int) -> list[np.ndarray]:
        out = []
        cur: int | None = vid
        while cur is not None:
            out.append(self.vertices[cur])
            cur = self.parents[cur]
        return out


def rrt_baseline(
    x_init: np.ndarray,
    x_goal: np.ndarray,
    delta: float,
    obstacles: list[Polytope],
    rng: np.random.Generator,
    reach_radius: float = 1.5,
    base: tuple[float, float] = (0.0, 0.0),
    max_iterations: int = 10000,
) -> tuple[RRTGraph, list[np.ndarray]]:
    """Distance-stepped tree grown from the goal until x_init is within delta.

    Returns the graph and the goal-to-init vertex path.
    """
    x_init = np.asarray(x_init, dtype=float)
    x_goal = np.asarray(x_goal, dtype=float)
    base = np.asarray(base, dtype=float)

    def free(x):
        return all(not contains(p, x) for p in obstacles)

    if not (free(x_init) and free(x_goal)):
        raise ValueError("endpoints must lie in free space")

    g = RRTGraph()
    g.add_vertex(x_goal)
    new_id = 0
    dist0 = float(np.linalg.norm(x_goal - x_init))
    iters = 0
    while dist0 > delta:
        if iters >= max_iterations:
            raise MaxIterations(f"no connection after {max_iterations} samples")
        iters += 1
        # uniform over the reach disk, rejecting obstacle interiors
        while True:
            u = rng.uniform(-reach_radius, reach_radius, size=2)
            if np.linalg.norm(u) <= reach_radius:
                x_rand = base + u
                if free(x_rand):
                    break
        dists = [np.linalg.norm(v - x_rand) for v in g.vertices]
        near_id = int(np.argmin(dists))
        x_near = g.vertices[near_id]
        gap = float(np.linalg.norm(x_rand - x_near))
        if gap < 1e-12:
            continue
        step = min(delta, gap)
        x_new = x_near + step * (x_rand - x_near) / gap
        if free(x_new):
            new_id = g.add_vertex(x_new, parent=near_id)
            dist0 = float(np.linalg.norm(x_new - x_init))
    init_id = g.add_vertex(x_init, parent=new_id)
    path = g.path_from(init_id)
    return g, path[::-1]  # goal first, init last


# -- barrier-pair tree -----------------------------------------------------------


@dataclass
class BPRRTGraph:
    """Tree of funnels; edges point parent (near) -> child (new)."""

    q_e: list[np.ndarray] = field(default_factory=list)
    x_e: list[np.ndarray] = field(default_factory=list)
    barrier_pairs: list[BarrierPair] = field(default_factory=list)
    parents: list[int | None] = field(default_factory=list)
    root: int = 0
    init_vertex: int | None = None
    iterations: int = 0

    def add(self, bp: BarrierPair, parent: int | None) -> int:
        self.q_e.append(bp.q_e)
        self.x_e.append(bp.x_e)
        self.barrier_pairs.append(bp)
        self.parents.append(parent)
        return len(self.barrier_pairs) - 1

    @property
    def n_vertices(self) -> int:
        return len(self.barrier_pairs)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c, p in enumerate(self.parents) if p is not None]

    def check_invariants(self, epsilon: float, tol: float = 1e-9):
        """Tree shape plus the edge barrier property."""
        seen_root = [p is None for p in self.parents]
        if sum(seen_root) != 1 or self.parents[self.root] is not None:
            raise AssertionError("graph is not a tree rooted at the goal vertex")
        for parent, child in self.edges:
            b = self.barrier_pairs[parent].barrier(self.q_e[child], np.zeros_like(self.q_e[child]))
            if b > epsilon + tol:
                raise AssertionError(f"edge ({parent},{child}) violates barrier bound: {b:.6f}")


def nearest_bp(graph: BPRRTGraph, q_rand: np.ndarray) -> tuple[int, BarrierPair]:
    """Vertex whose funnel has the lowest barrier value at (q_rand, 0); ties
    go to the lowest id."""
    if graph.n_vertices == 0:
        raise ValueError("graph is empty")
    zero = np.zeros_like(np.asarray(q_rand, dtype=float))
    values = [bp.barrier(q_rand, zero) for bp in graph.barrier_pairs]
    vid = int(np.argmin(values))
    return vid, graph.barrier_pairs[vid]


def new_equilibrium(
    q_near: np.ndarray,
    q_rand: np.ndarray,
    bp_near: BarrierPair,
    epsilon: float,
) -> np.ndarray:
    """Point on the ray q_near -> q_rand whose rest barrier equals epsilon.

    Solves t > 0 with (t d)' P (t d) = 1 + epsilon for the position block P
    of the inverse shape matrix.
    """
    q_near = np.asarray(q_near, dtype=float)
    d = np.asarray(q_rand, dtype=float) - q_near
    P = bp_near.position_quadratic()
    quad = float(d @ P @ d)
    if quad <= 1e-14:
        raise DegenerateDirection("sample direction has no extent under the funnel metric")
    t = np.sqrt((1.0 + epsilon) / quad)
    return q_near + t * d


def bp_rrt(
    a_init: Polytope,
    a_goal: Polytope,
    obstacles: list[Polytope],
    synth_config: SynthesisConfig,
    planner_config: PlannerConfig,
    model: RobotModel,
    rng: np.random.Generator,
    provenance: dict | None = None,
) -> BPRRTGraph:
    """Grow a funnel tree from a_goal until it captures a_init's equilibrium."""
    eps = planner_config.epsilon
    n = model.n

    def endpoint(region: Polytope) -> BarrierPair:
        try:
            return synth_bp(
                region.centroid(), region, obstacles, synth_config, model, provenance=provenance
            )
        except (SynthesisInfeasible, InsideObstacle) as e:
            raise InfeasibleEndpoint(f"endpoint region {region.name!r}: {e}") from e

    bp_init = endpoint(a_init)
    bp_goal = endpoint(a_goal)
    q_init = bp_init.q_e

    graph = BPRRTGraph()
    graph.root = graph.add(bp_goal, parent=None)
    bp_new = bp_goal
    new_id = graph.root
    zero = np.zeros(n)

    while bp_new.barrier(q_init, zero) > eps:
        if graph.iterations >= planner_config.max_iterations:
            raise MaxIterations(
                f"funnel tree did not reach the initial region in {planner_config.max_iterations} iterations"
            )
        graph.iterations += 1
        q_rand = rng.uniform(-planner_config.joint_box, planner_config.joint_box, size=n)
        x_rand = forward_kinematics(model, q_rand)
        if any(contains(p, x_rand) for p in obstacles):
            continue
        near_id, bp_near = nearest_bp(graph, q_rand)
        try:
            q_new = new_equilibrium(graph.q_e[near_id], q_rand, bp_near, eps)
        except DegenerateDirection:
            continue
        x_new = forward_kinematics(model, q_new)
        try:
            bp = synth_bp(
                x_new, None, obstacles, synth_config, model, q_e=q_new, provenance=provenance
            )
        except (SynthesisInfeasible, InsideObstacle):
            continue
        new_id = graph.add(bp, parent=near_id)
        bp_new = bp

    graph.init_vertex = graph.add(bp_init, parent=new_id)
    graph.check_invariants(eps)
    return graph


def extract_chain(graph: BPRRTGraph) -> list[BarrierPair]:
    """Barrier pairs from the initial vertex up to the goal root, execution
    order: each element's equilibrium lies in its successor's epsilon set."""
    if graph.init_vertex is None:
        raise InitNotAttached("graph has no initial vertex")
    chain = []
    cur: int | None = graph.init_vertex
    while cur is not None:
        chain.append(graph.barrier_pairs[cur])
        cur = graph.parents[cur]
    return chain


# -- serialization ---------------------------------------------------------------


def graph_to_json(graph: BPRRTGraph) -> dict:
    return {
        "vertices": [
            {"id": i, "q_e": graph.q_e[i].tolist(), "x_e": graph.x_e[i].tolist()}
            for i in range(graph.n_vertices)
        ],
        "barrier_pairs": [bp_to_json(bp) for bp in graph.barrier_pairs],
        "edges": [{"parent": p, "child": c} for p, c in graph.edges],
        "root": graph.root,
        "init_vertex": graph.init_vertex,
        "iterations": graph.iterations,
    }


def graph_from_json(d: dict) -> BPRRTGraph:
    g = BPRRTGraph()
    g.barrier_pairs = [bp_from_json(b) for b in d["barrier_pairs"]]
    g.q_e = [bp.q_e for bp in g.barrier_pairs]
    g.x_e = [bp.x_e for bp in g.barrier_pairs]
    g.parents = [None] * len(g.barrier_pairs)
    for e in d["edges"]:
        g.parents[e["child"]] = e["parent"]
    g.root = d["root"]
    g.init_vertex = d["init_vertex"]
    g.iterations = d.get("iterations", 0)
    return g


def chain_to_json(chain: list[BarrierPair]) -> dict:
    return {"chain": [bp_to_json(bp) for bp in chain]}


def chain_from_json(d: dict) -> list[BarrierPair]:
    return [bp_from_json(b) for b in d["chain"]]
