import json
from pathlib import Path

import numpy as np
import pytest

from funnelforge.cli import mission_automaton, plan_leg
from funnelforge.config import load_config
from funnelforge.dynamics import example_model
from funnelforge.logic import find_accepting_run, run_to_transitions
from funnelforge.synthesis import synth_bp

REPO = Path(__file__).resolve().parents[1]
CONFIG_PATH = REPO / "configs" / "paper_example.json"
SINGLE_CONFIG_PATH = REPO / "configs" / "single_region.json"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def model():
    return example_model()


@pytest.fixture(scope="session")
def bundle():
    return load_config(CONFIG_PATH)


@pytest.fixture(scope="session")
def goal_bp(bundle):
    """Barrier pair for the shipped goal region a0 with every other region
    excluded; shared because synthesis is the expensive step."""
    region = bundle.workspace.regions["a0"]
    return synth_bp(
        region.centroid(),
        region,
        bundle.workspace.others("a0"),
        bundle.synthesis,
        bundle.model,
    )


@pytest.fixture(scope="session")
def free_bp(bundle):
    """Tree-style barrier pair (no desired region) near a0."""
    from funnelforge.dynamics import forward_kinematics, inverse_kinematics

    q_e = inverse_kinematics(bundle.model, (0.1, -0.7), bundle.synthesis.ik_branch).q
    return synth_bp(
        forward_kinematics(bundle.model, q_e),
        None,
        bundle.workspace.others(),
        bundle.synthesis,
        bundle.model,
        q_e=q_e,
    )


@pytest.fixture(scope="session")
def mission_plan(bundle):
    """All three patrol legs planned at the shipped seed. Session-scoped:
    this is the multi-minute fixture behind the planning and execution
    criteria."""
    automaton, liveness, init_region, safe = mission_automaton(bundle)
    run = find_accepting_run(automaton)
    requests = run_to_transitions(run, safe)
    seed = bundle.planner.rng_seed
    graphs = {}
    chains = {}
    for i, (frm, to) in enumerate(requests):
        graph, chain = plan_leg(bundle, frm, to, seed, leg_index=i)
        graphs[(frm, to)] = graph
        chains[(frm, to)] = chain
    return {
        "automaton": automaton,
        "run": run,
        "requests": requests,
        "graphs": graphs,
        "chains": chains,
        "init_region": init_region,
        "seed": seed,
    }
