"""Command-line entry point: synth / plan / run / simulate / check.

Each command writes its JSON artifacts atomically plus a manifest listing
them (the manifest carries timestamps; all other artifacts are byte-stable
for a fixed seed and config). Verbosity comes from the FUNNELFORGE_LOG
environment variable (debug | info | warning).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigBundle, ParseError, ValidationError, load_config
from .dynamics import JointState, Unreachable, inverse_kinematics
from .executor import (
    MissionReport,
    SafetyViolation,
    Timeout,
    Trace,
    run_mission,
    simulate_chain,
    trace_from_json,
    trace_to_csv,
    trace_to_json,
    validate_trace,
)
from .logic import (
    NoAcceptingRun,
    UnsupportedFragment,
    automaton_to_json,
    build_patrol_automaton,
    find_accepting_run,
    parse_ltl,
    recognize_patrol,
    run_to_transitions,
)
from .planner import (
    InfeasibleEndpoint,
    MaxIterations,
    bp_rrt,
    chain_from_json,
    chain_to_json,
    extract_chain,
    graph_to_json,
)
from .synthesis import InsideObstacle, SynthesisInfeasible, bp_to_json, synth_bp
from .viz import render_scene
from .world import contains

log = logging.getLogger("funnelforge")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_MAX_ITERATIONS = 3
EXIT_FRAGMENT = 4
EXIT_CHECK = 5
EXIT_SIMULATION = 6


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path: Path, obj) -> Path:
    _write_atomic(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


def write_manifest(out: Path, bundle: ConfigBundle, seed: int, artifacts: list[Path]):
    manifest = {
        "tool": "funnelforge",
        "version": __version__,
        "config_hash": bundle.hash,
        "seed": seed,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "artifacts": sorted(str(a.relative_to(out)) for a in artifacts),
    }
    write_json(out / "manifest.json", manifest)


def _apply_overrides(bundle: ConfigBundle, args) -> ConfigBundle:
    planner = bundle.planner
    synthesis = bundle.synthesis
    if getattr(args, "eps", None) is not None:
        planner = dataclasses.replace(planner, epsilon=args.eps)
    if getattr(args, "alpha", None) is not None:
        synthesis = dataclasses.replace(synthesis, alpha=args.alpha)
    if getattr(args, "seed", None) is not None:
        planner = dataclasses.replace(planner, rng_seed=args.seed)
    return dataclasses.replace(bundle, planner=planner, synthesis=synthesis)


def mission_automaton(bundle: ConfigBundle):
    """Parse the mission formula and build its patrol automaton."""
    formula = parse_ltl(bundle.mission.formula)
    liveness, init_region, safe = recognize_patrol(formula, bundle.mission.safe_label)
    missing = [r for r in liveness if r not in bundle.workspace.regions]
    if missing:
        raise ValidationError("$.mission.formula", f"unknown regions {missing}")
    return build_patrol_automaton(liveness, init_region, safe), liveness, init_region, safe


def plan_leg(bundle: ConfigBundle, frm: str, to: str, seed: int, leg_index: int = 0):
    """One deterministic BP-RRT leg; undesirable regions are every region
    other than the endpoints."""
    rng = np.random.default_rng([seed, leg_index])
    obstacles = bundle.workspace.others(frm, to)
    provenance = {"config_hash": bundle.hash, "seed": seed, "leg": leg_index}
    graph = bp_rrt(
        bundle.workspace.regions[frm],
        bundle.workspace.regions[to],
        obstacles,
        bundle.synthesis,
        bundle.planner,
        bundle.model,
        rng,
        provenance=provenance,
    )
    return graph, extract_chain(graph)


def sample_in_region(bundle: ConfigBundle, name: str, rng: np.random.Generator) -> JointState:
    """Rest state uniformly sampled inside a region (rejection in its bbox)."""
    p = bundle.workspace.regions[name]
    lo = p.vertices.min(axis=0)
    hi = p.vertices.max(axis=0)
    while True:
        x = rng.uniform(lo, hi)
        if contains(p, x):
            q = inverse_kinematics(bundle.model, x, bundle.synthesis.ik_branch).q
            return JointState(q, np.zeros_like(q))


# -- commands --------------------------------------------------------------------


def cmd_synth(args) -> int:
    bundle = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    region = bundle.workspace.regions.get(args.region)
    if region is None:
        log.error("unknown region %r", args.region)
        return EXIT_CONFIG
    obstacles = bundle.workspace.others(args.region)
    try:
        bp = synth_bp(
            region.centroid(),
            region,
            obstacles,
            bundle.synthesis,
            bundle.model,
            provenance={"config_hash": bundle.hash, "seed": bundle.planner.rng_seed},
        )
    except (SynthesisInfeasible, InsideObstacle, Unreachable) as e:
        log.error("synthesis failed: %s", e)
        return EXIT_INFEASIBLE
    artifacts = [
        write_json(out / "bp.json", bp_to_json(bp)),
        Path(out / "bp.svg"),
    ]
    _write_atomic(out / "bp.svg", render_scene(bundle.workspace, chains=[[bp]], title=f"barrier pair @ {args.region}"))
    write_manifest(out, bundle, bundle.planner.rng_seed, artifacts)
    print(f"synthesized barrier pair for {args.region}: log det Q = "
          f"{float(np.linalg.slogdet(bp.Q)[1]):.4f}")
    return EXIT_OK


def cmd_plan(args) -> int:
    bundle = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    seed = bundle.planner.rng_seed
    for name in (args.from_region, args.to_region):
        if name not in bundle.workspace.regions:
            log.error("unknown region %r", name)
            return EXIT_CONFIG
    try:
        graph, chain = plan_leg(bundle, args.from_region, args.to_region, seed)
    except InfeasibleEndpoint as e:
        log.error("%s", e)
        return EXIT_INFEASIBLE
    except MaxIterations as e:
        log.error("%s", e)
        return EXIT_MAX_ITERATIONS
    artifacts = [
        write_json(out / "graph.json", graph_to_json(graph)),
        write_json(out / "chain.json", chain_to_json(chain)),
        Path(out / "plan.svg"),
    ]
    _write_atomic(
        out / "plan.svg",
        render_scene(bundle.workspace, chains=[chain], title=f"{args.from_region} -> {args.to_region}"),
    )
    write_manifest(out, bundle, seed, artifacts)
    print(
        f"planned {args.from_region} -> {args.to_region}: {graph.n_vertices} funnels, "
        f"{graph.iterations} iterations, chain length {len(chain)}"
    )
    return EXIT_OK


def cmd_run(args) -> int:
    bundle = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    seed = bundle.planner.rng_seed
    try:
        automaton, liveness, init_region, safe = mission_automaton(bundle)
        run = find_accepting_run(automaton)
    except (UnsupportedFragment, NoAcceptingRun) as e:
        log.error("mission rejected: %s", e)
        return EXIT_FRAGMENT
    requests = run_to_transitions(run, safe)
    artifacts = [write_json(out / "automaton.json", automaton_to_json(automaton))]
    artifacts.append(
        write_json(
            out / "run.json",
            {
                "prefix": [[s, sorted(sym)] for s, sym in run.prefix],
                "cycle": [[s, sorted(sym)] for s, sym in run.cycle],
                "requests": [list(r) for r in requests],
            },
        )
    )

    chains = {}
    all_chains = []
    for i, (frm, to) in enumerate(requests):
        log.info("planning leg %d: %s -> %s", i, frm, to)
        try:
            graph, chain = plan_leg(bundle, frm, to, seed, leg_index=i)
        except InfeasibleEndpoint as e:
            log.error("%s", e)
            return EXIT_INFEASIBLE
        except MaxIterations as e:
            log.error("%s", e)
            return EXIT_MAX_ITERATIONS
        chains[(frm, to)] = chain
        all_chains.append(chain)
        artifacts.append(write_json(out / f"graph_{frm}_{to}.json", graph_to_json(graph)))
        artifacts.append(write_json(out / f"chain_{frm}_{to}.json", chain_to_json(chain)))

    initial = sample_in_region(bundle, init_region, np.random.default_rng([seed, 10_000]))
    try:
        report = run_mission(
            requests,
            chains,
            bundle.workspace,
            bundle.model,
            initial,
            dt=bundle.executor.dt,
            t_max=bundle.executor.t_max,
            epsilon=bundle.planner.epsilon,
            ubar=bundle.synthesis.torque_bounds(bundle.model),
        )
    except (SafetyViolation, Timeout) as e:
        log.error("mission execution failed: %s", e)
        return EXIT_SIMULATION

    merged = Trace(dt=bundle.executor.dt)
    leg_reports = []
    for (frm, to), leg in zip(requests, report.legs):
        trace = leg.trace
        merged.samples.extend(trace.samples)
        verdict = validate_trace(trace, automaton) if (frm, to) == requests[0] else None
        artifacts.append(write_json(out / f"trace_{frm}_{to}.json", trace_to_json(trace)))
        _write_atomic(out / f"trace_{frm}_{to}.csv", trace_to_csv(trace))
        artifacts.append(out / f"trace_{frm}_{to}.csv")
        _write_atomic(
            out / f"leg_{frm}_{to}.svg",
            render_scene(bundle.workspace, chains=[chains[(frm, to)]], traces=[trace], title=f"{frm} -> {to}"),
        )
        artifacts.append(out / f"leg_{frm}_{to}.svg")
        leg_reports.append(
            {
                "from": frm,
                "to": to,
                "status": trace.status,
                "samples": len(trace.samples),
                "duration": trace.samples[-1].t if trace.samples else 0.0,
                "clamp_count": trace.clamp_count,
                "max_active_barrier": max(s.b_active for s in trace.samples),
            }
        )

    mission_labels = [sorted(sym) for sym in merged.label_sequence()]
    mission_verdict = validate_trace(merged, automaton)
    artifacts.append(
        write_json(
            out / "mission_report.json",
            {
                "success": report.success,
                "legs": leg_reports,
                "label_sequence": mission_labels,
                "accepted_prefix": mission_verdict.accepted_prefix,
                "divergence_index": mission_verdict.divergence_index,
            },
        )
    )
    _write_atomic(
        out / "mission.svg",
        render_scene(
            bundle.workspace,
            chains=all_chains,
            traces=[l.trace for l in report.legs],
            title="patrol mission",
        ),
    )
    artifacts.append(out / "mission.svg")
    write_manifest(out, bundle, seed, artifacts)
    print(f"mission {'succeeded' if report.success else 'failed'}: {len(report.legs)} legs")
    return EXIT_OK if report.success and mission_verdict.accepted else EXIT_SIMULATION


def cmd_simulate(args) -> int:
    bundle = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    chain = chain_from_json(json.loads(Path(args.chain).read_text()))
    for name in (args.from_region, args.to_region):
        if name not in bundle.workspace.regions:
            log.error("unknown region %r", name)
            return EXIT_CONFIG
    if args.initial:
        vals = [float(v) for v in args.initial.split(",")]
        if len(vals) == bundle.model.n:
            vals += [0.0] * bundle.model.n
        initial = JointState(vals[: bundle.model.n], vals[bundle.model.n :])
    else:
        initial = sample_in_region(
            bundle, args.from_region, np.random.default_rng([bundle.planner.rng_seed, 10_000])
        )
    forbidden = frozenset(bundle.workspace.regions) - {args.from_region, args.to_region}
    try:
        trace = simulate_chain(
            chain,
            initial,
            bundle.workspace.regions[args.to_region],
            bundle.workspace,
            bundle.model,
            forbidden=forbidden,
            dt=bundle.executor.dt,
            t_max=bundle.executor.t_max,
            epsilon=bundle.planner.epsilon,
            ubar=bundle.synthesis.torque_bounds(bundle.model),
        )
    except (SafetyViolation, Timeout) as e:
        log.error("simulation failed: %s", e)
        return EXIT_SIMULATION
    artifacts = [write_json(out / "trace.json", trace_to_json(trace))]
    _write_atomic(out / "trace.csv", trace_to_csv(trace))
    artifacts.append(out / "trace.csv")
    _write_atomic(out / "trace.svg", render_scene(bundle.workspace, chains=[chain], traces=[trace]))
    artifacts.append(out / "trace.svg")
    write_manifest(out, bundle, bundle.planner.rng_seed, artifacts)
    print(f"simulated {len(trace.samples)} samples: {trace.status}")
    return EXIT_OK


def cmd_check(args) -> int:
    bundle = _apply_overrides(load_config(args.config), args)
    try:
        automaton, *_ = mission_automaton(bundle)
    except UnsupportedFragment as e:
        log.error("mission rejected: %s", e)
        return EXIT_FRAGMENT
    trace = trace_from_json(json.loads(Path(args.trace).read_text()))
    verdict = validate_trace(trace, automaton)
    result = {
        "accepted_prefix": verdict.accepted_prefix,
        "divergence_index": verdict.divergence_index,
        "projected": [sorted(sym) for sym in verdict.projected],
    }
    if args.out:
        write_json(Path(args.out) / "verdict.json", result)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK if verdict.accepted else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="funnelforge", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", required=True, help="mission config JSON")
        p.add_argument("--out", required=True, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--eps", type=float, default=None, help="override the barrier threshold")
        p.add_argument("--alpha", type=float, default=None, help="override the decay rate")

    p = sub.add_parser("synth", help="synthesize one region's barrier pair")
    common(p)
    p.add_argument("--region", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plan", help="plan one funnel chain between two regions")
    common(p)
    p.add_argument("--from", dest="from_region", required=True)
    p.add_argument("--to", dest="to_region", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="plan and execute the whole mission")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="simulate a stored chain")
    common(p)
    p.add_argument("--chain", required=True, help="chain JSON from `plan`")
    p.add_argument("--from", dest="from_region", required=True)
    p.add_argument("--to", dest="to_region", required=True)
    p.add_argument("--initial", default=None, help="comma-separated q (and optionally qdot)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="replay a stored trace against the mission automaton")
    p.add_argument("--config", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_check)

    return ap


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("FUNNELFORGE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except UnsupportedFragment as e:
        log.error("mission rejected: %s", e)
        return EXIT_FRAGMENT


if __name__ == "__main__":
    sys.exit(main())
