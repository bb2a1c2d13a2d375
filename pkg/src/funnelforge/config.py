"""Strict JSON config ingestion for the robot, workspace, and mission."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import RobotModel
from .planner import PlannerConfig
from .synthesis import SynthesisConfig, config_hash
from .world import GeometryError, Polytope, Workspace


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ExecutorConfig:
    dt: float = 1e-3
    t_max: float = 30.0

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be positive")


@dataclass(frozen=True)
class Mission:
    formula: str
    safe_label: str = "free"


@dataclass(frozen=True)
class ConfigBundle:
    model: RobotModel
    workspace: Workspace
    synthesis: SynthesisConfig
    planner: PlannerConfig
    executor: ExecutorConfig
    mission: Mission
    doc: dict

    @property
    def hash(self) -> str:
        return config_hash(self.doc)


def _require(obj: dict, path: str, required: dict, optional: dict | None = None) -> dict:
    optional = optional or {}
    if not isinstance(obj, dict):
        raise ValidationError(path, f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ValidationError(path, f"unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ValidationError(path, f"missing keys {sorted(missing)}")
    out = {}
    for key, kind in {**required, **optional}.items():
        if key not in obj:
            continue
        val = obj[key]
        if kind == "number" and (isinstance(val, bool) or not isinstance(val, (int, float))):
            raise ValidationError(f"{path}.{key}", "expected a number")
        if kind == "int" and (isinstance(val, bool) or not isinstance(val, int)):
            raise ValidationError(f"{path}.{key}", "expected an integer")
        if kind == "bool" and not isinstance(val, bool):
            raise ValidationError(f"{path}.{key}", "expected a boolean")
        if kind == "string" and not isinstance(val, str):
            raise ValidationError(f"{path}.{key}", "expected a string")
        if kind == "object" and not isinstance(val, dict):
            raise ValidationError(f"{path}.{key}", "expected an object")
        if kind == "array" and not isinstance(val, list):
            raise ValidationError(f"{path}.{key}", "expected an array")
        if kind == "numbers" and not (
            isinstance(val, list) and all(isinstance(v, (int, float)) for v in val)
        ):
            raise ValidationError(f"{path}.{key}", "expected an array of numbers")
        out[key] = val
    return out


def _point_list(val, path: str) -> np.ndarray:
    if not isinstance(val, list) or any(
        not (isinstance(p, list) and len(p) == 2 and all(isinstance(v, (int, float)) for v in p))
        for p in val
    ):
        raise ValidationError(path, "expected an array of [x, y] pairs")
    return np.asarray(val, dtype=float)


def load_config(path: str | Path) -> ConfigBundle:
    """Load and fully validate a mission config; raises ParseError on bad
    JSON and ValidationError (with a field path) on anything else."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(p)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError(f"{p}: top level must be an object")

    top = _require(
        doc,
        "$",
        {"robot": "object", "workspace": "object", "mission": "object"},
        {"synthesis": "object", "planner": "object", "executor": "object"},
    )

    r = _require(
        top["robot"],
        "$.robot",
        {"link_lengths": "numbers", "point_masses": "numbers", "torque_limits": "numbers"},
        {"base_position": "numbers"},
    )
    try:
        model = RobotModel(
            link_lengths=tuple(r["link_lengths"]),
            point_masses=tuple(r["point_masses"]),
            torque_limits=tuple(r["torque_limits"]),
            base_position=tuple(r.get("base_position", (0.0, 0.0))),
        )
    except ValueError as e:
        raise ValidationError("$.robot", str(e)) from e

    w = _require(
        top["workspace"],
        "$.workspace",
        {"reach_radius": "number", "regions": "array"},
    )
    regions: dict[str, Polytope] = {}
    roles: dict[str, str] = {}
    for i, entry in enumerate(w["regions"]):
        e = _require(entry, f"$.workspace.regions[{i}]", {"name": "string", "role": "string", "vertices": "array"})
        verts = _point_list(e["vertices"], f"$.workspace.regions[{i}].vertices")
        if e["name"] in regions:
            raise ValidationError(f"$.workspace.regions[{i}].name", f"duplicate region {e['name']!r}")
        try:
            regions[e["name"]] = Polytope(e["name"], verts)
        except GeometryError as err:
            raise ValidationError(f"$.workspace.regions[{i}]", str(err)) from err
        roles[e["name"]] = e["role"]
    try:
        workspace = Workspace(
            regions=regions,
            roles=roles,
            reach_radius=float(w["reach_radius"]),
            base_position=model.base_position,
        )
    except GeometryError as e:
        raise ValidationError("$.workspace", str(e)) from e

    s = _require(
        top.get("synthesis", {}),
        "$.synthesis",
        {},
        {
            "alpha": "number",
            "xbar": "numbers",
            "qdotbar": "numbers",
            "ubar": "numbers",
            "edge_samples": "int",
            "ldi_grid_pos": "int",
            "ldi_grid_vel": "int",
            "ldi_safety": "number",
            "ik_branch": "string",
            "rest_inclusion": "bool",
            "solver_tol": "number",
            "solver_max_iter": "int",
        },
    )
    for tup in ("xbar", "qdotbar", "ubar"):
        if tup in s:
            s[tup] = tuple(s[tup])
    try:
        synthesis = SynthesisConfig(**s)
    except (TypeError, ValueError) as e:
        raise ValidationError("$.synthesis", str(e)) from e
    if synthesis.ik_branch not in ("elbow-down", "elbow-up"):
        raise ValidationError("$.synthesis.ik_branch", "must be 'elbow-down' or 'elbow-up'")

    pl = _require(
        top.get("planner", {}),
        "$.planner",
        {},
        {"epsilon": "number", "delta": "number", "max_iterations": "int", "rng_seed": "int", "joint_box": "number"},
    )
    try:
        planner = PlannerConfig(**pl)
    except (TypeError, ValueError) as e:
        raise ValidationError("$.planner", str(e)) from e

    ex = _require(top.get("executor", {}), "$.executor", {}, {"dt": "number", "t_max": "number"})
    try:
        executor = ExecutorConfig(**ex)
    except ValueError as e:
        raise ValidationError("$.executor", str(e)) from e

    mi = _require(top["mission"], "$.mission", {"formula": "string"}, {"safe_label": "string"})
    mission = Mission(formula=mi["formula"], safe_label=mi.get("safe_label", "free"))
    if mission.safe_label in regions:
        raise ValidationError("$.mission.safe_label", "safe label collides with a region name")

    return ConfigBundle(
        model=model,
        workspace=workspace,
        synthesis=synthesis,
        planner=planner,
        executor=executor,
        mission=mission,
        doc=doc,
    )
