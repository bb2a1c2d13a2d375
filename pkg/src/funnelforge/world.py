"""Workspace geometry: convex polytopic regions, reach disk, point labeling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

GEOM_TOL = 1e-9


class GeometryError(ValueError):
    pass


class FacetInfo(NamedTuple):
    satisfied: bool
    distance: float


class LabelResult(NamedTuple):
    labels: frozenset[str]
    out_of_workspace: bool


@dataclass(frozen=True)
class Polytope:
    """Convex 2-D polytope given by counterclockwise vertices.

    Half-spaces are derived on construction: normals[k] . x <= offsets[k]
    with unit outward normals, one facet per edge (vertices[k] ->
    vertices[k+1]).
    """

    name: str
    vertices: np.ndarray
    normals: np.ndarray = field(init=False)
    offsets: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError(f"{self.name}: need >= 3 two-dimensional vertices")
        object.__setattr__(self, "vertices", v)
        edges = np.roll(v, -1, axis=0) - v
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if np.any(cross <= GEOM_TOL):
            raise GeometryError(f"{self.name}: vertices must be convex and counterclockwise")
        # outward normal of a CCW edge is the edge direction rotated -90 deg
        normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        lengths = np.linalg.norm(normals, axis=1)
        if np.any(lengths < GEOM_TOL):
            raise GeometryError(f"{self.name}: degenerate edge")
        normals = normals / lengths[:, None]
        offsets = np.einsum("kd,kd->k", normals, v)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def n_facets(self) -> int:
        return len(self.vertices)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def contains(p: Polytope, x: np.ndarray, tol: float = GEOM_TOL) -> bool:
    """True iff x satisfies every facet inequality (boundary counts)."""
    x = np.asarray(x, dtype=float)
    return bool(np.all(p.normals @ x <= p.offsets + tol))


def facet_distance(p: Polytope, x: np.ndarray) -> list[FacetInfo]:
    """Per facet: does x satisfy the inside inequality, and the distance
    from x to the facet's supporting line."""
    x = np.asarray(x, dtype=float)
    slack = p.normals @ x - p.offsets
    return [FacetInfo(bool(s <= GEOM_TOL), float(abs(s))) for s in slack]


def sample_edges(p: Polytope, per_edge: int) -> np.ndarray:
    """Boundary points: the vertices plus per_edge - 2 evenly spaced interior
    points on each edge. Total count is n_edges * (per_edge - 1)."""
    if per_edge < 2:
        raise ValueError("per_edge must be >= 2")
    pts = []
    nv = len(p.vertices)
    for k in range(nv):
        a = p.vertices[k]
        b = p.vertices[(k + 1) % nv]
        for j in range(per_edge - 1):
            t = j / (per_edge - 1)
            pts.append((1.0 - t) * a + t * b)
    return np.array(pts)


def vertices_from_halfspaces(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Enumerate vertices of {x : normals x <= offsets}, ordered CCW.

    Intended for small facet counts; intersects facet pairs and keeps the
    feasible intersection points.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    m = len(normals)
    pts = []
    for i in range(m):
        for j in range(i + 1, m):
            A = np.stack([normals[i], normals[j]])
            if abs(np.linalg.det(A)) < GEOM_TOL:
                continue
            x = np.linalg.solve(A, np.array([offsets[i], offsets[j]]))
            if np.all(normals @ x <= offsets + 1e-7):
                pts.append(x)
    if not pts:
        raise GeometryError("halfspace intersection is empty or unbounded")
    pts = np.array(pts)
    # dedupe and order by angle around the centroid
    center = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    order = np.argsort(ang, kind="stable")
    pts = pts[order]
    keep = [pts[0]]
    for q in pts[1:]:
        if np.linalg.norm(q - keep[-1]) > 1e-9:
            keep.append(q)
    if np.linalg.norm(keep[-1] - keep[0]) <= 1e-9 and len(keep) > 1:
        keep.pop()
    return np.array(keep)


@dataclass(frozen=True)
class Workspace:
    """Named regions plus the reachability disk around the arm base."""

    regions: dict[str, Polytope]
    roles: dict[str, str]
    reach_radius: float
    base_position: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.reach_radius <= 0:
            raise GeometryError("reach_radius must be positive")
        for name, role in self.roles.items():
            if role not in ("task", "obstacle", "base"):
                raise GeometryError(f"region {name}: unknown role {role!r}")
        if set(self.roles) != set(self.regions):
            raise GeometryError("roles must cover exactly the region names")

    def names_with_role(self, role: str) -> list[str]:
        return sorted(n for n, r in self.roles.items() if r == role)

    def others(self, *exclude: str) -> list[Polytope]:
        """All regions except the named ones, in sorted name order."""
        return [self.regions[n] for n in sorted(self.regions) if n not in exclude]


def label(workspace: Workspace, x: np.ndarray) -> LabelResult:
    """Set of region names containing x; adds 'free' when x is inside the
    reach disk and in no region. Points outside the disk get an empty set
    and the out_of_workspace flag."""
    x = np.asarray(x, dtype=float)
    base = np.asarray(workspace.base_position, dtype=float)
    if np.linalg.norm(x - base) > workspace.reach_radius + GEOM_TOL:
        return LabelResult(frozenset(), True)
    hits = {name for name, p in workspace.regions.items() if contains(p, x)}
    if not hits:
        hits = {"free"}
    return LabelResult(frozenset(hits), False)
