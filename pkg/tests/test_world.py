import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnelforge.config import ParseError, ValidationError, load_config
from funnelforge.world import (
    GeometryError,
    Polytope,
    Workspace,
    contains,
    facet_distance,
    label,
    sample_edges,
    vertices_from_halfspaces,
)

from .conftest import CONFIG_PATH


def unit_square(name="sq"):
    return Polytope(name, [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])


def test_polytope_rejects_bad_vertex_lists():
    with pytest.raises(GeometryError):
        Polytope("p", [[0, 0], [1, 0]])
    with pytest.raises(GeometryError):  # clockwise
        Polytope("p", [[0, 0], [0, 1], [1, 0]])
    with pytest.raises(GeometryError):  # nonconvex
        Polytope("p", [[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]])


def test_contains_examples():
    sq = unit_square()
    assert contains(sq, (0.0, 0.0))
    assert contains(sq, (0.5, 0.5))  # vertex counts as inside
    assert not contains(sq, (2.0, 0.0))


def test_facet_distance_example():
    sq = unit_square()
    info = facet_distance(sq, (2.0, 0.0))
    by_normal = {tuple(np.round(n, 6)): f for n, f in zip(sq.normals, info)}
    right = by_normal[(1.0, 0.0)]
    left = by_normal[(-1.0, 0.0)]
    assert not right.satisfied and right.distance == pytest.approx(1.5)
    assert left.satisfied and left.distance == pytest.approx(2.5)
    for ny in (1.0, -1.0):
        f = by_normal[(0.0, ny)]
        assert f.satisfied and f.distance == pytest.approx(0.5)
    assert all(f.satisfied for f in facet_distance(sq, sq.centroid()))
    on_line = facet_distance(sq, (0.5, 0.0))
    assert min(f.distance for f in on_line) == pytest.approx(0.0)


def test_sample_edges_counts():
    tri = Polytope("t", [[0, 0], [1, 0], [0, 1]])
    pts = sample_edges(tri, 2)
    assert len(pts) == 3
    np.testing.assert_allclose(sorted(map(tuple, pts)), sorted(map(tuple, tri.vertices)))
    sq = unit_square()
    pts = sample_edges(sq, 4)
    assert len(pts) == 12
    for p in pts:
        info = facet_distance(sq, p)
        assert all(f.satisfied for f in info)
        assert min(f.distance for f in info) <= 1e-12


def test_halfspace_vertex_duality():
    sq = unit_square()
    verts = vertices_from_halfspaces(sq.normals, sq.offsets)
    assert len(verts) == 4
    # same cyclic order up to rotation
    start = np.argmin([np.linalg.norm(v - sq.vertices[0]) for v in verts])
    rolled = np.roll(verts, -start, axis=0)
    np.testing.assert_allclose(rolled, sq.vertices, atol=1e-12)


@given(
    st.lists(st.floats(0.1, 2.0), min_size=4, max_size=9),
    st.floats(-1.0, 1.0),
    st.floats(-1.0, 1.0),
)
@settings(max_examples=60, deadline=None)
def test_duality_round_trip_random_polygons(radii, cx, cy):
    angles = np.linspace(0, 2 * np.pi, len(radii), endpoint=False)
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1) * np.asarray(radii)[:, None]
    hull = _convex_hull(pts) + np.array([cx, cy])
    if len(hull) < 3:
        return
    try:
        p = Polytope("h", hull)
    except GeometryError:
        return  # nearly collinear hulls are rejected by construction
    verts = vertices_from_halfspaces(p.normals, p.offsets)
    assert len(verts) == len(p.vertices)
    start = np.argmin([np.linalg.norm(v - p.vertices[0]) for v in verts])
    np.testing.assert_allclose(np.roll(verts, -start, axis=0), p.vertices, atol=1e-7)


def _convex_hull(pts):
    pts = sorted(map(tuple, pts))

    def cross2(a, b):
        return a[0] * b[1] - a[1] * b[0]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross2(
                np.subtract(out[-1], out[-2]), np.subtract(p, out[-2])
            ) <= 1e-9:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def test_label(bundle):
    ws = bundle.workspace
    inside_a2 = ws.regions["a2"].centroid()
    assert label(ws, inside_a2).labels == {"a2"}
    free_point = np.array([0.3, -0.3])
    assert label(ws, free_point).labels == {"free"}
    res = label(ws, (2.0, 0.0))
    assert res.labels == frozenset() and res.out_of_workspace
    # boundary of the disk still counts as inside
    assert not label(ws, (1.5, 0.0)).out_of_workspace


def test_workspace_helpers(bundle):
    ws = bundle.workspace
    assert ws.names_with_role("task") == ["a0", "a1", "a2"]
    assert ws.names_with_role("obstacle") == ["a3", "a4", "a5"]
    others = ws.others("a0", "a1")
    assert [p.name for p in others] == ["a2", "a3", "a4", "a5", "a6"]


def test_load_config_reproduces_shipped_parameters(bundle):
    assert bundle.model.link_lengths == (0.75, 0.75)
    assert bundle.model.point_masses == (2.5, 2.5)
    assert bundle.model.torque_limits == (25.0, 25.0)
    assert bundle.workspace.reach_radius == 1.5
    assert bundle.planner.epsilon == -0.2
    assert bundle.synthesis.alpha == 1.0
    assert bundle.synthesis.xbar == (0.2, 0.2)
    assert len(bundle.workspace.regions) == 7


def test_load_config_errors(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(ParseError):
        load_config(empty)

    doc = json.loads(CONFIG_PATH.read_text())
    doc["robot"]["link_lengths"] = [0.75, -0.75]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match=r"\$\.robot"):
        load_config(bad)

    doc = json.loads(CONFIG_PATH.read_text())
    doc["workspace"]["typo_key"] = 1
    bad.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="unknown keys"):
        load_config(bad)

    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.json")


def test_shipped_configs_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    from .conftest import REPO, SINGLE_CONFIG_PATH

    schema = json.loads((REPO / "schema" / "world.schema.json").read_text())
    for path in (CONFIG_PATH, SINGLE_CONFIG_PATH):
        jsonschema.validate(json.loads(path.read_text()), schema)
