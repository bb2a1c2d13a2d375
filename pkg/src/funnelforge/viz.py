"""Dependency-free SVG rendering of workspaces, funnel chains, and traces.

Funnel ellipses are the workspace shadows of the state ellipsoids mapped
through the nominal Jacobian of each barrier pair's inclusion model; they
are display approximations only, never used for certification.
"""

from __future__ import annotations

import numpy as np

from .executor import Trace
from .synthesis import BarrierPair, selectors
from .world import Workspace


def _fmt(v: float) -> str:
    return f"{v:.5f}"


def funnel_ellipse(bp: BarrierPair) -> tuple[np.ndarray, float, float, float]:
    """Center, semi-axes, and rotation (deg) of the displayed shadow."""
    n = bp.n
    S1, _ = selectors(n)
    shadow = S1 @ bp.Q @ S1.T
    E = bp.ldi.J.N1 @ shadow @ bp.ldi.J.N1.T
    vals, vecs = np.linalg.eigh(E)
    vals = np.clip(vals, 0.0, None)
    rx, ry = np.sqrt(vals[1]), np.sqrt(vals[0])
    angle = float(np.degrees(np.arctan2(vecs[1, 1], vecs[0, 1])))
    return bp.x_e, rx, ry, angle


def render_scene(
    workspace: Workspace,
    chains: list[list[BarrierPair]] | None = None,
    traces: list[Trace] | None = None,
    title: str | None = None,
    size: int = 720,
) -> str:
    """One SVG document: regions (obstacles hatched), funnel shadows, and
    end-effector trajectories, y-axis up."""
    r = workspace.reach_radius * 1.1
    parts = [
        f'<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt(-r)} {_fmt(-r)} {_fmt(2 * r)} {_fmt(2 * r)}">',
        "<defs>",
        '<pattern id="hatch" width="0.05" height="0.05" patternTransform="rotate(45)" '
        'patternUnits="userSpaceOnUse">'
        '<rect width="0.05" height="0.05" fill="#f2c0c0"/>'
        '<line x1="0" y1="0" x2="0" y2="0.05" stroke="#c0392b" stroke-width="0.012"/>'
        "</pattern>",
        "</defs>",
        # flip y so the workspace is drawn with y pointing up
        '<g transform="scale(1,-1)">',
        f'<circle cx="0" cy="0" r="{_fmt(workspace.reach_radius)}" fill="#fbfbfb" '
        f'stroke="#999999" stroke-width="0.01"/>',
    ]
    if title:
        pass  # title goes in a caption element appended at the end (unflipped)
    for name in sorted(workspace.regions):
        p = workspace.regions[name]
        pts = " ".join(f"{_fmt(v[0])},{_fmt(v[1])}" for v in p.vertices)
        if workspace.roles[name] == "obstacle":
            fill = "url(#hatch)"
        elif workspace.roles[name] == "base":
            fill = "#f8e3e3"
        else:
            fill = "#f5b7b1"
        parts.append(
            f'<polygon points="{pts}" fill="{fill}" stroke="#c0392b" stroke-width="0.008"/>'
        )
        cx, cy = p.centroid()
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(-cy)}" font-size="0.07" fill="#7b241c" '
            f'text-anchor="middle" transform="scale(1,-1)">{name}</text>'
        )
    for chain in chains or []:
        for bp in chain:
            (cx, cy), rx, ry, angle = funnel_ellipse(bp)
            parts.append(
                f'<ellipse cx="{_fmt(cx)}" cy="{_fmt(cy)}" rx="{_fmt(rx)}" ry="{_fmt(ry)}" '
                f'transform="rotate({_fmt(angle)} {_fmt(cx)} {_fmt(cy)})" '
                f'fill="#2e86c1" fill-opacity="0.12" stroke="#2e86c1" stroke-width="0.006"/>'
            )
    for trace in traces or []:
        if not trace.samples:
            continue
        pts = " ".join(f"{_fmt(s.x[0])},{_fmt(s.x[1])}" for s in trace.samples)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#17202a" stroke-width="0.012"/>'
        )
        s0, s1 = trace.samples[0], trace.samples[-1]
        parts.append(
            f'<circle cx="{_fmt(s0.x[0])}" cy="{_fmt(s0.x[1])}" r="0.02" fill="#17202a"/>'
        )
        parts.append(
            f'<circle cx="{_fmt(s1.x[0])}" cy="{_fmt(s1.x[1])}" r="0.02" fill="none" '
            f'stroke="#17202a" stroke-width="0.01"/>'
        )
    parts.append("</g>")
    if title:
        parts.append(
            f'<text x="{_fmt(-r + 0.05)}" y="{_fmt(-r + 0.12)}" font-size="0.09" '
            f'fill="#333333">{title}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
