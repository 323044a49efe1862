"""Deterministic SVG rendering of meshes, solutions, and diagnostics.

Bars are line segments, cells are filled octagons colored on a fixed
blue-white-red scale (legend annotates the value range), handle targets are
open blue circles and achieved handle positions are filled green dots.
"""

from __future__ import annotations

import numpy as np

from .mesh import LinkageMesh

SCALE = 60.0  # px per mm
MARGIN = 0.8  # mm

_LOW = (33, 102, 172)  # blue
_MID = (247, 247, 247)
_HIGH = (178, 24, 43)  # red


def _lerp(a, b, t):
    return tuple(int(round(x + (y - x) * t)) for x, y in zip(a, b))


def _color(value: float, vmin: float, vmax: float) -> str:
    if vmax <= vmin:
        t = 0.5
    else:
        t = (value - vmin) / (vmax - vmin)
    t = min(1.0, max(0.0, t))
    rgb = _lerp(_LOW, _MID, t * 2) if t < 0.5 else _lerp(_MID, _HIGH, t * 2 - 1)
    return "#%02x%02x%02x" % rgb


def _f(v: float) -> str:
    return f"{v:.4f}"


def render_svg(
    mesh: LinkageMesh,
    positions: np.ndarray | None = None,
    cell_values: np.ndarray | None = None,
    edge_values: np.ndarray | None = None,
    value_label: str = "",
    handle_targets: dict[int, np.ndarray] | None = None,
    fixed_vertices=None,
) -> str:
    pos = mesh.vertices if positions is None else np.asarray(positions, float)
    pts = [pos]
    if handle_targets:
        pts.append(np.array(list(handle_targets.values()), float))
    allpts = np.vstack(pts)
    lo = allpts.min(axis=0) - MARGIN
    hi = allpts.max(axis=0) + MARGIN
    w, h = (hi - lo) * SCALE

    def xy(p):
        return _f((p[0] - lo[0]) * SCALE), _f((hi[1] - p[1]) * SCALE)  # y up

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" height="{_f(h + 24)}" '
        f'viewBox="0 0 {_f(w)} {_f(h + 24)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]

    if cell_values is not None:
        vals = np.asarray(cell_values, float)
        vmin, vmax = float(vals.min()), float(vals.max())
        for ci, ring in enumerate(mesh.cells):
            path = " ".join("%s,%s" % xy(pos[v]) for v in ring)
            out.append(
                f'<polygon points="{path}" fill="{_color(vals[ci], vmin, vmax)}" stroke="none"/>'
            )
        out.append(
            f'<text x="4" y="{_f(h + 16)}" font-family="monospace" font-size="12">'
            f"{value_label}: min={vmin:.5f} max={vmax:.5f} (blue=min, red=max)</text>"
        )
    elif edge_values is not None:
        ev = np.asarray(edge_values, float)
        evmin, evmax = float(ev.min()), float(ev.max())
        out.append(
            f'<text x="4" y="{_f(h + 16)}" font-family="monospace" font-size="12">'
            f"{value_label}: min={evmin:.5f} max={evmax:.5f} (blue=min, red=max)</text>"
        )
    elif value_label:
        out.append(
            f'<text x="4" y="{_f(h + 16)}" font-family="monospace" font-size="12">{value_label}</text>'
        )

    for ei, (a, b) in enumerate(mesh.edges):
        xa, ya = xy(pos[a])
        xb, yb = xy(pos[b])
        if edge_values is not None:
            stroke = _color(float(edge_values[ei]), evmin, evmax)
        else:
            stroke = "#333333"
        out.append(
            f'<line x1="{xa}" y1="{ya}" x2="{xb}" y2="{yb}" stroke="{stroke}" stroke-width="1.5"/>'
        )

    if fixed_vertices is not None:
        for vid in sorted(int(v) for v in fixed_vertices):
            x, y = xy(pos[vid])
            out.append(
                f'<rect x="{_f(float(x) - 3)}" y="{_f(float(y) - 3)}" width="6" height="6" fill="#000000"/>'
            )
    if handle_targets:
        for vid in sorted(handle_targets):
            tx, ty = xy(np.asarray(handle_targets[vid], float))
            out.append(
                f'<circle cx="{tx}" cy="{ty}" r="4" fill="none" stroke="#1f6fc4" stroke-width="1.5"/>'
            )
            ax, ay = xy(pos[vid])
            out.append(f'<circle cx="{ax}" cy="{ay}" r="2.5" fill="#1a9641"/>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
