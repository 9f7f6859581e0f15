"""Static semilog-y convergence plots as self-contained SVG."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..core import Trajectory

__all__ = ["SchemaError", "MAX_POINTS", "downsample", "emit_plot", "render_svg"]

MAX_POINTS = 2000
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")
_DASHES = ("", "6,3", "2,2", "8,3,2,3")

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 180, 20, 50


class SchemaError(ValueError):
    pass


def downsample(k: np.ndarray, y: np.ndarray, max_points: int = MAX_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Evenly spaced subset that keeps both endpoints and the order of ``k``."""
    if len(k) <= max_points:
        return k, y
    idx = np.unique(np.linspace(0, len(k) - 1, max_points).round().astype(int))
    return k[idx], y[idx]


def _log_floor(y: np.ndarray) -> np.ndarray:
    # zero gaps cannot be drawn on a log axis; pin them below the smallest positive value
    positive = y[(y > 0) & np.isfinite(y)]
    floor = positive.min() / 10 if positive.size else 1e-16
    return np.log10(np.where((y > 0) & np.isfinite(y), y, floor))


def render_svg(curves: list[tuple[str, np.ndarray, np.ndarray]], title: str = "") -> str:
    """SVG text for ``(label, k, rel_gap)`` curves, log10 on the y-axis."""
    if not curves:
        raise ValueError("nothing to plot")
    prepared = []
    for label, k, y in curves:
        k = np.asarray(k, dtype=float)
        ly = _log_floor(np.asarray(y, dtype=float))
        k, ly = downsample(k, ly)
        prepared.append((label, k, ly))
    kmin = min(c[1].min() for c in prepared)
    kmax = max(c[1].max() for c in prepared)
    ymin = math.floor(min(c[2].min() for c in prepared))
    ymax = math.ceil(max(c[2].max() for c in prepared))
    if ymax == ymin:
        ymax += 1
    if kmax == kmin:
        kmax = kmin + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - kmin) / (kmax - kmin) * pw

    def sy(v):
        return TOP + (ymax - v) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    step = max(1, math.ceil((ymax - ymin) / 10))
    for e in range(ymin, ymax + 1, step):
        y = sy(e)
        out.append(f'<line class="ytick" x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    for v in np.linspace(kmin, kmax, 6):
        x = sx(v)
        out.append(f'<line class="xtick" x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 4}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{v:.0f}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">iteration k</text>')
    out.append(f'<text transform="translate(16,{TOP + ph / 2:.2f}) rotate(-90)" '
               f'text-anchor="middle">relative optimality gap</text>')
    for j, (label, k, ly) in enumerate(prepared):
        color = PALETTE[j % len(PALETTE)]
        dash = _DASHES[(j // len(PALETTE)) % len(_DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if len(k) == 1:
            out.append(f'<circle class="curve" cx="{sx(k[0]):.2f}" cy="{sy(ly[0]):.2f}" r="3" fill="{color}"/>')
        else:
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(k, ly))
            out.append(f'<polyline class="curve" fill="none" stroke="{color}" stroke-width="1.5"'
                       f'{dash_attr} points="{pts}"/>')
        ly_legend = TOP + 14 + 18 * j
        lx = LEFT + pw + 12
        out.append(f'<line class="legend" x1="{lx}" y1="{ly_legend}" x2="{lx + 24}" y2="{ly_legend}" '
                   f'stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly_legend + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_paths, labels, out_path, title: str = "") -> None:
    """Plot ``rel_gap`` against ``k`` for every trajectory CSV."""
    csv_paths = [Path(p) for p in csv_paths]
    labels = list(labels)
    if len(labels) != len(csv_paths):
        raise ValueError(f"{len(csv_paths)} CSV files but {len(labels)} labels")
    curves = []
    for path, label in zip(csv_paths, labels):
        try:
            traj = Trajectory.read_csv(path)
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
        if len(traj) == 0:
            raise SchemaError(f"{path}: no data rows")
        curves.append((label, traj.k, traj.rel_gap))
    Path(out_path).write_text(render_svg(curves, title))
