"""Deterministic SVG line chart of a sweep summary.

One polyline per output dimension d over a log-scaled n axis, each with a
translucent polygon for mean +/- one standard deviation. Coordinates are
printed with fixed precision and nothing time-dependent is emitted, so the
same CSV always renders to the same bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .io import SUMMARY_COLUMNS, read_table

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 130, 40, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
Y_LABEL = "recovery error ‖AAᵀ − Z*‖_F"
X_LABEL = "sample size n"


def load_summary(path):
    rows = read_table(path, SUMMARY_COLUMNS)
    try:
        return [
            (int(r["d"]), int(r["n"]), float(r["mean_rec_err"]), float(r["std_rec_err"]))
            for r in rows
        ]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _p(v: float) -> str:
    return f"{v:.2f}"


def render_svg(points, title: str = "Recovery error vs sample size") -> str:
    """``points``: iterable of ``(d, n, mean, std)``."""
    points = sorted(points)
    if not points:
        raise ValueError("nothing to plot")
    ns = [p[1] for p in points]
    if min(ns) <= 0:
        raise ValueError("n must be positive for the log axis")
    lo_y = min(0.0, min(p[2] - p[3] for p in points))
    hi_y = max(p[2] + p[3] for p in points)
    if hi_y <= lo_y:
        hi_y = lo_y + 1.0
    lx0, lx1 = math.log10(min(ns)), math.log10(max(ns))
    if lx1 == lx0:
        lx0, lx1 = lx0 - 0.5, lx1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(n):
        return LEFT + (math.log10(n) - lx0) / (lx1 - lx0) * pw

    def sy(v):
        return TOP + (1.0 - (v - lo_y) / (hi_y - lo_y)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for n in sorted(set(ns)):
        x = sx(n)
        out.append(f'<line x1="{_p(x)}" y1="{TOP + ph}" x2="{_p(x)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_p(x)}" y="{TOP + ph + 18}" text-anchor="middle">{n}</text>')
    for i in range(6):
        v = lo_y + (hi_y - lo_y) * i / 5
        y = sy(v)
        out.append(f'<line x1="{LEFT - 5}" y1="{_p(y)}" x2="{LEFT}" y2="{_p(y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_p(y + 4)}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(X_LABEL)}</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.0f})">{escape(Y_LABEL)}</text>'
    )

    ds = sorted({p[0] for p in points})
    for idx, d in enumerate(ds):
        color = PALETTE[idx % len(PALETTE)]
        series = [p for p in points if p[0] == d]
        upper = [f"{_p(sx(n))},{_p(sy(m + s))}" for _, n, m, s in series]
        lower = [f"{_p(sx(n))},{_p(sy(m - s))}" for _, n, m, s in reversed(series)]
        line = [f"{_p(sx(n))},{_p(sy(m))}" for _, n, m, _ in series]
        out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        out.append(f'<polyline points="{" ".join(line)}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = TOP + 10 + 18 * idx
        lx = WIDTH - RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">d = {d}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_summary(csv_path, svg_path) -> Path:
    svg = render_svg(load_summary(csv_path))
    svg_path = Path(svg_path)
    try:
        svg_path.write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {svg_path}: {exc.strerror or exc}") from exc
    return svg_path
