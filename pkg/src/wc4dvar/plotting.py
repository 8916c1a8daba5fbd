"""Minimal deterministic SVG line and scatter plots.

Output depends only on the input data: coordinates are written with fixed
precision and series keep the order they are given in.
"""
import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
WIDTH, HEIGHT = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 190, 40, 60


def _ticks(lo, hi, log, count=5):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, math.ceil((b - a) / 6))
        return [float(e) for e in range(a, b + 1, step)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt_tick(v, log):
    if log:
        return f"1e{int(v)}"
    return f"{v:.4g}"


def render_svg(series, title="", xlabel="", ylabel="", logy=False, scatter=False):
    """SVG text for ``series``: a list of (name, x, y) with equal-length x and y."""
    if not series or any(len(x) == 0 for _, x, _ in series):
        raise ValueError("nothing to plot: empty series")
    xs = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, _, y in series])
    if logy:
        if np.any(ys <= 0):
            raise ValueError("log scale needs positive values")
        ys = np.log10(ys)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1, False):
        out.append(f'<line x1="{px(t):.2f}" y1="{TOP + ph}" x2="{px(t):.2f}" y2="{TOP + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{TOP + ph + 18}" text-anchor="middle">'
                   f'{_fmt_tick(t, False)}</text>')
    for t in _ticks(y0, y1, logy):
        if not y0 - 1e-12 <= t <= y1 + 1e-12:
            continue
        out.append(f'<line x1="{LEFT - 5}" y1="{py(t):.2f}" x2="{LEFT}" y2="{py(t):.2f}" '
                   'stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py(t) + 4:.2f}" text-anchor="end">'
                   f'{_fmt_tick(t, logy)}</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{TOP - 14}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 16}" text-anchor="middle">'
                   f'{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>')
    for i, (name, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        y = np.asarray(y, dtype=float)
        y = np.log10(y) if logy else y
        pts = [(px(a), py(b)) for a, b in zip(np.asarray(x, dtype=float), y)]
        if scatter:
            out.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="{color}"/>' for a, b in pts)
        else:
            path = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                       'stroke-width="1.5"/>')
        ly = TOP + 14 + 18 * i
        out.append(f'<line x1="{LEFT + pw + 12}" y1="{ly - 4}" x2="{LEFT + pw + 32}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{LEFT + pw + 38}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
