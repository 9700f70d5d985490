"""Minimal self-contained SVG line charts and histograms."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=80, right=150, top=40, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.3g}"


def _bounds(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def emit_chart(
    series: Sequence[tuple[Sequence[float], Sequence[float]]],
    labels: Sequence[str],
    path,
    title: str = "",
    xlabel: str = "t",
    ylabel: str = "",
    mode: str = "line",
    log: bool = False,
) -> Path:
    """Write ``series`` (list of ``(x, y)``) as an SVG chart.

    ``mode="histogram"`` draws bars from ``(bin_center, density)`` pairs of the
    first series. ``log=True`` uses log10 on both axes.
    """
    if not series or any(len(x) == 0 for x, _ in series):
        raise ValueError("cannot chart an empty series")
    if len(labels) != len(series):
        raise ValueError("one label per series is required")
    if mode not in ("line", "histogram"):
        raise ValueError(f"unknown chart mode {mode!r}")

    xs = [np.asarray(x, dtype=float) for x, _ in series]
    ys = [np.asarray(y, dtype=float) for _, y in series]
    if log:
        if any((x <= 0).any() for x in xs) or any((y <= 0).any() for y in ys):
            raise ValueError("log axes need positive data")
        xs = [np.log10(x) for x in xs]
        ys = [np.log10(y) for y in ys]

    x0, x1 = _bounds(np.concatenate(xs))
    y0, y1 = _bounds(np.concatenate(ys + ([np.zeros(1)] if mode == "histogram" else [])))
    if mode == "histogram" and xs[0].size > 1:
        half = 0.5 * float(np.min(np.diff(np.sort(xs[0]))))
        x0, x1 = x0 - half, x1 + half
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        xl = _tick_label(10**xv if log else xv)
        yl = _tick_label(10**yv if log else yv)
        out.append(f'<line x1="{_fmt(px(xv))}" y1="{_fmt(py(y0))}" x2="{_fmt(px(xv))}" '
                   f'y2="{_fmt(py(y0) + 5)}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(xv))}" y="{_fmt(py(y0) + 18)}" text-anchor="middle">{xl}</text>')
        out.append(f'<line x1="{_fmt(px(x0) - 5)}" y1="{_fmt(py(yv))}" x2="{_fmt(px(x0))}" '
                   f'y2="{_fmt(py(yv))}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(x0) - 8)}" y="{_fmt(py(yv) + 4)}" text-anchor="end">{yl}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.0f})">{escape(ylabel)}</text>')

    if mode == "histogram":
        x, y = xs[0], ys[0]
        order = np.argsort(x)
        x, y = x[order], y[order]
        width = float(np.min(np.diff(x))) if x.size > 1 else (x1 - x0)
        for xc, yv in zip(x, y):
            left, right = px(xc - width / 2), px(xc + width / 2)
            top, base = py(max(yv, 0.0)), py(0.0)
            out.append(f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(right - left)}" '
                       f'height="{_fmt(base - top)}" fill="{PALETTE[0]}" stroke="white"/>')
    else:
        for k, (x, y) in enumerate(zip(xs, ys)):
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y) if math.isfinite(b))
            out.append(f'<polyline fill="none" stroke="{PALETTE[k % len(PALETTE)]}" '
                       f'stroke-width="1.5" points="{pts}"/>')

    lx = WIDTH - MARGIN["right"] + 12
    for k, label in enumerate(labels):
        ly = MARGIN["top"] + 14 + 18 * k
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")

    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
