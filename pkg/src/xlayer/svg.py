"""Minimal deterministic SVG line charts (no plotting dependency, byte-stable output)."""

from __future__ import annotations

import math
from html import escape
from typing import Sequence

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return s.rstrip("0").rstrip(".") if "." in s else s


def _tick(v: float) -> str:
    return "0" if v == 0 else f"{v:.3g}"


def _bounds(values: list[float], log: bool = False) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = (lo - 1, hi + 1) if not log else (lo / 10, hi * 10)
    return lo, hi


def line_chart(
    title: str,
    xlabel: str,
    ylabel: str,
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    comment: str | None = None,
    log_x: bool = False,
    y_range: tuple[float, float] | None = None,
) -> str:
    """One polyline per series. Empty input yields labelled, empty axes."""
    pts = [p for _, s in series for p in s]
    tx = (lambda x: math.log10(x)) if log_x else (lambda x: x)
    if pts:
        x0, x1 = _bounds([tx(x) for x, _ in pts])
        y0, y1 = y_range or _bounds([y for _, y in pts])
    else:
        x0, x1 = 0.0, 1.0
        y0, y1 = y_range or (0.0, 1.0)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (tx(x) - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">'
    ]
    if comment:
        out.append(f"<!-- {escape(comment)} -->")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(
        f'<path d="M{LEFT},{TOP} L{LEFT},{TOP + ph} L{LEFT + pw},{TOP + ph}" stroke="black" fill="none"/>'
    )
    for i in range(5):
        fy = y0 + (y1 - y0) * i / 4
        y = sy(fy)
        out.append(f'<line x1="{LEFT - 4}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end">{_tick(fy)}</text>')
        fx = x0 + (x1 - x0) * i / 4
        x = LEFT + pw * i / 4
        label = _tick(10**fx) if log_x else _tick(fx)
        out.append(f'<line x1="{_fmt(x)}" y1="{TOP + ph}" x2="{_fmt(x)}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{TOP + ph + 16}" text-anchor="middle">{label}</text>')
    out.append(f'<text x="{LEFT + pw // 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{TOP + ph // 2}" text-anchor="middle" transform="rotate(-90 16 {TOP + ph // 2})">'
        f"{escape(ylabel)}</text>"
    )
    if not pts:
        out.append(f'<text x="{LEFT + pw // 2}" y="{TOP + ph // 2}" text-anchor="middle" fill="gray">no data</text>')
    for k, (name, s) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        if s:
            coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in s)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, y in s:
                out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" fill="{color}"/>')
        ly = TOP + 14 * k + 6
        out.append(f'<line x1="{WIDTH - RIGHT + 10}" y1="{ly}" x2="{WIDTH - RIGHT + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - RIGHT + 34}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
