"""Minimal SVG line charts for bound curves (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#c0392b", "#2471a3", "#1e8449", "#7d3c98", "#b9770e", "#2e4053", "#d35400", "#148f77")


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _path(xs, ys, sx, sy):
    """Polyline path; breaks at non-finite values."""
    parts, pen_down = [], False
    for x, y in zip(xs, ys):
        if not (math.isfinite(x) and math.isfinite(y)):
            pen_down = False
            continue
        parts.append(("L" if pen_down else "M") + f"{_fmt(sx(x))},{_fmt(sy(y))}")
        pen_down = True
    return " ".join(parts)


def bounds_svg(series, y_range, width: int = 640, height: int = 400, title: str = "") -> str:
    """Render lower/upper curves.

    ``series`` is a list of ``(label, vstars, lo, hi)``; each label gets one
    colour, the upper curve solid and the lower one dashed. ``y_range`` fixes
    the vertical axis; values outside it are clipped to the frame.
    """
    y0, y1 = map(float, y_range)
    if not (math.isfinite(y0) and math.isfinite(y1)) or y0 >= y1:
        y0, y1 = -1.0, 1.0
    left, right, top, bottom = 56, 150, 28, 40
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + v * pw

    def sy(y):
        y = min(max(y, y0), y1)
        return top + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="#444"/>',
    ]
    for k in range(6):
        v = k / 5
        out.append(f'<line x1="{_fmt(sx(v))}" y1="{top + ph}" x2="{_fmt(sx(v))}" y2="{top + ph + 4}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(sx(v))}" y="{top + ph + 16}" text-anchor="middle">{_fmt(v)}</text>')
        y = y0 + k * (y1 - y0) / 5
        out.append(f'<line x1="{left - 4}" y1="{_fmt(sy(y))}" x2="{left}" y2="{_fmt(sy(y))}" stroke="#444"/>')
        out.append(f'<text x="{left - 6}" y="{_fmt(sy(y) + 4)}" text-anchor="end">{y:.3g}</text>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{left}" y1="{_fmt(sy(0))}" x2="{left + pw}" y2="{_fmt(sy(0))}" stroke="#aaa"/>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 6}" text-anchor="middle">v*</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="{top - 10}" text-anchor="middle">{escape(title)}</text>')
    for i, (label, v, lo, hi) in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        out.append(f'<path d="{_path(v, hi, sx, sy)}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        out.append(f'<path d="{_path(v, lo, sx, sy)}" fill="none" stroke="{colour}" stroke-width="1.5" stroke-dasharray="5,3"/>')
        ly = top + 10 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
