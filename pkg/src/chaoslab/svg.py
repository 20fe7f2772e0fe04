"""Minimal deterministic SVG line plots (no timestamps, fixed number formatting)."""

from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

_COLORS = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98")


def _f(x: float) -> str:
    return f"{x:.2f}"


def line_plot(series: Sequence[tuple[str, np.ndarray, np.ndarray]], title: str,
              xlabel: str, ylabel: str, metadata: dict | None = None,
              ylim: tuple[float, float] | None = None, width: int = 640, height: int = 400) -> str:
    """Render ``(label, x, y)`` curves; NaN or out-of-range points break a curve."""
    ml, mr, mt, mb = 60, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    if ylim is None:
        ys = ys[np.isfinite(ys)]
        y0, y1 = float(ys.min()), float(ys.max())
    else:
        y0, y1 = ylim
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if metadata:
        items = "; ".join(f"{escape(str(k))}={escape(str(v))}" for k, v in sorted(metadata.items()))
        out.append(f"<metadata>{items}</metadata>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{_f(px(xv))}" y="{mt + ph + 18}" text-anchor="middle" font-size="11">{xv:.3g}</text>')
        out.append(f'<text x="{ml - 6}" y="{_f(py(yv) + 4)}" text-anchor="end" font-size="11">{yv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, (label, x, y) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ok = np.isfinite(y) & (y >= y0) & (y <= y1)
        seg: list[str] = []
        for xi, yi, good in zip(x, y, ok):
            if good:
                seg.append(f"{_f(px(xi))},{_f(py(yi))}")
            elif seg:
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
                seg = []
        if seg:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        out.append(f'<text x="{ml + pw - 8}" y="{mt + 18 + 16 * k}" text-anchor="end" font-size="12" '
                   f'fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
