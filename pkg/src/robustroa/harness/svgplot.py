"""Minimal self-contained SVG line plots (no external renderer).

Just enough for the pipeline figures: polyline series on labeled axes,
optional horizontal guide lines and shaded horizontal bands, a legend.
Pixel coordinates are written at fixed precision so repeated runs emit
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray
    color: str | None = None
    dash: str | None = None  # e.g. "6,4"
    width: float = 1.6


def _ticks(lo, hi, target=6):
    """Round tick positions covering [lo, hi] at a 1/2/5 step."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt_tick(v):
    return f"{v:.6g}"


def line_plot(path, series, title="", xlabel="", ylabel="",
              xlim=None, ylim=None, hlines=(), bands=(),
              width=640, height=420):
    """Write an SVG line chart.

    series : list of Series
    hlines : list of (y, label, color) guide lines
    bands  : list of (y_lo, y_hi, color, label) shaded horizontal bands
    Data outside the axes box is clipped, so diverging traces stay inside
    the frame.
    """
    series = list(series)
    ml, mr, mt, mb = 62, 16, 34, 46
    pw, ph = width - ml - mr, height - mt - mb

    def data_range(pick, lim):
        if lim is not None:
            return float(lim[0]), float(lim[1])
        vals = [np.asarray(pick(s), dtype=float) for s in series]
        vals = [v[np.isfinite(v)] for v in vals]
        allv = np.concatenate(vals) if vals else np.array([0.0, 1.0])
        for y0, y1, _, _ in (bands if pick is _pick_y else ()):
            allv = np.append(allv, [y0, y1])
        for y0, _, _ in (hlines if pick is _pick_y else ()):
            allv = np.append(allv, y0)
        lo, hi = float(np.min(allv)), float(np.max(allv))
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.04 * (hi - lo)
        return lo - pad, hi + pad

    x0, x1 = data_range(_pick_x, xlim)
    y0, y1 = data_range(_pick_y, ylim)

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
               f'height="{height}" viewBox="0 0 {width} {height}">')
    out.append('<style>text{font-family:Helvetica,Arial,sans-serif;font-size:11px;'
               'fill:#222}.t{font-size:13px;font-weight:bold}</style>')
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    out.append(f'<clipPath id="box"><rect x="{ml}" y="{mt}" width="{pw}" '
               f'height="{ph}"/></clipPath>')

    for lo, hi, color, _ in bands:
        ya, yb = sorted((sy(lo), sy(hi)))
        out.append(f'<rect x="{ml}" y="{yb:.2f}" width="{pw}" '
                   f'height="{ya - yb:.2f}" fill="{color}" opacity="0.18"/>')

    for tx in _ticks(x0, x1):
        px = sx(tx)
        out.append(f'<line x1="{px:.2f}" y1="{mt}" x2="{px:.2f}" y2="{mt + ph}" '
                   'stroke="#ddd" stroke-width="1"/>')
        out.append(f'<text x="{px:.2f}" y="{mt + ph + 16}" '
                   f'text-anchor="middle">{_fmt_tick(tx)}</text>')
    for ty in _ticks(y0, y1):
        py = sy(ty)
        out.append(f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" '
                   'stroke="#ddd" stroke-width="1"/>')
        out.append(f'<text x="{ml - 6}" y="{py + 4:.2f}" '
                   f'text-anchor="end">{_fmt_tick(ty)}</text>')

    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
               'fill="none" stroke="#444" stroke-width="1"/>')

    for y, label, color in hlines:
        py = sy(y)
        out.append(f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" '
                   f'stroke="{color}" stroke-width="1.2" stroke-dasharray="4,3" '
                   'clip-path="url(#box)"/>')
        if label:
            out.append(f'<text x="{ml + pw - 4}" y="{py - 4:.2f}" '
                       f'text-anchor="end" fill="{color}">{label}</text>')

    for idx, s in enumerate(series):
        color = s.color or PALETTE[idx % len(PALETTE)]
        xs = np.asarray(s.x, dtype=float)
        ys = np.asarray(s.y, dtype=float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs[ok], ys[ok]))
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="{s.width}"{dash} clip-path="url(#box)"/>')

    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
                   f'class="t">{title}</text>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>')

    lx, ly = ml + 10, mt + 14
    for idx, s in enumerate(series):
        color = s.color or PALETTE[idx % len(PALETTE)]
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly}">{s.name}</text>')
        ly += 16

    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _pick_x(s):
    return s.x


def _pick_y(s):
    return s.y
