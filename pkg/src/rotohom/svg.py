"""Minimal self-contained SVG plots: heatmap, histogram and x-y plot.

Output uses inline attributes only and fixed number formatting, so the same
data always gives the same bytes.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=36, bottom=52)
COLORS = {"cw": "#1f77b4", "acw": "#d62728", "total": "#555555"}


def _n(x) -> str:
    return f"{float(x):.2f}"


class _Frame:
    """Maps data coordinates to the plotting area."""

    def __init__(self, xlim, ylim, width=WIDTH, height=HEIGHT):
        self.x0, self.x1 = _padded(xlim)
        self.y0, self.y1 = _padded(ylim)
        self.left, self.top = MARGIN["left"], MARGIN["top"]
        self.w = width - MARGIN["left"] - MARGIN["right"]
        self.h = height - MARGIN["top"] - MARGIN["bottom"]

    def x(self, v):
        return self.left + (np.asarray(v, dtype=float) - self.x0) / (self.x1 - self.x0) * self.w

    def y(self, v):
        return self.top + self.h - (np.asarray(v, dtype=float) - self.y0) / (self.y1 - self.y0) * self.h


def _padded(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _header(title, width=WIDTH, height=HEIGHT):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def _axes(fr: _Frame, xlabel, ylabel, nticks=5):
    out = [f'<rect x="{fr.left}" y="{fr.top}" width="{fr.w}" height="{fr.h}" fill="none" stroke="black"/>']
    for v in np.linspace(fr.x0, fr.x1, nticks):
        px = _n(fr.x(v))
        out.append(f'<line x1="{px}" y1="{fr.top + fr.h}" x2="{px}" y2="{fr.top + fr.h + 5}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{fr.top + fr.h + 18}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(fr.y0, fr.y1, nticks):
        py = _n(fr.y(v))
        out.append(f'<line x1="{fr.left - 5}" y1="{py}" x2="{fr.left}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{fr.left - 8}" y="{py}" text-anchor="end" dominant-baseline="middle">{v:.3g}</text>')
    out.append(f'<text x="{fr.left + fr.w / 2:.1f}" y="{fr.top + fr.h + 40}" text-anchor="middle">{escape(xlabel)}</text>')
    cy = fr.top + fr.h / 2
    out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>')
    return out


def _viridis_like(t):
    """Blue-green-yellow ramp from a handful of anchor colours."""
    anchors = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float)
    t = float(np.clip(t, 0.0, 1.0)) * (len(anchors) - 1)
    i = min(int(t), len(anchors) - 2)
    rgb = anchors[i] + (anchors[i + 1] - anchors[i]) * (t - i)
    return "#{:02x}{:02x}{:02x}".format(*(int(round(c)) for c in rgb))


def heatmap(x, y, z, *, title="", xlabel="", ylabel="", zlabel="") -> str:
    """``z`` has shape (len(y), len(x)); cells are centred on the grid values."""
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    if z.shape != (y.size, x.size):
        raise ValueError(f"z has shape {z.shape}, expected {(y.size, x.size)}")

    def edges(v):
        if v.size == 1:
            return np.array([v[0] - 0.5, v[0] + 0.5])
        mid = (v[1:] + v[:-1]) / 2
        return np.concatenate([[2 * v[0] - mid[0]], mid, [2 * v[-1] - mid[-1]]])

    ex, ey = edges(x), edges(y)
    fr = _Frame((ex.min(), ex.max()), (ey.min(), ey.max()), width=WIDTH - 60)
    zmin, zmax = float(np.nanmin(z)), float(np.nanmax(z))
    span = zmax - zmin or 1.0
    out = _header(title)
    px, py = fr.x(ex), fr.y(ey)
    for i in range(y.size):
        for j in range(x.size):
            xa, xb = sorted((px[j], px[j + 1]))
            ya, yb = sorted((py[i], py[i + 1]))
            out.append(f'<rect x="{_n(xa)}" y="{_n(ya)}" width="{_n(xb - xa + 0.3)}" height="{_n(yb - ya + 0.3)}" '
                       f'fill="{_viridis_like((z[i, j] - zmin) / span)}"/>')
    out += _axes(fr, xlabel, ylabel)
    # colour bar
    bx, by, bh = WIDTH - 70, fr.top, fr.h
    for k in range(50):
        out.append(f'<rect x="{bx}" y="{_n(by + bh * (1 - (k + 1) / 50))}" width="14" height="{_n(bh / 50 + 0.3)}" '
                   f'fill="{_viridis_like((k + 0.5) / 50)}"/>')
    out.append(f'<text x="{bx + 18}" y="{by + 8}">{zmax:.3g}</text>')
    out.append(f'<text x="{bx + 18}" y="{by + bh}">{zmin:.3g}</text>')
    out.append(f'<text x="{bx + 7}" y="{by - 8}" text-anchor="middle">{escape(zlabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def histogram(bin_edges, counts: Dict[str, Sequence[int]], *, markers: Optional[Dict[str, float]] = None,
              title="", xlabel="", ylabel="count") -> str:
    """Side-by-side bars per group, with optional labelled vertical markers."""
    edges = np.asarray(bin_edges, float)
    groups = [g for g in ("cw", "acw") if g in counts] or list(counts)
    top = max([int(np.max(counts[g])) for g in groups if len(counts[g])] + [1])
    fr = _Frame((edges[0], edges[-1]), (0, top * 1.1))
    fr.y0 = 0.0
    out = _header(title)
    width = (edges[1:] - edges[:-1]) / max(len(groups), 1)
    for k, g in enumerate(groups):
        for i, c in enumerate(counts[g]):
            if not c:
                continue
            xa = edges[i] + k * width[i]
            x0, x1 = fr.x(xa), fr.x(xa + width[i])
            y0, y1 = fr.y(c), fr.y(0)
            out.append(f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" height="{_n(y1 - y0)}" '
                       f'fill="{COLORS.get(g, "#888888")}" fill-opacity="0.8"/>')
    out += _axes(fr, xlabel, ylabel)
    dashes = ["6,3", "2,2", "10,4", "4,4"]
    for k, (label, value) in enumerate((markers or {}).items()):
        if not np.isfinite(value):
            continue
        px = _n(fr.x(value))
        out.append(f'<line x1="{px}" y1="{fr.top}" x2="{px}" y2="{fr.top + fr.h}" stroke="black" '
                   f'stroke-dasharray="{dashes[k % len(dashes)]}"/>')
        out.append(f'<text x="{fr.left + fr.w - 6}" y="{fr.top + 16 + 15 * k}" text-anchor="end">'
                   f'{escape(label)} = {value:.3f}</text>')
    for k, g in enumerate(groups):
        out.append(f'<rect x="{fr.left + 8}" y="{fr.top + 8 + 16 * k}" width="10" height="10" fill="{COLORS.get(g, "#888888")}"/>')
        out.append(f'<text x="{fr.left + 22}" y="{fr.top + 17 + 16 * k}">{escape(g)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def xy_plot(series, *, title="", xlabel="", ylabel="") -> str:
    """``series`` is a list of dicts with keys ``x``, ``y`` and optional
    ``label``, ``color``, ``style`` ('points' or 'line') and ``yerr``."""
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], float) for s in series])
    fr = _Frame((np.nanmin(xs), np.nanmax(xs)), (np.nanmin(ys), np.nanmax(ys)))
    out = _header(title)
    for k, s in enumerate(series):
        color = s.get("color", list(COLORS.values())[k % len(COLORS)])
        px, py = fr.x(s["x"]), fr.y(s["y"])
        if s.get("style", "points") == "line":
            pts = " ".join(f"{_n(a)},{_n(b)}" for a, b in zip(px, py))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            err = s.get("yerr")
            for i, (a, b) in enumerate(zip(px, py)):
                if err is not None:
                    lo, hi = fr.y(s["y"][i] - err[i]), fr.y(s["y"][i] + err[i])
                    out.append(f'<line x1="{_n(a)}" y1="{_n(lo)}" x2="{_n(a)}" y2="{_n(hi)}" stroke="{color}"/>')
                out.append(f'<circle cx="{_n(a)}" cy="{_n(b)}" r="2.5" fill="{color}"/>')
        if s.get("label"):
            out.append(f'<text x="{fr.left + fr.w - 6}" y="{fr.top + 16 + 15 * k}" text-anchor="end" '
                       f'fill="{color}">{escape(s["label"])}</text>')
    out += _axes(fr, xlabel, ylabel)
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = ["heatmap", "histogram", "xy_plot"]
