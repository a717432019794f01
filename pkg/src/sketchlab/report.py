"""CSV emission and minimal SVG line charts for experiment outputs."""
from __future__ import annotations

import csv
import html
import math
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    """Serialize one cell: floats as 17 significant digits, NaN as ``NaN``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(rows, path, columns) -> Path:
    """Write ``rows`` (dicts) under a fixed header; missing cells are empty."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
            w.writerow(columns)
            for row in rows:
                extra = set(row) - set(columns)
                if extra:
                    raise ValueError(f"row has columns outside the manifest: {sorted(extra)}")
                w.writerow([format_value(row.get(c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
W, H = 640, 420
ML, MR, MT, MB = 70, 150, 40, 50


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= n:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step) + 1)]


def _fmt_tick(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return format(v, ".4g")


def line_chart(path, series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
               logx: bool = False, logy: bool = False, step: bool = False) -> Path:
    """Write a polyline chart. ``series`` maps label to ``(x, y)`` arrays.

    Log axes drop nonpositive points. ``step`` draws each series as a
    histogram-style staircase.
    """
    prepared = {}
    for label, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        if logx:
            x = np.log10(x)
        if logy:
            y = np.log10(y)
        prepared[label] = (x, y)
    xs = np.concatenate([p[0] for p in prepared.values()] or [np.zeros(1)])
    ys = np.concatenate([p[1] for p in prepared.values()] or [np.zeros(1)])
    if xs.size == 0:
        xs = ys = np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = W - ML - MR, H - MT - MB

    def px(v):
        return ML + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MT + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{html.escape(title)}</text>',
           f'<line x1="{ML}" y1="{MT + ph}" x2="{ML + pw}" y2="{MT + ph}" stroke="black"/>',
           f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{MT + ph}" stroke="black"/>']
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{px(v):.1f}" y1="{MT + ph}" x2="{px(v):.1f}" y2="{MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(v):.1f}" y="{MT + ph + 16}" text-anchor="middle">{_fmt_tick(v, logx)}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{ML - 4}" y1="{py(v):.1f}" x2="{ML}" y2="{py(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{ML - 6}" y="{py(v) + 4:.1f}" text-anchor="end">{_fmt_tick(v, logy)}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{html.escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MT + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MT + ph / 2:.1f})">{html.escape(ylabel)}</text>')
    for k, (label, (x, y)) in enumerate(prepared.items()):
        color = _PALETTE[k % len(_PALETTE)]
        if step and x.size:
            xx = np.repeat(x, 2)[1:]
            yy = np.repeat(y, 2)[:-1]
            x, y = xx, yy
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MT + 14 + 16 * k
        out.append(f'<line x1="{ML + pw + 10}" y1="{ly}" x2="{ML + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ML + pw + 34}" y="{ly + 4}">{html.escape(str(label))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def histogram_series(values, bins: int = 40):
    """Bin edges and densities suitable for ``line_chart(..., step=True)``."""
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    dens, edges = np.histogram(values, bins=bins, density=True)
    return edges, np.append(dens, dens[-1] if dens.size else 0.0)
