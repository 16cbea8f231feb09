"""Minimal SVG line plots rendered from CSV text."""

from __future__ import annotations

import csv
import io
import math
from xml.sax.saxutils import escape

__all__ = ["plot_csv"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
W, H = 720, 300
ML, MR, MT, MB = 70, 170, 30, 45


def _read(csv_text: str) -> tuple[list[str], list[list[float]]]:
    lines = [ln for ln in csv_text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header = rows[0]
    cols = [[] for _ in header]
    for r in rows[1:]:
        for i, v in enumerate(r):
            cols[i].append(float(v))
    return header, cols


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        return [10.0**k for k in range(math.ceil(math.log10(lo) - 1e-9), math.floor(math.log10(hi) + 1e-9) + 1)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:g}"


def _panel(header, cols, x_col, y_cols, logx, ylabel, y0) -> list[str]:
    xs = cols[header.index(x_col)]
    fx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    finite = [v for c in y_cols for v in cols[header.index(c)] if math.isfinite(v)]
    ylo, yhi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    xlo, xhi = fx(xs[0]), fx(xs[-1])
    if xhi == xlo:
        xhi = xlo + 1.0
    pw, ph = W - ML - MR, H - MT - MB

    def px(x):
        return ML + (fx(x) - xlo) / (xhi - xlo) * pw

    def py(y):
        return y0 + MT + (yhi - y) / (yhi - ylo) * ph

    out = [f'<rect x="{ML}" y="{y0 + MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in _ticks(xs[0], xs[-1], logx) if logx else _ticks(xs[0], xs[-1], False):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{y0 + MT}" x2="{x:.2f}" y2="{y0 + MT + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{y0 + MT + ph + 15}" font-size="10" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(ylo, yhi, False):
        y = py(t)
        out.append(f'<line x1="{ML}" y1="{y:.2f}" x2="{ML + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{ML - 5}" y="{y + 3:.2f}" font-size="10" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="15" y="{y0 + MT + ph / 2:.1f}" font-size="11" transform="rotate(-90 15 {y0 + MT + ph / 2:.1f})" text-anchor="middle">{escape(ylabel)}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{y0 + H - 8}" font-size="11" text-anchor="middle">{escape(x_col)}</text>')
    for k, c in enumerate(y_cols):
        ys = cols[header.index(c)]
        color = _COLORS[k % len(_COLORS)]
        segs, cur = [], []
        for x, y in zip(xs, ys):
            if math.isfinite(y) and (not logx or x > 0):
                cur.append(f"{px(x):.2f},{py(y):.2f}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        for seg in segs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{" ".join(seg)}"/>')
        ly = y0 + MT + 12 + 14 * k
        out.append(f'<line x1="{W - MR + 10}" y1="{ly - 4}" x2="{W - MR + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 35}" y="{ly}" font-size="10">{escape(c)}</text>')
    return out


def plot_csv(csv_text: str, x_col: str, panels: list[tuple[list[str], str]], logx: bool = False, title: str = "", note: str = "") -> str:
    """Render one panel per ``(columns, ylabel)`` sharing the x column."""
    header, cols = _read(csv_text)
    total_h = H * len(panels) + 30
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total_h}" viewBox="0 0 {W} {total_h}">',
    ]
    if note:
        out.append(f"<!-- {escape(note)} -->")
    out.append(f'<text x="{W / 2}" y="18" font-size="13" text-anchor="middle">{escape(title)}</text>')
    for i, (ycols, ylabel) in enumerate(panels):
        out += _panel(header, cols, x_col, ycols, logx, ylabel, 20 + i * H)
    out.append("</svg>")
    return "\n".join(out) + "\n"
