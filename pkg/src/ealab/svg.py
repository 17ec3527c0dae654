"""Minimal SVG line charts, no plotting library needed."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def _fmt(v: float) -> str:
    if v != 0 and (abs(v) >= 1e4 or abs(v) < 1e-2):
        return f"{v:.1e}"
    return f"{v:.3g}"


def panel(title: str, series: dict, x0: float, y0: float, w: float, h: float,
          log_y: bool = False, xlabel: str = "n", ylabel: str = "") -> list:
    """SVG elements for one chart; ``series`` maps label -> [(x, y), ...]."""
    pts = [(x, y) for s in series.values() for x, y in s if not log_y or y > 0]
    out = [f'<text x="{x0 + w / 2}" y="{y0 - 8}" text-anchor="middle" '
           f'font-size="13">{escape(title)}</text>']
    if not pts:
        return out
    fy = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    xs = [p[0] for p in pts]
    ys = [fy(p[1]) for p in pts]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        ymax = ymin + 1
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def px(x):
        return x0 + (x - xmin) / (xmax - xmin) * w

    def py(y):
        return y0 + h - (y - ymin) / (ymax - ymin) * h

    out.append(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#444"/>')
    for t in _ticks(xmin, xmax):
        out.append(f'<text x="{px(t):.1f}" y="{y0 + h + 14}" text-anchor="middle" '
                   f'font-size="10">{_fmt(t)}</text>')
    for t in _ticks(ymin, ymax):
        label = _fmt(10 ** t) if log_y else _fmt(t)
        out.append(f'<text x="{x0 - 4}" y="{py(t) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{label}</text>')
    out.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 30}" text-anchor="middle" '
               f'font-size="11">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="{x0 - 48}" y="{y0 + h / 2}" font-size="11" '
                   f'transform="rotate(-90 {x0 - 48} {y0 + h / 2})" '
                   f'text-anchor="middle">{escape(ylabel)}</text>')
    for k, (label, s) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{px(x):.1f},{py(fy(y)):.1f}"
                          for x, y in sorted(s) if not log_y or y > 0)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        ly = y0 + 14 + 14 * k
        out.append(f'<line x1="{x0 + 8}" y1="{ly - 4}" x2="{x0 + 26}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x0 + 30}" y="{ly}" font-size="10">{escape(label)}</text>')
    return out


def chart(panels: list, log_y: bool = False, ylabel: str = "") -> str:
    """Side-by-side panels; ``panels`` is a list of (title, series)."""
    w, h, margin = 360, 260, 70
    width = margin + len(panels) * (w + margin)
    height = h + 2 * margin
    body = []
    for k, (title, series) in enumerate(panels):
        body += panel(title, series, margin + k * (w + margin), margin - 20, w, h,
                      log_y=log_y, ylabel=ylabel)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n")
