"""Self-contained SVG charts: scatter with least-squares fit lines, and signal
overlays.  No rendering dependency; output is plain XML with one <g> element
per plotted series so reports can be checked structurally.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")

_WIDTH = 640
_HEIGHT = 400
_MARGIN_L = 62
_MARGIN_R = 16
_MARGIN_T = 36
_MARGIN_B = 46


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Axes:
    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        def padded(lo, hi):
            if hi - lo <= 0:
                pad = abs(hi) * 0.05 + 1e-6
            else:
                pad = (hi - lo) * 0.05
            return lo - pad, hi + pad

        self.x_lo, self.x_hi = padded(float(xs.min()), float(xs.max()))
        self.y_lo, self.y_hi = padded(float(ys.min()), float(ys.max()))

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return _MARGIN_L + frac * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return _HEIGHT - _MARGIN_B - frac * (_HEIGHT - _MARGIN_T - _MARGIN_B)


def _frame(ax: _Axes, title: str, xlabel: str, ylabel: str) -> list[str]:
    parts = []
    x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
    y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T
    parts.append(
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        'fill="none" stroke="#444" stroke-width="1"/>'
    )
    for i in range(5):
        fx = ax.x_lo + (ax.x_hi - ax.x_lo) * i / 4
        fy = ax.y_lo + (ax.y_hi - ax.y_lo) * i / 4
        px, py = ax.px(fx), ax.py(fy)
        parts.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 4}" stroke="#444"/>')
        parts.append(
            f'<text x="{_fmt(px)}" y="{y0 + 17}" font-size="11" text-anchor="middle" '
            f'fill="#333">{_fmt(fx)}</text>'
        )
        parts.append(f'<line x1="{x0 - 4}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" stroke="#444"/>')
        parts.append(
            f'<text x="{x0 - 7}" y="{_fmt(py + 3.5)}" font-size="11" text-anchor="end" '
            f'fill="#333">{_fmt(fy)}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="20" font-size="14" text-anchor="middle" '
        f'fill="#111">{escape(title)}</text>'
    )
    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="{_HEIGHT - 8}" font-size="12" text-anchor="middle" '
        f'fill="#111">{escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2}" font-size="12" text-anchor="middle" fill="#111" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2})">{escape(ylabel)}</text>'
    )
    return parts


def _legend(labels: list[str]) -> list[str]:
    parts = []
    for i, label in enumerate(labels):
        color = PALETTE[i % len(PALETTE)]
        y = _MARGIN_T + 14 + 16 * i
        x = _WIDTH - _MARGIN_R - 130
        parts.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{x + 15}" y="{y}" font-size="11" fill="#333">{escape(label)}</text>'
        )
    return parts


def _document(body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">\n'
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def svg_scatter(
    groups: dict[str, tuple], title: str, xlabel: str, ylabel: str, fit_line: bool = True
) -> str:
    """Scatter plot, one series per group, with per-group least-squares lines."""
    if not groups:
        raise ValueError("no groups to plot")
    all_x = np.concatenate([np.asarray(g[0], dtype=float) for g in groups.values()])
    all_y = np.concatenate([np.asarray(g[1], dtype=float) for g in groups.values()])
    ax = _Axes(all_x, all_y)
    body = _frame(ax, title, xlabel, ylabel)
    for i, (label, (xs, ys)) in enumerate(groups.items()):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        color = PALETTE[i % len(PALETTE)]
        pts = "".join(
            f'<circle cx="{_fmt(ax.px(x))}" cy="{_fmt(ax.py(y))}" r="3.2" '
            f'fill="{color}" fill-opacity="0.75"/>'
            for x, y in zip(xs, ys)
        )
        line = ""
        if fit_line and len(xs) >= 2 and float(np.ptp(xs)) > 0:
            slope, intercept = np.polyfit(xs, ys, 1)
            xa, xb = float(xs.min()), float(xs.max())
            line = (
                f'<line x1="{_fmt(ax.px(xa))}" y1="{_fmt(ax.py(slope * xa + intercept))}" '
                f'x2="{_fmt(ax.px(xb))}" y2="{_fmt(ax.py(slope * xb + intercept))}" '
                f'stroke="{color}" stroke-width="1.8"/>'
            )
        body.append(f'<g class="series" data-label="{escape(label)}">{pts}{line}</g>')
    body.extend(_legend(list(groups)))
    return _document(body)


def svg_lines(
    groups: dict[str, tuple], title: str, xlabel: str, ylabel: str
) -> str:
    """Line chart, one polyline series per group (signal overlays)."""
    if not groups:
        raise ValueError("no groups to plot")
    all_x = np.concatenate([np.asarray(g[0], dtype=float) for g in groups.values()])
    all_y = np.concatenate([np.asarray(g[1], dtype=float) for g in groups.values()])
    ax = _Axes(all_x, all_y)
    body = _frame(ax, title, xlabel, ylabel)
    for i, (label, (xs, ys)) in enumerate(groups.items()):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(xs, ys))
        body.append(
            f'<g class="series" data-label="{escape(label)}">'
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.4"/>'
            "</g>"
        )
    body.extend(_legend(list(groups)))
    return _document(body)
