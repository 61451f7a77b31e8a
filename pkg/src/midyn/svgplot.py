"""Minimal SVG chart rendering, no plotting dependency.

One panel = one 900x300 viewBox with axes, tick labels, and either
polyline series or bars. Output is a complete standalone SVG document.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH = 900
HEIGHT = 300
MARGIN_LEFT = 64
MARGIN_RIGHT = 16
MARGIN_TOP = 28
MARGIN_BOTTOM = 40

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _axis_range(lo: float, hi: float) -> tuple[float, float]:
    if not np.isfinite(lo) or not np.isfinite(hi):
        return 0.0, 1.0
    if hi <= lo:
        pad = abs(lo) if lo else 1.0
        return lo - 0.5 * pad, hi + 0.5 * pad
    return lo, hi


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:.4g}"


class _Panel:
    def __init__(self, title: str, x_label: str, y_label: str,
                 x_range, y_range):
        self.parts: list[str] = []
        self.x_lo, self.x_hi = _axis_range(*x_range)
        self.y_lo, self.y_hi = _axis_range(*y_range)
        self._frame(title, x_label, y_label)

    def x_px(self, x: float) -> float:
        span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        return MARGIN_LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * span

    def y_px(self, y: float) -> float:
        span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        return HEIGHT - MARGIN_BOTTOM - (y - self.y_lo) / (self.y_hi - self.y_lo) * span

    def _frame(self, title, x_label, y_label):
        p = self.parts
        p.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
        p.append(
            f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" '
            f'font-size="14" font-family="sans-serif">{escape(title)}</text>'
        )
        x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
        p.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        p.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for tx in _ticks(self.x_lo, self.x_hi):
            px = self.x_px(tx)
            p.append(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>')
            p.append(
                f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle" '
                f'font-size="11" font-family="sans-serif">{_fmt(tx)}</text>'
            )
        for ty in _ticks(self.y_lo, self.y_hi):
            py = self.y_px(ty)
            p.append(f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
            p.append(
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end" '
                f'font-size="11" font-family="sans-serif">{_fmt(ty)}</text>'
            )
        p.append(
            f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 6}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{escape(x_label)}</text>'
        )
        p.append(
            f'<text x="14" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif" transform="rotate(-90 14 {(y0 + y1) / 2})">'
            f"{escape(y_label)}</text>"
        )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n{body}\n</svg>\n'
        )


def line_chart(series, title: str, x_label: str, y_label: str) -> str:
    """series: list of (label, xs, ys) tuples drawn as polylines."""
    xs_all = np.concatenate([np.asarray(xs, dtype=float) for _, xs, _ in series])
    ys_all = np.concatenate([np.asarray(ys, dtype=float) for _, _, ys in series])
    panel = _Panel(title, x_label, y_label,
                   (xs_all.min(), xs_all.max()), (ys_all.min(), ys_all.max()))
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(
            f"{panel.x_px(float(x)):.2f},{panel.y_px(float(y)):.2f}"
            for x, y in zip(xs, ys)
        )
        panel.parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        if label:
            panel.parts.append(
                f'<text x="{WIDTH - MARGIN_RIGHT - 4}" y="{MARGIN_TOP + 14 + 14 * i}" '
                f'text-anchor="end" font-size="11" font-family="sans-serif" '
                f'fill="{color}">{escape(label)}</text>'
            )
    return panel.render()


def bar_chart(values, title: str, x_label: str, y_label: str) -> str:
    """Index-aligned bars; y axis always includes zero."""
    ys = np.asarray(values, dtype=float)
    n = ys.shape[0]
    panel = _Panel(title, x_label, y_label,
                   (0, max(n - 1, 1)), (min(0.0, ys.min()), max(ys.max(), 1e-9)))
    base = panel.y_px(0.0)
    slot = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / max(n, 1)
    bar_w = max(slot * 0.8, 0.5)
    for i, y in enumerate(ys):
        top = panel.y_px(float(y))
        y_rect = min(top, base)
        h = abs(base - top)
        x_rect = panel.x_px(i) - bar_w / 2
        panel.parts.append(
            f'<rect x="{x_rect:.2f}" y="{y_rect:.2f}" width="{bar_w:.2f}" '
            f'height="{h:.2f}" fill="{PALETTE[0]}"/>'
        )
    return panel.render()
