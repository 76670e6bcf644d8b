"""Minimal self-contained SVG scatter/line renderer.

Enough for visual inspection of sections, orbit markers and scan curves
without pulling in a plotting framework: fixed viewport, linear axes with
ticks, circle/triangle/square markers and polylines.
"""

from __future__ import annotations

import os

WIDTH, HEIGHT = 640, 480
MARGIN = 56


def _ticks(lo, hi, n=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    step = span / (n - 1)
    return [lo + i * step for i in range(n)]


class SvgFigure:
    """Collects scatter groups and polylines, then writes one SVG file."""

    def __init__(self, x_lim, y_lim, x_label="", y_label="", title=""):
        self.x_lim = x_lim
        self.y_lim = y_lim
        self.x_label = x_label
        self.y_label = y_label
        self.title = title
        self._elems = []

    def _sx(self, x):
        lo, hi = self.x_lim
        return MARGIN + (x - lo) / (hi - lo) * (WIDTH - 2 * MARGIN)

    def _sy(self, y):
        lo, hi = self.y_lim
        return HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)

    def _inside(self, x, y):
        return (self.x_lim[0] <= x <= self.x_lim[1]
                and self.y_lim[0] <= y <= self.y_lim[1])

    def scatter(self, xs, ys, color="#1f3b73", size=1.2, marker="circle"):
        parts = []
        for x, y in zip(xs, ys):
            if not self._inside(x, y):
                continue
            sx, sy = self._sx(x), self._sy(y)
            if marker == "circle":
                parts.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="{size}" fill="{color}"/>')
            elif marker == "triangle":
                s = 3.0 * size
                parts.append(
                    f'<polygon points="{sx:.2f},{sy - s:.2f} {sx - s:.2f},{sy + s:.2f} '
                    f'{sx + s:.2f},{sy + s:.2f}" fill="{color}"/>')
            elif marker == "square":
                s = 2.2 * size
                parts.append(
                    f'<rect x="{sx - s:.2f}" y="{sy - s:.2f}" width="{2*s:.2f}" '
                    f'height="{2*s:.2f}" fill="{color}"/>')
            else:
                raise ValueError(f"unknown marker {marker!r}")
        self._elems.append("\n".join(parts))

    def line(self, xs, ys, color="#000000", width=1.2):
        pts = " ".join(
            f"{self._sx(x):.2f},{self._sy(y):.2f}" for x, y in zip(xs, ys)
            if self._inside(x, y))
        self._elems.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def _frame(self):
        x0, x1 = MARGIN, WIDTH - MARGIN
        y0, y1 = MARGIN, HEIGHT - MARGIN
        parts = [f'<rect x="{x0}" y="{y0}" width="{x1-x0}" height="{y1-y0}" '
                 'fill="none" stroke="#333" stroke-width="1"/>']
        for tx in _ticks(*self.x_lim):
            sx = self._sx(tx)
            parts.append(f'<line x1="{sx:.2f}" y1="{y1}" x2="{sx:.2f}" y2="{y1+5}" stroke="#333"/>')
            parts.append(f'<text x="{sx:.2f}" y="{y1+18}" font-size="11" '
                         f'text-anchor="middle">{tx:.3g}</text>')
        for ty in _ticks(*self.y_lim):
            sy = self._sy(ty)
            parts.append(f'<line x1="{x0-5}" y1="{sy:.2f}" x2="{x0}" y2="{sy:.2f}" stroke="#333"/>')
            parts.append(f'<text x="{x0-8}" y="{sy+4:.2f}" font-size="11" '
                         f'text-anchor="end">{ty:.3g}</text>')
        if self.x_label:
            parts.append(f'<text x="{WIDTH/2}" y="{HEIGHT-12}" font-size="13" '
                         f'text-anchor="middle">{self.x_label}</text>')
        if self.y_label:
            parts.append(f'<text x="16" y="{HEIGHT/2}" font-size="13" text-anchor="middle" '
                         f'transform="rotate(-90 16 {HEIGHT/2})">{self.y_label}</text>')
        if self.title:
            parts.append(f'<text x="{WIDTH/2}" y="{MARGIN-16}" font-size="14" '
                         f'text-anchor="middle">{self.title}</text>')
        return "\n".join(parts)

    def write(self, path) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        body = "\n".join(self._elems)
        with open(path, "w", newline="\n") as fh:
            fh.write(
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n<rect width="100%" height="100%" '
                f'fill="white"/>\n{self._frame()}\n{body}\n</svg>\n')
        return path
