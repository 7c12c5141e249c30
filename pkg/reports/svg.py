"""
Rank-citation figures as SVG 1.1 documents.

Output is plain string building with fixed-precision coordinates, so identical
inputs always produce identical bytes.
"""

import math
from html import escape

from analytics.baseline import BaselineFit
from analytics.hump import HumpRegion
from analytics.metrics import RankCitationCurve, h_index

from .exceptions import EmptyCurve

WIDTH = 720
HEIGHT = 440
MARGIN_LEFT = 70
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 55
TICKS = 5

CURVE_COLOUR = '#1f4e79'
BASELINE_COLOUR = '#c0504d'
HUMP_FILL = '#f5c242'
H_MARKER_COLOUR = '#555555'


class _Svg:
    def __init__(self, width, height):
        self.parts = [
            '<?xml version="1.0" standalone="no"?>\n'
            '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n'
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            'xmlns="http://www.w3.org/2000/svg">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n'
        ]

    def line(self, x1, y1, x2, y2, stroke, extra=''):
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="{stroke}" {extra}/>\n'
        )

    def rect(self, x, y, width, height, fill, extra=''):
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{width:.2f}" height="{height:.2f}" fill="{fill}" {extra}/>\n'
        )

    def circle(self, cx, cy, r, fill):
        self.parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="{fill}"/>\n')

    def polyline(self, points, stroke, extra=''):
        coords = ' '.join(f'{x:.2f},{y:.2f}' for x, y in points)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{stroke}" {extra}/>\n')

    def text(self, x, y, string, extra=''):
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" {extra}>{escape(str(string))}</text>\n')

    def render(self) -> bytes:
        return (''.join(self.parts) + '</svg>\n').encode('utf-8')


class _Axes:
    """Maps (rank, citations) onto the plot area"""

    def __init__(self, n, c_max, log_y, width, height):
        self.n = n
        self.log_y = log_y
        self.left, self.right = MARGIN_LEFT, width - MARGIN_RIGHT
        self.top, self.bottom = MARGIN_TOP, height - MARGIN_BOTTOM
        self.y_max = self._transform(max(c_max, 1.0))

    def _transform(self, c):
        return math.log10(1.0 + c) if self.log_y else float(c)

    def x(self, rank):
        if self.n == 1:
            return (self.left + self.right) / 2
        return self.left + (rank - 1) / (self.n - 1) * (self.right - self.left)

    def y(self, c):
        return self.bottom - self._transform(max(c, 0.0)) / self.y_max * (self.bottom - self.top)

    def y_ticks(self):
        if self.log_y:
            values = [0.0]
            decade = 1
            while math.log10(1.0 + decade) <= self.y_max:
                values.append(float(decade))
                decade *= 10
            return values
        step = _nice_step(self.y_max / TICKS)
        return [i * step for i in range(int(self.y_max // step) + 1)]

    def x_ticks(self):
        step = max(1, int(_nice_step(self.n / TICKS)))
        return [1] + [r for r in range(step, self.n + 1, step) if r != 1]


def _nice_step(raw):
    if raw <= 0:
        return 1.0
    magnitude = 10 ** math.floor(math.log10(raw))
    for factor in (1, 2, 5, 10):
        if raw <= factor * magnitude:
            return float(factor * magnitude)
    return float(10 * magnitude)


def _label(value):
    return str(int(value)) if float(value).is_integer() else f'{value:g}'


def render_curve_svg(curve: RankCitationCurve, fit: BaselineFit = None, hump: HumpRegion = None,
                     log_y=False, title=None, width=WIDTH, height=HEIGHT) -> bytes:
    """Citations against rank, with optional baseline line and shaded hump.

    The h-paper is marked with a vertical dashed line.
    """
    if curve is None or len(curve) == 0:
        raise EmptyCurve('Cannot draw an empty rank-citation curve')

    counts = curve.citations
    n = len(counts)
    c_max = float(counts.max())
    if fit is not None:
        c_max = max(c_max, float(fit.fitted_array.max()))
    axes = _Axes(n, c_max, log_y, width, height)
    svg = _Svg(width, height)

    if title:
        svg.text(width / 2, MARGIN_TOP / 2 + 5, title, 'text-anchor="middle" font-size="15" font-family="sans-serif"')

    if hump is not None:
        lo, hi = hump.rank_interval
        x_lo = axes.x(lo) - (axes.x(2) - axes.x(1)) / 2 if n > 1 else axes.left
        x_hi = axes.x(hi) + (axes.x(2) - axes.x(1)) / 2 if n > 1 else axes.right
        x_lo, x_hi = max(x_lo, axes.left), min(x_hi, axes.right)
        svg.rect(x_lo, axes.top, x_hi - x_lo, axes.bottom - axes.top, HUMP_FILL, 'fill-opacity="0.35" class="hump"')

    # axes and ticks
    svg.line(axes.left, axes.bottom, axes.right, axes.bottom, '#000000')
    svg.line(axes.left, axes.top, axes.left, axes.bottom, '#000000')
    for c in axes.y_ticks():
        y = axes.y(c)
        svg.line(axes.left - 4, y, axes.left, y, '#000000')
        svg.text(axes.left - 7, y + 4, _label(c), 'text-anchor="end" font-size="11" font-family="sans-serif"')
    for rank in axes.x_ticks():
        x = axes.x(rank)
        svg.line(x, axes.bottom, x, axes.bottom + 4, '#000000')
        svg.text(x, axes.bottom + 17, rank, 'text-anchor="middle" font-size="11" font-family="sans-serif"')
    svg.text((axes.left + axes.right) / 2, height - 12, 'Rank', 'text-anchor="middle" font-size="13" font-family="sans-serif"')
    svg.text(
        18, (axes.top + axes.bottom) / 2, 'Citations (log scale)' if log_y else 'Citations',
        f'text-anchor="middle" font-size="13" font-family="sans-serif" '
        f'transform="rotate(-90 18 {(axes.top + axes.bottom) / 2:.2f})"',
    )

    h = h_index(curve)
    if h > 0:
        x = axes.x(h)
        svg.line(x, axes.top, x, axes.bottom, H_MARKER_COLOUR, 'stroke-dasharray="4,3" class="h-marker"')
        svg.text(x + 4, axes.top + 12, f'h = {h}', 'font-size="11" font-family="sans-serif"')

    if fit is not None:
        svg.polyline(
            [(axes.x(rank), axes.y(c)) for rank, c in enumerate(fit.fitted_array, start=1)],
            BASELINE_COLOUR, 'stroke-width="1.5" class="baseline"',
        )

    if n > 1:
        svg.polyline([(axes.x(rank), axes.y(c)) for rank, c in enumerate(counts, start=1)], CURVE_COLOUR, 'stroke-width="1"')
    radius = 2.5 if n <= 200 else 1.2
    for rank, c in enumerate(counts, start=1):
        svg.circle(axes.x(rank), axes.y(c), radius, CURVE_COLOUR)

    return svg.render()
