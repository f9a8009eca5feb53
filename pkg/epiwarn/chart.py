# -----------------------------------------------------------------------------
# Copyright (c) 2024 The epiwarn developers.
#
# This file is part of epiwarn.
#
# epiwarn is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software
# Foundation, either version 3 of the License, or (at your option) any later
# version.
#
# epiwarn is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR
# A PARTICULAR PURPOSE. See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# epiwarn. If not, see <https://www.gnu.org/licenses/>.
# -----------------------------------------------------------------------------

"""
Static SVG line chart of baseline and counterfactual infected counts.

The chart holds two polylines, a dotted vertical rule at the
intervention day, axes with tick labels and a legend. Output depends
only on its inputs, so re-rendering gives identical bytes.
"""

import logging
from typing import List, Optional, Sequence

logger = logging.getLogger(__name__)

BASELINE_COLOR = '#1f77b4'
COUNTERFACTUAL_COLOR = '#d62728'


class SVG:
    """Incremental SVG document builder."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: List[str] = [
            '<?xml version="1.0" encoding="UTF-8"?>\n',
            f'<svg version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" '
            f'xmlns="http://www.w3.org/2000/svg">\n',
            f'<rect x="0" y="0" width="{width}" height="{height}" '
            f'fill="white"/>\n']

    def line(self, x1: float, y1: float, x2: float, y2: float,
             stroke: str = 'black', extra: str = '') -> None:
        self.parts.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" '
            f'y2="{y2:.1f}" stroke="{stroke}" {extra}/>\n')

    def polyline(self, points: Sequence[tuple], stroke: str,
                 extra: str = '') -> None:
        coords = ' '.join(f'{x:.1f},{y:.1f}' for x, y in points)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="2" {extra}/>\n')

    def text(self, x: float, y: float, string: str,
             extra: str = '') -> None:
        self.parts.append(
            f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" '
            f'font-size="12" {extra}>{string}</text>\n')

    def get_svg(self) -> str:
        return ''.join(self.parts) + '</svg>\n'


def nice_step(span: float, ticks: int = 5) -> float:
    """Tick spacing of 1, 2 or 5 times a power of ten."""
    if span <= 0:
        return 1.0
    raw = span / ticks
    power = 10 ** len(str(int(raw))) / 10 if raw >= 1 else 1.0
    for mult in (1, 2, 5, 10):
        if raw <= mult * power:
            return mult * power
    return 10 * power


def counterfactual_chart(baseline: Sequence[float],
                         counterfactual: Sequence[float],
                         intervention_day: Optional[int] = None,
                         title: str = '', width: int = 640,
                         height: int = 400) -> str:
    """Render infected counts of two runs against the day index.

    Arguments:
        baseline: Baseline infected count per day.
        counterfactual: Counterfactual infected count per day.
        intervention_day: Day of the dotted vertical rule.
        title: Chart title.
        width: Width in pixels.
        height: Height in pixels.

    Returns:
        SVG document.
    """
    left, right, top, bottom = 60, 20, 40, 50
    days = max(len(baseline), len(counterfactual), 2) - 1
    peak = max(list(baseline) + list(counterfactual) + [1])
    step = nice_step(peak)
    y_max = step * -(-peak // step)
    pw, ph = width - left - right, height - top - bottom

    def px(day):
        return left + pw * day / days

    def py(value):
        return top + ph * (1 - value / y_max)

    svg = SVG(width, height)
    if title:
        svg.text(width / 2, 22, title, 'text-anchor="middle" '
                                       'font-weight="bold"')
    svg.line(left, top + ph, left + pw, top + ph)
    svg.line(left, top, left, top + ph)
    x_step = int(nice_step(days))
    for d in range(0, days + 1, max(x_step, 1)):
        svg.line(px(d), top + ph, px(d), top + ph + 5)
        svg.text(px(d), top + ph + 18, str(d), 'text-anchor="middle"')
    v = 0.0
    while v <= y_max:
        svg.line(left - 5, py(v), left, py(v))
        svg.text(left - 8, py(v) + 4, f'{v:g}', 'text-anchor="end"')
        v += step
    svg.text(left + pw / 2, height - 10, 'day', 'text-anchor="middle"')
    svg.text(16, top + ph / 2, 'infected',
             f'text-anchor="middle" transform="rotate(-90 16 '
             f'{top + ph / 2:.1f})"')

    if intervention_day is not None:
        svg.line(px(intervention_day), top, px(intervention_day), top + ph,
                 'gray', 'stroke-dasharray="2,4"')
    for series, color in ((baseline, BASELINE_COLOR),
                          (counterfactual, COUNTERFACTUAL_COLOR)):
        svg.polyline([(px(d), py(v)) for d, v in enumerate(series)], color)

    for i, (name, color) in enumerate((('baseline', BASELINE_COLOR),
                                       ('quarantine', COUNTERFACTUAL_COLOR))):
        y = top + 12 + 16 * i
        svg.line(left + pw - 110, y - 4, left + pw - 90, y - 4, color,
                 'stroke-width="2"')
        svg.text(left + pw - 84, y, name)
    return svg.get_svg()
