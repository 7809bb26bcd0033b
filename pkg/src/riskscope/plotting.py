"""Deterministic density plot artifacts: CSV samples and hand-emitted SVG.

Both emitters are pure functions of their input bytes-for-bytes, so golden
file comparisons are stable.  Only continuous carriers can be drawn.
"""

from __future__ import annotations

import numpy as np

from .distributions import (
    Distribution,
    PiecewiseLinearDensity,
    TailSpec,
    density_at,
    require_valid,
    to_loss,
)
from .jsonio import format_float
from .measures import es, max_loss, var

_INTERIOR_POINTS = 256

_WIDTH = 800
_HEIGHT = 400
_MARGIN_LEFT = 60.0
_MARGIN_RIGHT = 20.0
_MARGIN_TOP = 20.0
_MARGIN_BOTTOM = 40.0


def _continuous(dist: Distribution):
    d = to_loss(require_valid(dist))
    if not isinstance(d, (PiecewiseLinearDensity, TailSpec)):
        raise ValueError("plotting needs a continuous density (polyline or tail)")
    return d


def _sample_grid(d) -> np.ndarray:
    xs = d.xs
    dense = np.linspace(xs[0], xs[-1], _INTERIOR_POINTS + 2)
    return np.unique(np.concatenate([xs, dense]))


def density_csv(dist: Distribution) -> str:
    """(x, density) rows at the knots plus 256 interior points.

    Added points are collinear with the polyline, so a trapezoid sum over
    the emitted rows reproduces the original mass exactly.
    """
    d = _continuous(dist)
    grid = _sample_grid(d)
    vals = density_at(d, grid)
    lines = ["x,f"]
    for x, f in zip(grid, vals):
        lines.append(f"{format_float(float(x))},{format_float(float(f))}")
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _label(v: float) -> str:
    return format(v, ".12g")


def density_svg(dist: Distribution, alpha: float | None = None) -> str:
    """800x400 SVG: the density polyline with axis ticks at the quantile,
    tail average, and worst loss.  A tail supplies its own alpha; a full
    density defaults to 0.95."""
    d = _continuous(dist)
    if isinstance(d, TailSpec):
        level = d.alpha if alpha is None else float(alpha)
    else:
        level = 0.95 if alpha is None else float(alpha)
    marks = [
        ("var", var(d, level)),
        ("es", es(d, level)),
        ("ml", max_loss(d)),
    ]
    grid = _sample_grid(d)
    vals = density_at(d, grid)
    x_lo, x_hi = float(grid[0]), float(grid[-1])
    f_hi = float(np.max(vals))
    if f_hi <= 0.0:
        f_hi = 1.0
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(f: float) -> float:
        return _MARGIN_TOP + (1.0 - f / (f_hi * 1.05)) * plot_h

    path = " ".join(
        f"{'M' if i == 0 else 'L'} {_fmt(px(float(x)))} {_fmt(py(float(f)))}"
        for i, (x, f) in enumerate(zip(grid, vals))
    )
    base_y = _fmt(py(0.0))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_fmt(_MARGIN_LEFT)}" y1="{base_y}" '
        f'x2="{_fmt(_WIDTH - _MARGIN_RIGHT)}" y2="{base_y}" '
        'stroke="black" stroke-width="1"/>',
        f'<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>',
    ]
    for name, value in marks:
        x = _fmt(px(min(max(value, x_lo), x_hi)))
        parts.append(
            f'<line x1="{x}" y1="{_fmt(_MARGIN_TOP)}" x2="{x}" y2="{base_y}" '
            'stroke="gray" stroke-width="1" stroke-dasharray="4 3"/>'
        )
        parts.append(
            f'<text x="{x}" y="{_fmt(_HEIGHT - _MARGIN_BOTTOM + 16.0)}" '
            f'font-size="12" text-anchor="middle">{name}={_label(value)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
