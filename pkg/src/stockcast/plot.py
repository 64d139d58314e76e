"""Plot data and a dependency-free SVG line chart of actual versus predicted prices."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import InputError

WIDTH, HEIGHT = 900, 420
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 50}
COLORS = {"actual": "#1f77b4", "predicted": "#d62728"}


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def render_svg(dates, actual, predicted, title: str = "Actual and forecasted close") -> str:
    """Two polylines (one point per row) with date and price axes."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    n = len(dates)
    if n == 0 or len(actual) != n or len(predicted) != n:
        raise InputError("plot needs equal, non-zero numbers of dates, actual and predicted values")
    values = np.concatenate([actual, predicted])
    if not np.all(np.isfinite(values)):
        raise InputError("plot values must be finite")
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def sx(i):
        return x0 + (x1 - x0) * (i / (n - 1) if n > 1 else 0.5)

    def sy(v):
        return y0 - (y0 - y1) * (v - lo) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for v in _ticks(lo, hi):
        parts.append(f'<text x="{x0 - 6}" y="{sy(v) + 4:.2f}" text-anchor="end" font-size="11">{v:.2f}</text>')
    for i in sorted({0, n // 2, n - 1}):
        parts.append(
            f'<text x="{sx(i):.2f}" y="{y0 + 18}" text-anchor="middle" font-size="11">{escape(str(dates[i]))}</text>'
        )
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">Date</text>')
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">Close price</text>'
    )
    for name, series in (("actual", actual), ("predicted", predicted)):
        points = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(series))
        parts.append(
            f'<polyline class="{name}" fill="none" stroke="{COLORS[name]}" stroke-width="1.5" points="{points}"/>'
        )
    for k, name in enumerate(("actual", "predicted")):
        y = MARGIN["top"] + 14 * k
        parts.append(f'<line x1="{x1 - 110}" y1="{y}" x2="{x1 - 90}" y2="{y}" stroke="{COLORS[name]}" stroke-width="2"/>')
        parts.append(f'<text x="{x1 - 84}" y="{y + 4}" font-size="11">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
