"""Hand-written SVG plots of spectra against theta.

Convention: measure spectra dashed, set spectra solid; Assouad-type curves
black, lower-type curves grey.  Predictions are drawn as lines and estimates
as markers.  Coordinates are printed with six decimals so that two plots can
be compared by their path data.
"""

from __future__ import annotations

import math
from pathlib import Path

from ..generators.clouds import _atomic_write
from .pipeline import PlotInputError, _float, _read_csv

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 60, 170, 30, 50
STYLE = {
    "set_assouad": ("#000000", None),
    "set_lower": ("#888888", None),
    "measure_assouad": ("#000000", "6 4"),
    "measure_lower": ("#888888", "6 4"),
}
LABEL = {
    "set_assouad": "set, Assouad",
    "set_lower": "set, lower",
    "measure_assouad": "measure, Assouad",
    "measure_lower": "measure, lower",
}


def _c(v):
    return f"{v:.6f}"


def _series(path):
    """Column -> list of (theta, value) with missing values dropped."""
    header, rows = _read_csv(path)
    out = {}
    for col in header[1:]:
        if col not in STYLE:
            continue
        j = header.index(col)
        pts = [(_float(r[0]), _float(r[j])) for r in rows]
        pts = [(t, v) for t, v in pts if not (math.isnan(t) or math.isnan(v))]
        if pts:
            out[col] = pts
    return out


def _ticks(lo, hi):
    step = 0.1 if hi - lo <= 1.0 else 0.25 if hi - lo <= 2.5 else 0.5
    start = math.ceil(lo / step - 1e-9) * step
    n = int(math.floor((hi - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def render_svg(prediction=None, estimate=None, title="") -> str:
    lines = _series(prediction) if prediction else {}
    marks = _series(estimate) if estimate else {}
    if not lines and not marks:
        raise PlotInputError("no spectrum columns to plot")
    values = [v for s in list(lines.values()) + list(marks.values()) for _, v in s]
    lo = math.floor(min(values) * 10 - 1e-9) / 10 - 0.1
    hi = math.ceil(max(values) * 10 + 1e-9) / 10 + 0.1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def X(t):
        return LEFT + t * pw

    def Y(v):
        return TOP + (hi - v) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>']
    if title:
        out.append(f'<text x="{LEFT}" y="18">{_escape(title)}</text>')
    # axes and ticks
    out.append(f'<path d="M {_c(X(0))} {_c(Y(lo))} L {_c(X(1))} {_c(Y(lo))}" stroke="#000000" fill="none"/>')
    out.append(f'<path d="M {_c(X(0))} {_c(Y(lo))} L {_c(X(0))} {_c(Y(hi))}" stroke="#000000" fill="none"/>')
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<path d="M {_c(X(t))} {_c(Y(lo))} L {_c(X(t))} {_c(Y(lo) + 5)}" stroke="#000000"/>')
        out.append(f'<text x="{_c(X(t))}" y="{_c(Y(lo) + 18)}" text-anchor="middle">{t:g}</text>')
    for v in _ticks(lo, hi):
        out.append(f'<path d="M {_c(X(0) - 5)} {_c(Y(v))} L {_c(X(0))} {_c(Y(v))}" stroke="#000000"/>')
        out.append(f'<text x="{_c(X(0) - 8)}" y="{_c(Y(v) + 4)}" text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{_c(X(0.5))}" y="{HEIGHT - 12}" text-anchor="middle">theta</text>')

    for col in STYLE:
        color, dash = STYLE[col]
        if col in lines:
            pts = lines[col]
            d = " ".join(("M" if i == 0 else "L") + f" {_c(X(t))} {_c(Y(v))}" for i, (t, v) in enumerate(pts))
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<path class="{col}" d="{d}" stroke="{color}" stroke-width="2" fill="none"{extra}/>')
        if col in marks:
            fill = color if dash is None else "#ffffff"
            for t, v in marks[col]:
                out.append(f'<circle class="{col}-estimate" cx="{_c(X(t))}" cy="{_c(Y(v))}" r="3" '
                           f'stroke="{color}" fill="{fill}"/>')
    # legend
    y = TOP + 10
    for col in STYLE:
        if col not in lines and col not in marks:
            continue
        color, dash = STYLE[col]
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        x0 = WIDTH - RIGHT + 15
        out.append(f'<path d="M {x0} {y} L {x0 + 30} {y}" stroke="{color}" stroke-width="2"{extra}/>')
        out.append(f'<text x="{x0 + 36}" y="{y + 4}">{LABEL[col]}</text>')
        y += 18
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(path, prediction=None, estimate=None, title=""):
    prediction = prediction if prediction and Path(prediction).exists() else None
    estimate = estimate if estimate and Path(estimate).exists() else None
    if prediction is None and estimate is None:
        raise PlotInputError("no prediction or estimate file to plot")
    svg = render_svg(prediction, estimate, title)
    _atomic_write(path, svg.encode())
    return path
