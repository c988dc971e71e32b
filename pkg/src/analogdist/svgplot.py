"""Minimal SVG line plots rendered directly from CSV text.

Plots are a pure function of the CSV content and the styling arguments:
same input, same bytes out. That keeps figure artifacts reproducible and
diffable without pulling in a plotting dependency. Only line plots are
provided; histograms are drawn as precomputed bin profiles.
"""

from __future__ import annotations

import csv
import io
import math
from xml.sax.saxutils import escape

__all__ = ["line_plot", "read_csv_columns"]

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
    "#bcbd22",
    "#e377c2",
)

_MARGIN_LEFT = 68.0
_MARGIN_RIGHT = 16.0
_MARGIN_TOP = 34.0
_MARGIN_BOTTOM = 52.0


def read_csv_columns(csv_text: str) -> dict[str, list[str]]:
    """Parse CSV text into {column: list of raw cells}, skipping '#' comment lines."""
    lines = [ln for ln in csv_text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("no CSV rows to plot")
    reader = csv.DictReader(io.StringIO("\n".join(lines)))
    columns: dict[str, list[str]] = {name: [] for name in reader.fieldnames or ()}
    if not columns:
        raise ValueError("CSV has no header row")
    for row in reader:
        for name in columns:
            columns[name].append(row.get(name) or "")
    return columns


def _to_float(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        return math.nan


def _nice_step(rough: float) -> float:
    """Round a step up to 1, 2, or 5 times a power of ten."""
    exponent = math.floor(math.log10(rough))
    base = rough / 10.0**exponent
    for nice in (1.0, 2.0, 5.0):
        if base <= nice + 1e-12:
            return nice * 10.0**exponent
    return 10.0 ** (exponent + 1)


def _linear_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not hi > lo:
        return [lo]
    step = _nice_step((hi - lo) / max(target, 1))
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    value = first
    while value <= hi + step * 1e-9:
        ticks.append(0.0 if abs(value) < step * 1e-9 else value)
        value += step
    return ticks


def _fmt_tick(value: float) -> str:
    text = f"{value:.6g}"
    return "0" if text in ("-0", "-0.0") else text


def _collect_series(columns, x, y_cols, group):
    if group is not None and len(y_cols) > 1:
        raise ValueError("use either a group column or several y columns, not both")
    for name in (x, *y_cols) + (() if group is None else (group,)):
        if name not in columns:
            raise ValueError(f"column {name!r} not in CSV header")
    series: dict[str, list[tuple[float, float]]] = {}
    n = len(columns[x])
    for i in range(n):
        xv = _to_float(columns[x][i])
        if not math.isfinite(xv):
            continue
        for y in y_cols:
            yv = _to_float(columns[y][i])
            if not math.isfinite(yv):
                continue
            label = columns[group][i] if group is not None else y
            series.setdefault(label, []).append((xv, yv))
    series = {k: v for k, v in series.items() if v}
    if not series:
        raise ValueError("no finite data points to plot")
    return series


def line_plot(
    csv_text: str,
    x: str,
    y: str | tuple[str, ...],
    *,
    group: str | None = None,
    dashed: tuple[str, ...] = (),
    title: str = "",
    x_label: str | None = None,
    y_label: str | None = None,
    width: int = 720,
    height: int = 440,
    log_x: bool = False,
) -> str:
    """Render one SVG line plot from CSV text.

    x and y name the coordinate columns; y may be a tuple, in which case
    each column becomes its own line. Alternatively group names a column
    whose distinct values become separate lines (legend order follows first
    appearance). Series listed in `dashed` are stroked with a dash pattern,
    which is how theory overlays are distinguished from empirical curves.
    Cells that do not parse as finite floats are dropped point-wise, so a
    blank "theory" cell simply leaves a gap in that series.
    """
    y_cols = (y,) if isinstance(y, str) else tuple(y)
    columns = read_csv_columns(csv_text)
    series = _collect_series(columns, x, y_cols, group)
    if log_x:
        series = {
            label: [(math.log10(px), py) for px, py in pts if px > 0.0]
            for label, pts in series.items()
        }
        series = {k: v for k, v in series.items() if v}
        if not series:
            raise ValueError("log_x requires positive x values")

    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def px(v: float) -> float:
        return _MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return _MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_MARGIN_LEFT:.2f}" y="{_MARGIN_TOP:.2f}" width="{plot_w:.2f}" '
        f'height="{plot_h:.2f}" fill="none" stroke="#333333"/>',
    ]

    if log_x:
        decades = range(math.ceil(x_lo - 1e-9), math.floor(x_hi + 1e-9) + 1)
        x_ticks = [(float(d), f"1e{d}") for d in decades]
        if len(x_ticks) < 2:
            x_ticks = [(v, _fmt_tick(10.0**v)) for v in _linear_ticks(x_lo, x_hi)]
    else:
        x_ticks = [(v, _fmt_tick(v)) for v in _linear_ticks(x_lo, x_hi)]
    for value, text in x_ticks:
        gx = px(value)
        base = _MARGIN_TOP + plot_h
        out.append(
            f'<line x1="{gx:.2f}" y1="{base:.2f}" x2="{gx:.2f}" y2="{base + 5:.2f}" stroke="#333333"/>'
        )
        out.append(
            f'<text x="{gx:.2f}" y="{base + 18:.2f}" text-anchor="middle">{escape(text)}</text>'
        )
    for value in _linear_ticks(y_lo, y_hi):
        gy = py(value)
        out.append(
            f'<line x1="{_MARGIN_LEFT - 5:.2f}" y1="{gy:.2f}" x2="{_MARGIN_LEFT:.2f}" y2="{gy:.2f}" stroke="#333333"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 8:.2f}" y="{gy + 4:.2f}" text-anchor="end">'
            f"{escape(_fmt_tick(value))}</text>"
        )

    if title:
        out.append(
            f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">'
            f"{escape(title)}</text>"
        )
    x_text = x_label if x_label is not None else x
    y_text = y_label if y_label is not None else ", ".join(y_cols)
    out.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.2f}" y="{height - 12:.2f}" '
        f'text-anchor="middle">{escape(x_text)}</text>'
    )
    out.append(
        f'<text x="16" y="{_MARGIN_TOP + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MARGIN_TOP + plot_h / 2:.2f})">{escape(y_text)}</text>'
    )

    for i, (label, points) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6,4"' if label in dashed else ""
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in points)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'
        )

    legend_x = _MARGIN_LEFT + plot_w - 150.0
    legend_y = _MARGIN_TOP + 10.0
    for i, label in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6,4"' if label in dashed else ""
        gy = legend_y + 16.0 * i
        out.append(
            f'<line x1="{legend_x:.2f}" y1="{gy:.2f}" x2="{legend_x + 22:.2f}" y2="{gy:.2f}" '
            f'stroke="{color}" stroke-width="1.5"{dash}/>'
        )
        out.append(f'<text x="{legend_x + 28:.2f}" y="{gy + 4:.2f}">{escape(label)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
