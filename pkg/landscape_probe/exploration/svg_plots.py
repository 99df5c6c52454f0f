"""Static SVG plots without a rendering dependency.

All functions return SVG documents as strings. Output contains no timestamps
or random ids, so identical inputs give byte-identical files.

The heatmap color ramp interpolates linearly between five fixed stops from
dark purple (low objective) to yellow (high objective); its luminance
increases monotonically.
"""
from __future__ import annotations

import math
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from landscape_probe.surface.surfaces import SurfaceGrid

BG = "#ffffff"
FG = "#222222"
GRID = "#dddddd"
SERIES_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
MARKER = "#ffffff"
CURVE = "#ff3366"
RAMP = [
    (0.0, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.5, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.0, (253, 231, 37)),
]
NAN_COLOR = "#999999"

Series = Tuple[Sequence[float], Sequence[float]]


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    return f"{value:.3g}"


def ramp_color(fraction: float) -> str:
    """Color of the heatmap ramp for ``fraction`` in [0, 1]."""
    if not math.isfinite(fraction):
        return NAN_COLOR
    fraction = min(1.0, max(0.0, fraction))
    for (lo, lo_rgb), (hi, hi_rgb) in zip(RAMP[:-1], RAMP[1:]):
        if fraction <= hi:
            weight = (fraction - lo) / (hi - lo)
            rgb = [round(a + weight * (b - a)) for a, b in zip(lo_rgb, hi_rgb)]
            return "#" + "".join(f"{c:02x}" for c in rgb)
    return "#" + "".join(f"{c:02x}" for c in RAMP[-1][1])


class _Frame:
    """Maps data coordinates to pixels inside the plot margins."""

    def __init__(
        self,
        x_range: Tuple[float, float],
        y_range: Tuple[float, float],
        width: int,
        height: int,
        log_y: bool = False,
        right_margin: int = 20,
    ):
        self.left, self.right, self.top, self.bottom = 64, right_margin, 36, 48
        self.width, self.height = width, height
        self.log_y = log_y
        self.x_lo, self.x_hi = _padded(*x_range)
        if log_y:
            y_lo, y_hi = math.log10(y_range[0]), math.log10(y_range[1])
            self.y_lo, self.y_hi = math.floor(y_lo), math.ceil(y_hi)
            if self.y_hi == self.y_lo:
                self.y_hi += 1
        else:
            self.y_lo, self.y_hi = _padded(*y_range)

    @property
    def plot_w(self) -> float:
        return self.width - self.left - self.right

    @property
    def plot_h(self) -> float:
        return self.height - self.top - self.bottom

    def px(self, x: float) -> float:
        return self.left + (x - self.x_lo) / (self.x_hi - self.x_lo) * self.plot_w

    def py(self, y: float) -> float:
        if self.log_y:
            y = math.log10(y)
        return self.top + (self.y_hi - y) / (self.y_hi - self.y_lo) * self.plot_h

    def axes(self, title: str, x_label: str, y_label: str) -> List[str]:
        parts = [
            f'<rect width="{self.width}" height="{self.height}" fill="{BG}"/>',
            f'<text x="{self.width / 2:.1f}" y="22" text-anchor="middle" fill="{FG}"'
            f' font-size="14">{_escape(title)}</text>',
        ]
        for x in _linear_ticks(self.x_lo, self.x_hi):
            parts.append(
                f'<line x1="{_fmt(self.px(x))}" y1="{self.top}" x2="{_fmt(self.px(x))}"'
                f' y2="{self.top + self.plot_h}" stroke="{GRID}"/>'
            )
            parts.append(
                f'<text class="xtick" x="{_fmt(self.px(x))}" y="{self.top + self.plot_h + 14}"'
                f' text-anchor="middle" fill="{FG}" font-size="10">{_tick_label(x)}</text>'
            )
        if self.log_y:
            y_ticks = [(10.0**k, f"1e{k}") for k in range(self.y_lo, self.y_hi + 1)]
        else:
            y_ticks = [(y, _tick_label(y)) for y in _linear_ticks(self.y_lo, self.y_hi)]
        for y, label in y_ticks:
            parts.append(
                f'<line x1="{self.left}" y1="{_fmt(self.py(y))}" x2="{self.left + self.plot_w}"'
                f' y2="{_fmt(self.py(y))}" stroke="{GRID}"/>'
            )
            parts.append(
                f'<text class="ytick" x="{self.left - 6}" y="{_fmt(self.py(y) + 3)}"'
                f' text-anchor="end" fill="{FG}" font-size="10">{label}</text>'
            )
        parts.append(
            f'<rect x="{self.left}" y="{self.top}" width="{_fmt(self.plot_w)}"'
            f' height="{_fmt(self.plot_h)}" fill="none" stroke="{FG}"/>'
        )
        parts.append(
            f'<text x="{_fmt(self.left + self.plot_w / 2)}" y="{self.height - 10}"'
            f' text-anchor="middle" fill="{FG}" font-size="12">{_escape(x_label)}</text>'
        )
        parts.append(
            f'<text x="14" y="{_fmt(self.top + self.plot_h / 2)}" text-anchor="middle"'
            f' fill="{FG}" font-size="12" transform="rotate(-90 14'
            f' {_fmt(self.top + self.plot_h / 2)})">{_escape(y_label)}</text>'
        )
        return parts


def _padded(lo: float, hi: float) -> Tuple[float, float]:
    # ranges within rounding noise of a single value get a visible width
    if hi - lo > 1e-9 * max(abs(lo), abs(hi), 1.0):
        return lo, hi
    center = 0.5 * (lo + hi)
    pad = abs(center) * 0.05 or 1.0
    return center - pad, center + pad


def _linear_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    raw = (hi - lo) / n
    if not raw > 0:
        return [lo]
    magnitude = 10.0 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 5, 10) if m * magnitude >= raw)
    first = math.ceil(lo / step) * step
    count = int(math.floor((hi - first) / step + 1e-9)) + 1
    ticks = []
    for k in range(min(max(count, 0), 4 * n)):
        value = first + k * step
        ticks.append(0.0 if abs(value) < 1e-12 * step else value)
    return ticks


def _svg(width: int, height: int, parts: List[str]) -> str:
    return "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"'
            f' viewBox="0 0 {width} {height}">',
            *parts,
            "</svg>",
        ]
    )


def _legend(frame: _Frame, names: List[str]) -> List[str]:
    parts = []
    for idx, name in enumerate(names):
        x = frame.left + 8
        y = frame.top + 14 + 14 * idx
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        parts.append(
            f'<line x1="{x}" y1="{y - 4}" x2="{x + 16}" y2="{y - 4}"'
            f' stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{x + 20}" y="{y}" fill="{FG}" font-size="10">{_escape(name)}</text>'
        )
    return parts


def _finite_series(
    series: Dict[str, Series], log_y: bool
) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    cleaned = {}
    for name, (xs, ys) in series.items():
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if log_y:
            keep &= ys > 0
        cleaned[name] = (xs[keep], ys[keep])
    return cleaned


def line_plot(
    series: Dict[str, Series],
    title: str = "",
    x_label: str = "alpha",
    y_label: str = "J",
    log_y: bool = False,
    width: int = 640,
    height: int = 400,
) -> str:
    """Line plot of one or more named series.

    Parameters
    ----------
    series : Dict[str, Series]
        name to ``(x, y)`` values, drawn in insertion order
    title : str
        plot title
    x_label : str
        x axis label
    y_label : str
        y axis label
    log_y : bool
        logarithmic y axis with ticks at powers of 10, non-positive values are skipped;
        falls back to a linear axis with a warning if no value is positive
    width : int
        width in pixels
    height : int
        height in pixels

    Returns
    -------
    str
        SVG document

    Raises
    ------
    ValueError
        if there is nothing to plot
    """
    cleaned = _finite_series(series, log_y)
    if log_y and not any(xs.size for xs, _ in cleaned.values()):
        cleaned = _finite_series(series, False)
        if any(xs.size for xs, _ in cleaned.values()):
            warnings.warn("No positive values for a logarithmic axis, using a linear one")
            log_y = False
    all_x = np.concatenate([xs for xs, _ in cleaned.values()]) if cleaned else np.zeros(0)
    all_y = np.concatenate([ys for _, ys in cleaned.values()]) if cleaned else np.zeros(0)
    if all_x.size == 0:
        raise ValueError("No finite values to plot")
    frame = _Frame(
        (float(all_x.min()), float(all_x.max())),
        (float(all_y.min()), float(all_y.max())),
        width,
        height,
        log_y=log_y,
    )
    parts = frame.axes(title, x_label, y_label)
    for idx, (name, (xs, ys)) in enumerate(cleaned.items()):
        points = " ".join(f"{_fmt(frame.px(x))},{_fmt(frame.py(y))}" for x, y in zip(xs, ys))
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        parts.append(
            f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5"'
            f' points="{points}"/>'
        )
    if len(cleaned) > 1:
        parts.extend(_legend(frame, list(cleaned)))
    return _svg(width, height, parts)


def scatter_plot(
    x: Sequence[float],
    y: Sequence[float],
    title: str = "",
    x_label: str = "alpha",
    y_label: str = "beta",
    note: Optional[str] = None,
    width: int = 640,
    height: int = 400,
) -> str:
    """Scatter plot connected in order, with an optional note below the title."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.size == 0:
        raise ValueError("No points to plot")
    frame = _Frame(
        (float(xs.min()), float(xs.max())), (float(ys.min()), float(ys.max())), width, height
    )
    parts = frame.axes(title, x_label, y_label)
    parts.append(
        '<polyline fill="none" stroke="{}" stroke-width="0.8" points="{}"/>'.format(
            GRID, " ".join(f"{_fmt(frame.px(a))},{_fmt(frame.py(b))}" for a, b in zip(xs, ys))
        )
    )
    for a, b in zip(xs, ys):
        parts.append(
            f'<circle class="point" cx="{_fmt(frame.px(a))}" cy="{_fmt(frame.py(b))}" r="2.5"'
            f' fill="{SERIES_COLORS[0]}"/>'
        )
    if note:
        parts.append(
            f'<text class="note" x="{frame.left + frame.plot_w}" y="{frame.top - 4}"'
            f' text-anchor="end" fill="{FG}" font-size="10">{_escape(note)}</text>'
        )
    return _svg(width, height, parts)


def heatmap(
    grid: SurfaceGrid, title: str = "", width: int = 640, height: int = 480
) -> str:
    """Heatmap of a surface with color legend, overlay markers and curves.

    Every overlay point is drawn as one ``circle`` of class ``marker``.
    """
    values = grid.values
    finite = values[np.isfinite(values)]
    v_lo = float(finite.min()) if finite.size else 0.0
    v_hi = float(finite.max()) if finite.size else 1.0
    span = v_hi - v_lo if v_hi > v_lo else 1.0
    frame = _Frame(
        (float(grid.x.min()), float(grid.x.max())),
        (float(grid.y.min()), float(grid.y.max())),
        width,
        height,
        right_margin=90,
    )
    parts = frame.axes(title, grid.x_label, grid.y_label)
    x_edges = _cell_edges(grid.x)
    y_edges = _cell_edges(grid.y)
    for i in range(len(grid.x)):
        x0, x1 = frame.px(x_edges[i]), frame.px(x_edges[i + 1])
        for j in range(len(grid.y)):
            y0, y1 = frame.py(y_edges[j + 1]), frame.py(y_edges[j])
            color = ramp_color((values[i, j] - v_lo) / span)
            parts.append(
                f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}"'
                f' height="{_fmt(y1 - y0)}" fill="{color}"/>'
            )
    for name, curve in sorted(grid.curves.items()):
        for segment in _split_at_nan(curve, frame):
            parts.append(
                f'<polyline class="curve" fill="none" stroke="{CURVE}" stroke-width="1.5"'
                f' points="{segment}"><title>{_escape(name)}</title></polyline>'
            )
    for a, b, _ in grid.overlay:
        parts.append(
            f'<circle class="marker" cx="{_fmt(frame.px(a))}" cy="{_fmt(frame.py(b))}" r="3"'
            f' fill="{MARKER}" stroke="{FG}" stroke-width="0.8"/>'
        )
    parts.extend(_color_legend(frame, v_lo, v_hi))
    return _svg(width, height, parts)


def _cell_edges(centers: np.ndarray) -> np.ndarray:
    if len(centers) == 1:
        return np.array([centers[0] - 0.5, centers[0] + 0.5])
    mids = (centers[:-1] + centers[1:]) / 2.0
    first = centers[0] - (mids[0] - centers[0])
    last = centers[-1] + (centers[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def _split_at_nan(curve: np.ndarray, frame: _Frame) -> List[str]:
    segments: List[str] = []
    current: List[str] = []
    for a, b in curve:
        visible = (
            np.isfinite(a)
            and np.isfinite(b)
            and frame.x_lo <= a <= frame.x_hi
            and frame.y_lo <= b <= frame.y_hi
        )
        if visible:
            current.append(f"{_fmt(frame.px(a))},{_fmt(frame.py(b))}")
        elif current:
            segments.append(" ".join(current))
            current = []
    if current:
        segments.append(" ".join(current))
    return [s for s in segments if " " in s]


def _color_legend(frame: _Frame, v_lo: float, v_hi: float, steps: int = 50) -> List[str]:
    x = frame.left + frame.plot_w + 16
    bar_h = frame.plot_h / steps
    parts = ['<g class="legend">']
    for k in range(steps):
        fraction = 1.0 - (k + 0.5) / steps
        parts.append(
            f'<rect x="{x}" y="{_fmt(frame.top + k * bar_h)}" width="14"'
            f' height="{_fmt(bar_h + 0.5)}" fill="{ramp_color(fraction)}"/>'
        )
    parts.append(
        f'<text x="{x + 18}" y="{frame.top + 8}" fill="{FG}"'
        f' font-size="10">{_tick_label(v_hi)}</text>'
    )
    parts.append(
        f'<text x="{x + 18}" y="{_fmt(frame.top + frame.plot_h)}" fill="{FG}"'
        f' font-size="10">{_tick_label(v_lo)}</text>'
    )
    parts.append("</g>")
    return parts


def panel(svgs: Sequence[str], columns: int = 2, width: int = 640, height: int = 400) -> str:
    """Arrange equally sized SVG documents in a grid, row by row."""
    if not svgs:
        raise ValueError("No plots to arrange")
    rows = math.ceil(len(svgs) / columns)
    parts = []
    for idx, svg in enumerate(svgs):
        x = (idx % columns) * width
        y = (idx // columns) * height
        inner = svg.replace('<svg xmlns="http://www.w3.org/2000/svg"', f'<svg x="{x}" y="{y}"', 1)
        parts.append(inner)
    return _svg(columns * width, rows * height, parts)
