# Minimal self-contained SVG line plots: polylines, axes, linear or log10
# scales.  Output is deterministic (no timestamps, fixed float formatting);
# the CSV next to it is the authoritative artifact.

from __future__ import annotations

import math

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 160, 40, 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f")


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _axis_range(values, log: bool) -> tuple[float, float]:
    finite = [v for v in values if v is not None and math.isfinite(v)
              and (not log or v > 0)]
    if not finite:
        return (1.0, 10.0) if log else (0.0, 1.0)
    lo, hi = min(finite), max(finite)
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        decades = range(math.ceil(lo), math.floor(hi) + 1)
        ticks = [float(k) for k in decades]
        if ticks:
            return ticks
    return [lo + i * (hi - lo) / 4.0 for i in range(5)]


class LinePlot:
    """Collects labeled series and renders one SVG file."""

    def __init__(self, title: str, xlabel: str, ylabel: str,
                 logx: bool = False, logy: bool = False):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.logx = logx
        self.logy = logy
        self.series: list[tuple[str, list[float], list[float]]] = []

    def add_series(self, label: str, xs, ys) -> None:
        self.series.append((label, list(xs), list(ys)))

    def _project(self, value: float, lo: float, hi: float, log: bool,
                 pixel_lo: float, pixel_hi: float) -> float | None:
        if value is None or not math.isfinite(value) or (log and value <= 0):
            return None
        coord = math.log10(value) if log else value
        frac = (coord - lo) / (hi - lo)
        return pixel_lo + frac * (pixel_hi - pixel_lo)

    def render(self) -> str:
        xs_all = [x for _, xs, _ in self.series for x in xs]
        ys_all = [y for _, _, ys in self.series for y in ys]
        x_lo, x_hi = _axis_range(xs_all, self.logx)
        y_lo, y_hi = _axis_range(ys_all, self.logy)
        px_lo, px_hi = MARGIN_L, WIDTH - MARGIN_R
        py_lo, py_hi = HEIGHT - MARGIN_B, MARGIN_T

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{self.title}</text>',
        ]
        # axes
        parts.append(f'<line x1="{px_lo}" y1="{py_lo}" x2="{px_hi}" y2="{py_lo}" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<line x1="{px_lo}" y1="{py_lo}" x2="{px_lo}" y2="{py_hi}" '
                     'stroke="black" stroke-width="1"/>')
        for tick in _ticks(x_lo, x_hi, self.logx):
            frac = (tick - x_lo) / (x_hi - x_lo)
            px = px_lo + frac * (px_hi - px_lo)
            label = _fmt(10.0**tick) if self.logx else _fmt(tick)
            parts.append(f'<line x1="{_fmt(px)}" y1="{py_lo}" x2="{_fmt(px)}" '
                         f'y2="{py_lo + 5}" stroke="black"/>')
            parts.append(f'<text x="{_fmt(px)}" y="{py_lo + 18}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">{label}</text>')
        for tick in _ticks(y_lo, y_hi, self.logy):
            frac = (tick - y_lo) / (y_hi - y_lo)
            py = py_lo + frac * (py_hi - py_lo)
            label = _fmt(10.0**tick) if self.logy else _fmt(tick)
            parts.append(f'<line x1="{px_lo - 5}" y1="{_fmt(py)}" x2="{px_lo}" '
                         f'y2="{_fmt(py)}" stroke="black"/>')
            parts.append(f'<text x="{px_lo - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="11">{label}</text>')
        parts.append(f'<text x="{(px_lo + px_hi) / 2}" y="{HEIGHT - 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{self.xlabel}</text>')
        parts.append(f'<text x="20" y="{(py_lo + py_hi) / 2}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13" '
                     f'transform="rotate(-90 20 {(py_lo + py_hi) / 2})">{self.ylabel}</text>')
        # series
        for idx, (label, xs, ys) in enumerate(self.series):
            color = PALETTE[idx % len(PALETTE)]
            points = []
            for x, y in zip(xs, ys):
                px = self._project(x, x_lo, x_hi, self.logx, px_lo, px_hi)
                py = self._project(y, y_lo, y_hi, self.logy, py_lo, py_hi)
                if px is not None and py is not None:
                    points.append(f"{_fmt(px)},{_fmt(py)}")
            if points:
                parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                             f'points="{" ".join(points)}"/>')
                for pt in points:
                    px, py = pt.split(",")
                    parts.append(f'<circle cx="{px}" cy="{py}" r="2.5" fill="{color}"/>')
            ly = MARGIN_T + 16 * idx + 8
            lx = WIDTH - MARGIN_R + 12
            parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{lx + 24}" y="{ly + 4}" font-family="sans-serif" '
                         f'font-size="11">{label}</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
