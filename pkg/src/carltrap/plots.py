"""Static SVG emission for spectra, time series and phase-space scatters.

Hand-rolled SVG keeps plotting dependency-free and diffable.  Plots are
derived artifacts: they read already-computed arrays and never feed back
into any numeric output.  The config digest rides along in an XML comment
(a bare '#' line would not be valid XML).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def _finite_bounds(arr: np.ndarray) -> tuple[float, float]:
    vals = np.asarray(arr, dtype=float)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0 or not math.isfinite(span):
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, digest: str,
                 xlim: tuple[float, float], ylim: tuple[float, float]):
        self.xlim, self.ylim = xlim, ylim
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f"<!-- # config_digest={digest} -->",
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>',
        ]
        self._axes(xlabel, ylabel)

    def x_px(self, x: float) -> float:
        lo, hi = self.xlim
        return MARGIN_L + (x - lo) / (hi - lo) * (WIDTH - MARGIN_L - MARGIN_R)

    def y_px(self, y: float) -> float:
        lo, hi = self.ylim
        return HEIGHT - MARGIN_B - (y - lo) / (hi - lo) * (HEIGHT - MARGIN_T - MARGIN_B)

    def _axes(self, xlabel: str, ylabel: str) -> None:
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
        self.parts.append(
            f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
            'fill="none" stroke="black" stroke-width="1"/>')
        for t in _ticks(*self.xlim):
            px = self.x_px(t)
            self.parts.append(
                f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="black"/>')
            self.parts.append(
                f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{t:g}</text>')
        for t in _ticks(*self.ylim):
            py = self.y_px(t)
            self.parts.append(
                f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
            self.parts.append(
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{t:g}</text>')
        self.parts.append(
            f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{xlabel}</text>')
        self.parts.append(
            f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 16 {(y0 + y1) / 2})">{ylabel}</text>')

    def polyline(self, x: np.ndarray, y: np.ndarray, color: str) -> None:
        pts = []
        for xi, yi in zip(x, y):
            if math.isfinite(xi) and math.isfinite(yi):
                pts.append(f"{self.x_px(xi):.2f},{self.y_px(yi):.2f}")
        if pts:
            self.parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" '
                f'stroke="{color}" stroke-width="1.2"/>')

    def dots(self, x: np.ndarray, y: np.ndarray, color: str, radius: float) -> None:
        for xi, yi in zip(x, y):
            if math.isfinite(xi) and math.isfinite(yi):
                self.parts.append(
                    f'<circle cx="{self.x_px(xi):.2f}" cy="{self.y_px(yi):.2f}" '
                    f'r="{radius}" fill="{color}" fill-opacity="0.6"/>')

    def save(self, path: str | Path) -> None:
        self.parts.append("</svg>")
        Path(path).write_text("\n".join(self.parts) + "\n")


def svg_line_plot(path: str | Path, x: np.ndarray,
                  series: list[tuple[str, np.ndarray]], title: str,
                  xlabel: str, ylabel: str, digest: str) -> None:
    x = np.asarray(x, dtype=float)
    ylo = min(_finite_bounds(y)[0] for _, y in series)
    yhi = max(_finite_bounds(y)[1] for _, y in series)
    canvas = _Canvas(title, xlabel, ylabel, digest, _finite_bounds(x), (ylo, yhi))
    for i, (label, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        canvas.polyline(x, np.asarray(y, dtype=float), color)
        if len(series) > 1:
            canvas.parts.append(
                f'<text x="{WIDTH - MARGIN_R - 10}" y="{MARGIN_T + 16 + 14 * i}" '
                f'text-anchor="end" font-family="sans-serif" font-size="11" '
                f'fill="{color}">{label}</text>')
    canvas.save(path)


def svg_scatter_plot(path: str | Path, x: np.ndarray, y: np.ndarray, title: str,
                     xlabel: str, ylabel: str, digest: str,
                     radius: float = 1.4) -> None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    canvas = _Canvas(title, xlabel, ylabel, digest, _finite_bounds(x), _finite_bounds(y))
    canvas.dots(x, y, PALETTE[0], radius)
    canvas.save(path)
