"""Minimal self-contained SVG renderers for control charts and beta curves.

Hand-rolled rather than delegated to a plotting library so the output is
deterministic byte-for-byte, style is inline, and nothing is scripted.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

_WIDTH = 760
_HEIGHT = 460
_MARGIN_L = 64
_MARGIN_R = 150
_MARGIN_T = 44
_MARGIN_B = 52

_CURVE_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _tick_label(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return f"{value:g}"


class _Frame:
    """Maps data coordinates into the plot rectangle and draws the axes."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.px_lo = _MARGIN_L
        self.px_hi = _WIDTH - _MARGIN_R
        self.py_lo = _HEIGHT - _MARGIN_B
        self.py_hi = _MARGIN_T

    def x(self, v: float) -> float:
        f = (v - self.x_lo) / (self.x_hi - self.x_lo)
        return self.px_lo + f * (self.px_hi - self.px_lo)

    def y(self, v: float) -> float:
        f = (v - self.y_lo) / (self.y_hi - self.y_lo)
        return self.py_lo + f * (self.py_hi - self.py_lo)

    def axes(self, x_label: str, y_label: str, x_ticks: Sequence[float] | None = None) -> list[str]:
        parts = [
            f'<rect x="{self.px_lo}" y="{self.py_hi}" width="{self.px_hi - self.px_lo}" '
            f'height="{self.py_lo - self.py_hi}" style="fill:none;stroke:#333;stroke-width:1"/>'
        ]
        for t in x_ticks if x_ticks is not None else _nice_ticks(self.x_lo, self.x_hi):
            px = self.x(t)
            parts.append(
                f'<line x1="{_fmt(px)}" y1="{self.py_lo}" x2="{_fmt(px)}" y2="{self.py_lo + 5}" '
                'style="stroke:#333;stroke-width:1"/>'
            )
            parts.append(
                f'<text x="{_fmt(px)}" y="{self.py_lo + 18}" style="font-family:sans-serif;'
                f'font-size:11px;text-anchor:middle;fill:#333">{_tick_label(t)}</text>'
            )
        for t in _nice_ticks(self.y_lo, self.y_hi):
            py = self.y(t)
            parts.append(
                f'<line x1="{self.px_lo - 5}" y1="{_fmt(py)}" x2="{self.px_lo}" y2="{_fmt(py)}" '
                'style="stroke:#333;stroke-width:1"/>'
            )
            parts.append(
                f'<text x="{self.px_lo - 8}" y="{_fmt(py + 4)}" style="font-family:sans-serif;'
                f'font-size:11px;text-anchor:end;fill:#333">{_tick_label(t)}</text>'
            )
        parts.append(
            f'<text x="{(self.px_lo + self.px_hi) / 2}" y="{_HEIGHT - 12}" '
            f'style="font-family:sans-serif;font-size:13px;text-anchor:middle;fill:#333">'
            f"{escape(x_label)}</text>"
        )
        parts.append(
            f'<text x="18" y="{(self.py_lo + self.py_hi) / 2}" '
            f'style="font-family:sans-serif;font-size:13px;text-anchor:middle;fill:#333" '
            f'transform="rotate(-90 18 {(self.py_lo + self.py_hi) / 2})">{escape(y_label)}</text>'
        )
        return parts


def _document(title: str, body: list[str]) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" style="fill:#ffffff"/>',
        f'<text x="{_WIDTH / 2}" y="24" style="font-family:sans-serif;font-size:15px;'
        f'text-anchor:middle;fill:#111">{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _limit_line(frame: _Frame, value: float, label: str, color: str) -> list[str]:
    py = frame.y(value)
    return [
        f'<line x1="{frame.px_lo}" y1="{_fmt(py)}" x2="{frame.px_hi}" y2="{_fmt(py)}" '
        f'style="stroke:{color};stroke-width:1.2;stroke-dasharray:6 3"/>',
        f'<text x="{frame.px_hi + 6}" y="{_fmt(py + 4)}" style="font-family:sans-serif;'
        f'font-size:11px;fill:{color}">{escape(label)}</text>',
    ]


def render_control_chart(points, limits, title: str) -> str:
    """T2 chart: one marker per sample, dashed UCL lines, signals in red."""
    ids = [p.sample_id for p in points]
    t2 = [p.t2 for p in points]
    y_hi = max(t2 + [limits.ucl_f, limits.ucl_quantile]) * 1.08
    x_lo = min(ids) - 0.5
    x_hi = max(ids) + 0.5
    frame = _Frame(x_lo, x_hi, 0.0, y_hi)
    body = frame.axes("sample", "T2", x_ticks=[float(i) for i in ids])
    body += _limit_line(frame, limits.ucl_f, f"UCL F = {limits.ucl_f:.4f}", "#1f77b4")
    body += _limit_line(
        frame, limits.ucl_quantile, f"UCL quantile = {limits.ucl_quantile:.4f}", "#9467bd"
    )
    body += _limit_line(frame, 0.0, "LCL = 0", "#777777")
    path = " ".join(
        f"{'M' if i == 0 else 'L'} {_fmt(frame.x(s))} {_fmt(frame.y(v))}"
        for i, (s, v) in enumerate(zip(ids, t2))
    )
    body.append(f'<path d="{path}" style="fill:none;stroke:#555;stroke-width:1"/>')
    for p in points:
        signal = p.signal_fisher or p.signal_quantile
        color = "#d62728" if signal else "#1f77b4"
        radius = 4.5 if signal else 3.0
        body.append(
            f'<circle cx="{_fmt(frame.x(p.sample_id))}" cy="{_fmt(frame.y(p.t2))}" '
            f'r="{radius}" style="fill:{color};stroke:#333;stroke-width:0.6"/>'
        )
    return _document(title, body)


def render_beta_curves(shifts, curves: dict[str, Sequence[float]], title: str) -> str:
    """Second-type-error curves: beta against shift size, one polyline per scheme."""
    xs = [float(s) for s in shifts]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.01, x_hi + 0.01
    frame = _Frame(x_lo, x_hi, 0.0, 1.0)
    body = frame.axes("shift", "beta")
    for idx, (label, values) in enumerate(curves.items()):
        color = _CURVE_COLORS[idx % len(_CURVE_COLORS)]
        pts = " ".join(f"{_fmt(frame.x(s))},{_fmt(frame.y(v))}" for s, v in zip(xs, values))
        body.append(
            f'<polyline points="{pts}" style="fill:none;stroke:{color};stroke-width:1.6"/>'
        )
        for s, v in zip(xs, values):
            body.append(
                f'<circle cx="{_fmt(frame.x(s))}" cy="{_fmt(frame.y(v))}" r="2.2" '
                f'style="fill:{color}"/>'
            )
        ly = _MARGIN_T + 16 + 18 * idx
        body.append(
            f'<line x1="{frame.px_hi + 8}" y1="{ly - 4}" x2="{frame.px_hi + 28}" y2="{ly - 4}" '
            f'style="stroke:{color};stroke-width:1.6"/>'
        )
        body.append(
            f'<text x="{frame.px_hi + 32}" y="{ly}" style="font-family:sans-serif;'
            f'font-size:11px;fill:#333">{escape(label)}</text>'
        )
    return _document(title, body)
