"""Self-contained SVG line charts of a sweep metric against scale."""

from __future__ import annotations

import math

from .harness import SweepReport
from .wavelets import WaveletKind

__all__ = ["emit_svg_lines", "METRIC_LABELS"]

METRIC_LABELS = {"rmm": "RMM", "mate": "MATE (ms)", "fom": "FOM"}

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 72, 150, 36, 56

STYLE = {
    WaveletKind.BIOR13: ("#1f77b4", "square"),
    WaveletKind.DB10: ("#d62728", "circle"),
    WaveletKind.MEXICAN_HAT: ("#2ca02c", "asterisk"),
}


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _marker(shape: str, x: float, y: float, color: str) -> str:
    r = 4.5
    if shape == "square":
        return f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r:.2f}" height="{2 * r:.2f}" fill="none" stroke="{color}" stroke-width="1.5"/>'
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="none" stroke="{color}" stroke-width="1.5"/>'
    d = " ".join(
        f"M{x - r * math.cos(a):.2f},{y - r * math.sin(a):.2f} L{x + r * math.cos(a):.2f},{y + r * math.sin(a):.2f}"
        for a in (math.pi / 2, math.pi / 6, -math.pi / 6)
    )
    return f'<path d="{d}" stroke="{color}" stroke-width="1.5" fill="none"/>'


def emit_svg_lines(report: SweepReport, metric: str = "fom", title: str | None = None) -> str:
    """Render one metric versus scale, one polyline and marker set per wavelet.

    Axes auto-scale to the data with 5% margins. Series with a single point
    get a marker but no polyline.
    """
    if metric not in METRIC_LABELS:
        raise ValueError(f"metric must be one of {sorted(METRIC_LABELS)}, got {metric!r}")
    if not report.rows:
        raise ValueError("cannot plot an empty report")
    series = [(k, report.metric(metric, k)) for k in WaveletKind]
    series = [(k, pts) for k, pts in series if pts]
    xs = [p[0] for _, pts in series for p in pts] or [r.scale for r in report.rows]
    ys = [p[1] for _, pts in series for p in pts] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        pad = abs(y0) * 0.5 or 1.0
        y0, y1 = y0 - pad, y1 + pad
    mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    x0, x1, y0, y1 = x0 - mx, x1 + mx, y0 - my, y1 + my

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    px = lambda v: LEFT + (v - x0) / (x1 - x0) * pw
    py = lambda v: TOP + ph - (v - y0) / (y1 - y0) * ph

    label = METRIC_LABELS[metric]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title or label + " versus scale")}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{TOP + ph}" x2="{X:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{TOP + ph + 19}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{Y:.2f}" x2="{LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle">Scale</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 18 {TOP + ph / 2:.1f})">{_esc(label)}</text>'
    )

    for i, (kind, pts) in enumerate(series):
        color, shape = STYLE[kind]
        coords = [(px(x), py(y)) for x, y in pts]
        out.append(f'<g class="series" data-wavelet="{kind.value}">')
        if len(coords) > 1:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.extend(_marker(shape, x, y, color) for x, y in coords)
        out.append("</g>")
        ly = TOP + 14 + 20 * i
        lx = LEFT + pw + 16
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        out.append(_marker(shape, lx + 12, ly, color))
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{_esc(kind.value)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
