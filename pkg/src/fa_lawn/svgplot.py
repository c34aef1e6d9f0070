"""Minimal SVG line chart for sweep tables (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

AXIS_LABELS = {
    "rate": "required rate (bit/s/Hz)",
    "beampattern_gain": "beampattern gain requirement (dBm)",
    "lqr_cost": "LQR cost ceiling J_max",
}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
MARKERS = ("circle", "square", "diamond")

W, H = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 20, 60


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def render(table, title: str | None = None) -> str:
    rows = [r for r in table.rows if math.isfinite(r.mean_dBm)]
    axis = table.rows[0].axis if table.rows else ""
    log_x = axis == "lqr_cost"
    fx = (lambda v: math.log2(v)) if log_x else float

    xs = [fx(r.value) for r in table.rows] or [0.0, 1.0]
    ys = [r.mean_dBm for r in rows] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = math.floor(min(ys)) - 1, math.ceil(max(ys)) + 1
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1

    def px(v):
        return LEFT + (fx(v) - x0) / (x1 - x0) * (W - LEFT - RIGHT)

    def py(v):
        return H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>']
    for v in sorted({r.value for r in table.rows}):
        x = px(v)
        out.append(f'<line x1="{x:.1f}" y1="{H - BOTTOM}" x2="{x:.1f}" y2="{H - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{H - BOTTOM + 18}" text-anchor="middle">{v:g}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.1f}" x2="{W - RIGHT}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    xlabel = AXIS_LABELS.get(axis, axis) + (" (log scale)" if log_x else "")
    out.append(f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 20}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(TOP + H - BOTTOM) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2})">mean transmit power (dBm)</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="{TOP}" text-anchor="middle">{escape(title)}</text>')

    archs = list(dict.fromkeys(r.architecture for r in table.rows))
    for i, arch in enumerate(archs):
        color = COLORS[i % len(COLORS)]
        pts = sorted((r.value, r.mean_dBm) for r in rows if r.architecture == arch)
        if pts:
            path = " ".join(f"{px(v):.1f},{py(m):.1f}" for v, m in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for v, m in pts:
                out.append(f'<circle cx="{px(v):.1f}" cy="{py(m):.1f}" r="3" fill="{color}"/>')
        ly = TOP + 14 + 16 * i
        out.append(f'<line x1="{W - RIGHT - 110}" y1="{ly - 4}" x2="{W - RIGHT - 90}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT - 85}" y="{ly}">{escape(arch)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(table, path, title: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(table, title))
