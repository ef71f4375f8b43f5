"""Minimal SVG line/scatter plots, so figure output needs no plotting library."""
from __future__ import annotations

from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def line_plot(path, x, series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
              width: int = 480, height: int = 320):
    """Write ``series`` (label -> y values) against shared ``x`` as an SVG file."""
    pad = 50
    ys = [v for vals in series.values() for v in vals if v is not None]
    x0, x1 = min(x), max(x)
    y0, y1 = min(ys + [0.0]), max(ys) * 1.1 if ys else 1.0
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]
    for xv in x:
        out.append(f'<text x="{px(xv):.1f}" y="{height - pad + 15}" font-size="10" '
                   f'text-anchor="middle">{xv}</text>')
    for frac in (0.0, 0.5, 1.0):
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{pad - 5}" y="{py(yv):.1f}" font-size="10" '
                   f'text-anchor="end">{yv:.3g}</text>')
    for n, (label, vals) in enumerate(series.items()):
        color = COLORS[n % len(COLORS)]
        pts = [(px(a), py(b)) for a, b in zip(x, vals) if b is not None]
        out.append('<polyline fill="none" stroke="{}" points="{}"/>'.format(
            color, " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)))
        out.extend(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="{color}"/>' for a, b in pts)
        out.append(f'<text x="{width - pad}" y="{pad + 14 * n}" font-size="11" fill="{color}" '
                   f'text-anchor="end">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
