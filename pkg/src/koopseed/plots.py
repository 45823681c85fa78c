"""Minimal deterministic SVG plots for experiment outputs.

CSV files are the contract; these plots are a convenience for eyeballing
error curves and eigenvalue spectra without extra tooling. The SVG is
written directly (no plotting dependency) with fixed formatting so repeated
runs produce identical bytes.
"""

import math

import numpy as np

WIDTH, HEIGHT = 640.0, 480.0
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70.0, 20.0, 36.0, 48.0
COLORS = {"proposed": "#c03020", "edmd": "#2050b0"}


def _fmt(v) -> str:
    return format(float(v), ".6g")


def _axis_map(lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0

    def to_px(v):
        return out_lo + (v - lo) / span * (out_hi - out_lo)

    return to_px


class _Svg:
    def __init__(self, title):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:g}" height="{HEIGHT:g}" '
            f'viewBox="0 0 {WIDTH:g} {HEIGHT:g}">',
            f'<rect width="{WIDTH:g}" height="{HEIGHT:g}" fill="white"/>',
            f'<text x="{WIDTH / 2:g}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>',
        ]

    def line(self, x1, y1, x2, y2, color="#444444", width=1.0, dash=None):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{_fmt(width)}"{dash_attr}/>'
        )

    def polyline(self, pts, color, width=1.6):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def circle(self, x, y, r, color, fill="none"):
        self.parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
            f'stroke="{color}" fill="{fill}"/>'
        )

    def cross(self, x, y, r, color):
        self.line(x - r, y - r, x + r, y + r, color=color, width=1.2)
        self.line(x - r, y + r, x + r, y - r, color=color, width=1.2)

    def text(self, x, y, s, size=11, anchor="middle", color="#222222"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size:g}" fill="{color}">{s}</text>'
        )

    def write(self, path):
        self.parts.append("</svg>")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(self.parts) + "\n")


def save_error_curves_svg(path, summary, title, x_label) -> None:
    """Log-scale mean-error curves per method from an ErrorSummary."""
    keys = summary.keys()
    methods = sorted({r.method for r in summary.rows})
    svg = _Svg(title)

    values = [summary.get(k, m).mean for k in keys for m in methods]
    positive = [v for v in values if v > 0 and math.isfinite(v)]
    lo = math.floor(math.log10(min(positive))) if positive else -1
    hi = math.ceil(math.log10(max(positive))) if positive else 1
    if hi <= lo:
        hi = lo + 1
    x_to = _axis_map(min(keys), max(keys), MARGIN_L, WIDTH - MARGIN_R)
    y_to = _axis_map(lo, hi, HEIGHT - MARGIN_B, MARGIN_T)

    svg.line(MARGIN_L, HEIGHT - MARGIN_B, WIDTH - MARGIN_R, HEIGHT - MARGIN_B)
    svg.line(MARGIN_L, HEIGHT - MARGIN_B, MARGIN_L, MARGIN_T)
    for d in range(lo, hi + 1):
        y = y_to(d)
        svg.line(MARGIN_L, y, WIDTH - MARGIN_R, y, color="#dddddd")
        svg.text(MARGIN_L - 8, y + 4, f"1e{d}", anchor="end")
    for k in keys:
        svg.text(x_to(k), HEIGHT - MARGIN_B + 16, str(k))
    svg.text(WIDTH / 2, HEIGHT - 10, x_label)

    for i, method in enumerate(methods):
        color = COLORS.get(method, "#208040")
        pts = []
        for k in keys:
            v = summary.get(k, method).mean
            if v > 0 and math.isfinite(v):
                pts.append((x_to(k), y_to(math.log10(v))))
        svg.polyline(pts, color)
        for x, y in pts:
            svg.circle(x, y, 2.5, color, fill=color)
        svg.text(WIDTH - MARGIN_R - 6, MARGIN_T + 16 + 16 * i, method, anchor="end", color=color)
    svg.write(path)


def save_spectrum_svg(path, spectra: dict, title) -> None:
    """Eigenvalues in the complex plane with the unit circle for reference."""
    svg = _Svg(title)
    radius = max(
        1.05,
        max(
            (float(np.abs(mu).max()) for mu in spectra.values() if len(mu)),
            default=1.05,
        ),
    )
    side = min(WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B)
    cx, cy = MARGIN_L + side / 2, MARGIN_T + side / 2
    scale = side / (2 * radius)

    svg.line(cx - side / 2, cy, cx + side / 2, cy, color="#cccccc")
    svg.line(cx, cy - side / 2, cx, cy + side / 2, color="#cccccc")
    svg.circle(cx, cy, scale, "#888888")
    svg.text(cx + scale + 4, cy - 4, "|mu|=1", anchor="start")

    for i, (method, mu) in enumerate(sorted(spectra.items())):
        color = COLORS.get(method, "#208040")
        for z in mu:
            x = cx + float(z.real) * scale
            y = cy - float(z.imag) * scale
            if method == "edmd":
                svg.circle(x, y, 3.0, color)
            else:
                svg.cross(x, y, 3.0, color)
        svg.text(WIDTH - MARGIN_R - 6, MARGIN_T + 16 + 16 * i, method, anchor="end", color=color)
    svg.write(path)
