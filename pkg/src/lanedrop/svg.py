"""Small dependency-free SVG plots: time-series panels, a CTM density map and xy curves."""

from __future__ import annotations

from html import escape

import numpy as np

from .engine import ScenarioTrace

PALETTE = (  # 16 steps from free flow (light) to jam (dark)
    "#ffffcc", "#fff3b0", "#ffe793", "#fedb77", "#fec45d", "#fead4b", "#fd963f", "#fd7e36",
    "#f6642d", "#eb4a27", "#dc3022", "#ca1b20", "#b40d26", "#9b0628", "#7e0226", "#610020",
)


class _Panel:
    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        lo, hi = ylim
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        self.xlim, self.ylim = xlim, (lo, hi)

    def px(self, x):
        a, b = self.xlim
        return self.x0 + (np.asarray(x) - a) / (b - a) * self.w

    def py(self, y):
        a, b = self.ylim
        return self.y0 + self.h - (np.asarray(y) - a) / (b - a) * self.h

    def frame(self, title, xlabel=""):
        a, b = self.ylim
        out = [
            f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" fill="none" stroke="#444"/>',
            f'<text x="{self.x0}" y="{self.y0 - 6}" font-size="12">{escape(title)}</text>',
            f'<text x="{self.x0 - 4}" y="{self.y0 + 10}" font-size="9" text-anchor="end">{b:.4g}</text>',
            f'<text x="{self.x0 - 4}" y="{self.y0 + self.h}" font-size="9" text-anchor="end">{a:.4g}</text>',
            f'<text x="{self.x0}" y="{self.y0 + self.h + 12}" font-size="9">{self.xlim[0]:.4g}</text>',
            f'<text x="{self.x0 + self.w}" y="{self.y0 + self.h + 12}" font-size="9" '
            f'text-anchor="end">{self.xlim[1]:.4g}</text>',
        ]
        if xlabel:
            out.append(f'<text x="{self.x0 + self.w / 2}" y="{self.y0 + self.h + 12}" font-size="9" '
                       f'text-anchor="middle">{escape(xlabel)}</text>')
        return out

    def line(self, x, y, colour="#1f4e9c", dashed=False, max_points=1500):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if len(x) > max_points:
            idx = np.linspace(0, len(x) - 1, max_points).round().astype(int)
            x, y = x[idx], y[idx]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(x), self.py(y)))
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        return f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.2"{dash}/>'


def _document(width, height, body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n")


_PANELS = (("r", "arrivals r (veh/s)"), ("lambda", "queue lambda (veh)"), ("f", "in-flux f (veh/s)"),
           ("g", "out-flux g (veh/s)"), ("k_obs", "observed density k (veh/m)"), ("u", "speed limit u (m/s)"))


def timeseries_svg(trace: ScenarioTrace, baseline: ScenarioTrace | None = None) -> str:
    """Six stacked panels; the controlled run is solid, an optional baseline dashed."""
    width, ph, gap, left = 760, 110, 38, 70
    body = []
    t = trace.t
    for i, (col, title) in enumerate(_PANELS):
        series = [trace.column(col)] + ([baseline.column(col)] if baseline is not None else [])
        lo = min(float(np.min(s)) for s in series)
        hi = max(float(np.max(s)) for s in series)
        p = _Panel(left, 24 + i * (ph + gap), width - left - 20, ph, (t[0], t[-1]), (lo, hi))
        body += p.frame(title, "t (s)" if i == len(_PANELS) - 1 else "")
        body.append(p.line(t, series[0]))
        if baseline is not None:
            body.append(p.line(baseline.t, series[1], colour="#888", dashed=True))
    return _document(width, 24 + len(_PANELS) * (ph + gap), body)


def contour_svg(trace: ScenarioTrace, k_j: float | None = None, max_columns: int = 400) -> str:
    """Space-time density map of a CTM run, 16 colour steps over [0, k_j]."""
    if trace.rho is None:
        raise ValueError("contour_svg: trace has no cell densities")
    k_j = trace.config.fd.k_j if k_j is None else k_j
    rho = np.asarray(trace.rho)
    steps, n = rho.shape
    bins = min(max_columns, steps)
    edges = np.linspace(0, steps, bins + 1).round().astype(int)
    cols = np.array([rho[a:b].mean(axis=0) for a, b in zip(edges[:-1], edges[1:])])
    level = np.clip((cols / k_j * len(PALETTE)).astype(int), 0, len(PALETTE) - 1)
    left, top, w, h = 70, 30, 600, 300
    cw, ch = w / bins, h / n
    body = [f'<text x="{left}" y="20" font-size="12">cell density (veh/m), cell 1 at the top</text>']
    for j in range(bins):
        for i in range(n):
            body.append(f'<rect x="{left + j * cw:.2f}" y="{top + i * ch:.2f}" width="{cw + 0.05:.2f}" '
                        f'height="{ch + 0.05:.2f}" fill="{PALETTE[level[j, i]]}"/>')
    body.append(f'<text x="{left}" y="{top + h + 14}" font-size="9">t = {trace.t[0]:.4g} s</text>')
    body.append(f'<text x="{left + w}" y="{top + h + 14}" font-size="9" text-anchor="end">'
                f't = {trace.t[-1]:.4g} s</text>')
    for i, colour in enumerate(PALETTE):
        body.append(f'<rect x="{left + w + 20}" y="{top + h - (i + 1) * h / 16:.2f}" width="14" '
                    f'height="{h / 16:.2f}" fill="{colour}"/>')
    body.append(f'<text x="{left + w + 38}" y="{top + 9}" font-size="9">{k_j:.4g}</text>')
    body.append(f'<text x="{left + w + 38}" y="{top + h}" font-size="9">0</text>')
    return _document(left + w + 80, top + h + 30, body)


def curve_svg(x, y, title: str, xlabel: str, ylabel: str) -> str:
    left, w, h = 70, 520, 280
    p = _Panel(left, 30, w, h, (float(np.min(x)), float(np.max(x))), (float(np.min(y)), float(np.max(y))))
    body = p.frame(f"{title}: {ylabel}", xlabel) + [p.line(x, y)]
    body += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="#1f4e9c"/>' for a, b in zip(p.px(x), p.py(y))]
    return _document(left + w + 30, h + 60, body)
