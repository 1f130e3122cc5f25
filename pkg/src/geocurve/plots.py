"""Standalone SVG figures: line plots and an orthographic view of sphere curves."""

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
WIDTH, HEIGHT, MARGIN = 640, 400, 56


def _num(x):
    return f"{x:.2f}"


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def line_plot(series, title="", xlabel="", ylabel="", markers=False):
    """SVG text for ``{label: (x, y)}`` drawn as polylines on shared axes."""
    xs = np.concatenate([np.asarray(x, dtype=float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, y in series.values()])
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_num(sx(t))}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN - 6}" y="{_num(sy(t) + 4)}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
    for k, (label, (x, y)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_num(sx(a))},{_num(sy(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if markers:
            out.extend(f'<circle cx="{_num(sx(a))}" cy="{_num(sy(b))}" r="2.5" fill="{color}"/>'
                       for a, b in zip(x, y))
        ly = MARGIN + 14 + 14 * k
        out.append(f'<text x="{WIDTH - MARGIN - 4}" y="{ly}" text-anchor="end" fill="{color}">'
                   f'{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sphere_plot(groups, title="", view=(0.35, 0.25)):
    """Orthographic projection of sphere curves ``{label: [points (N, 3), ...]}``.

    ``view`` is (elevation, azimuth) in radians of the viewing direction.
    Back-facing segments are drawn dashed and faded.
    """
    el, az = view
    d = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    up0 = np.array([0.0, 0.0, 1.0])
    right = np.cross(up0, d)
    right /= np.linalg.norm(right)
    up = np.cross(d, right)
    size = min(WIDTH, HEIGHT)
    r = size / 2 - MARGIN / 2
    cx, cy = WIDTH / 2, HEIGHT / 2 + 10
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<circle cx="{cx}" cy="{cy}" r="{_num(r)}" fill="none" stroke="#999"/>']
    for k, (label, curves) in enumerate(groups.items()):
        color = PALETTE[k % len(PALETTE)]
        for pts in curves:
            pts = np.asarray(pts, dtype=float)
            u = cx + r * pts @ right
            v = cy - r * pts @ up
            front = pts @ d >= 0
            for visible in (True, False):
                mask = front if visible else ~front
                if not np.any(mask):
                    continue
                coords = " ".join(f"{_num(a)},{_num(b)}" for a, b in zip(u[mask], v[mask]))
                style = 'stroke-width="1.2"' if visible else 'stroke-width="0.8" stroke-dasharray="3,3" opacity="0.4"'
                out.append(f'<polyline fill="none" stroke="{color}" {style} points="{coords}"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * k}" text-anchor="end" fill="{color}">'
                   f'{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
