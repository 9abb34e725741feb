"""Minimal hand-written SVG: polylines, axes and a legend. Output is byte-stable."""
from __future__ import annotations

from pathlib import Path

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

W, H, PAD = 640, 360, 40


def _points(xs, ys, x_range, y_range) -> str:
    x0, x1 = x_range
    y0, y1 = y_range
    sx = (W - 2 * PAD) / ((x1 - x0) or 1.0)
    sy = (H - 2 * PAD) / ((y1 - y0) or 1.0)
    return " ".join(f"{PAD + (x - x0) * sx:.2f},{H - PAD - (y - y0) * sy:.2f}" for x, y in zip(xs, ys))


def _document(comment: str, body: list[str]) -> str:
    lines = [
        f"<!-- {comment} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
    ]
    lines.extend(body)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def medoid_svg(medoids, path, comment: str = "", labels=None) -> None:
    """One polyline per medoid arc, coloured and labelled by cluster id."""
    medoids = [np.asarray(m, dtype=float) for m in medoids]
    lo = min(float(m.min()) for m in medoids)
    hi = max(float(m.max()) for m in medoids)
    body = []
    for c, m in enumerate(medoids):
        colour = PALETTE[c % len(PALETTE)]
        xs = np.linspace(0.0, 1.0, m.size)
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                    f'points="{_points(xs, m, (0.0, 1.0), (lo, hi))}"/>')
        name = labels[c] if labels else f"cluster {c}"
        body.append(f'<text x="{W - PAD - 110}" y="{PAD + 14 * c}" font-size="11" fill="{colour}">{name}</text>')
    Path(path).write_text(_document(comment, body))


def elbow_svg(ks, wcds, path, comment: str = "") -> None:
    ks = [float(k) for k in ks]
    wcds = [float(w) for w in wcds]
    body = [
        f'<polyline fill="none" stroke="{PALETTE[0]}" stroke-width="1.5" '
        f'points="{_points(ks, wcds, (min(ks), max(ks)), (0.0, max(wcds) or 1.0))}"/>',
        f'<text x="{W // 2}" y="{H - 8}" font-size="11">k</text>',
        f'<text x="4" y="{PAD - 8}" font-size="11">within-cluster distance</text>',
    ]
    Path(path).write_text(_document(comment, body))
