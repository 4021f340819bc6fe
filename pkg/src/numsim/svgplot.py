"""Dependency-free SVG rendering of similarity heatmaps and MDS scatters.

Output bytes are deterministic for a given input, so rendered files can be
golden-tested.
"""

import numpy as np

# viridis anchors, interpolated linearly; perceptually uniform enough for
# heatmap inspection without pulling in matplotlib
_VIRIDIS = [
    (68, 1, 84), (71, 44, 122), (59, 81, 139), (44, 113, 142), (33, 144, 141),
    (39, 173, 129), (92, 200, 99), (170, 220, 50), (253, 231, 37),
]
_ABSENT_COLOR = "#c0c0c0"


def _color(v):
    """Map v in [0, 1] to a viridis-like hex color."""
    v = min(1.0, max(0.0, float(v)))
    pos = v * (len(_VIRIDIS) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(_VIRIDIS) - 1)
    frac = pos - lo
    rgb = tuple(
        round(_VIRIDIS[lo][c] + frac * (_VIRIDIS[hi][c] - _VIRIDIS[lo][c]))
        for c in range(3)
    )
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def heatmap_svg(grid, label_every=100, max_px=800):
    """Render a similarity grid as an SVG heatmap with axis tick labels."""
    v = np.asarray(grid.values, dtype=np.float64)
    n = v.shape[0]
    cell = max(1, max_px // n)
    margin = 40
    size = n * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 2 * margin}" '
        f'height="{size + 2 * margin}" viewBox="0 0 {size + 2 * margin} {size + 2 * margin}">',
        f'<rect width="{size + 2 * margin}" height="{size + 2 * margin}" fill="white"/>',
    ]
    for i in range(n):
        for j in range(n):
            fill = _ABSENT_COLOR if np.isnan(v[i, j]) else _color(v[i, j])
            parts.append(
                f'<rect x="{margin + j * cell}" y="{margin + i * cell}" '
                f'width="{cell}" height="{cell}" fill="{fill}"/>'
            )
    for k in range(0, n, label_every):
        label = grid.n_min + k
        x = margin + k * cell
        parts.append(
            f'<text x="{x}" y="{margin - 6}" font-size="10" '
            f'text-anchor="middle" fill="black">{label}</text>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{margin + k * cell + 4}" font-size="10" '
            f'text-anchor="end" fill="black">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(points, labels, label_every=5, width=800, height=800):
    """Render 2-D points as an SVG scatter, labeling every Nth point."""
    pts = np.asarray(points, dtype=np.float64)
    margin = 40
    span = np.ptp(pts, axis=0)
    span[span == 0] = 1.0
    lo = pts.min(axis=0)
    sx = (width - 2 * margin) / span[0]
    sy = (height - 2 * margin) / span[1]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i, (p, label) in enumerate(zip(pts, labels)):
        x = margin + (p[0] - lo[0]) * sx
        y = height - margin - (p[1] - lo[1]) * sy
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="#3b518b"/>')
        if i % label_every == 0:
            parts.append(
                f'<text x="{x:.2f}" y="{y - 4:.2f}" font-size="8" '
                f'text-anchor="middle" fill="black">{label}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
