"""Static SVG rendering of ground truth, detections and derived quads.

Output is deterministic for fixed input: one ``<g>`` layer per source,
ground truth in blue, detections in green, quads in red.
"""

from __future__ import annotations

from .detect import Detection
from .labels import AnnotationPolygon

_LAYERS = (
    ("ground_truth", "#1f4fd8", "gt"),
    ("detections", "#12a33b", "det"),
    ("quads", "#d81f1f", "quad"),
)


def _path(vertices) -> str:
    coords = " L ".join(f"{x:.3f},{y:.3f}" for x, y in vertices)
    return f"M {coords} Z"


def render_svg(
    ground_truth: list[AnnotationPolygon],
    detections: list[Detection],
    size: tuple[int, int] | None = None,
    with_quads: bool = False,
) -> str:
    """Compose the SVG document as a string."""
    groups: dict[str, list[str]] = {"gt": [], "det": [], "quad": []}
    max_x = max_y = 1.0
    for ann in ground_truth:
        ring = ann.closed_vertices()
        groups["gt"].append(_path(ring))
        max_x = max(max_x, float(ring[:, 0].max()))
        max_y = max(max_y, float(ring[:, 1].max()))
    for det in detections:
        groups["det"].append(_path(det.polygon.vertices))
        max_x = max(max_x, float(det.polygon.vertices[:, 0].max()))
        max_y = max(max_y, float(det.polygon.vertices[:, 1].max()))
        if with_quads and det.quad is not None:
            groups["quad"].append(_path(det.quad.vertices))

    if size is None:
        size = (int(max_x + 2), int(max_y + 2))
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size[0]}" height="{size[1]}" '
        f'viewBox="0 0 {size[0]} {size[1]}">',
    ]
    for layer, color, key in _LAYERS:
        if key == "quad" and not with_quads:
            continue
        lines.append(f'  <g id="{layer}" fill="none" stroke="{color}" stroke-width="2">')
        for d in groups[key]:
            lines.append(f'    <path d="{d}"/>')
        lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
