"""Ground-truth generation: annotation polygons to central-region masks and
signed nearest-boundary distance maps.

A text annotation is two vertex chains (upper and lower, both running left
to right). The central text region is a 25% inset of the annotation along
the chain-connecting edges of a deterministic zip triangulation; every cell
of the central region stores the signed offset from its center to the
nearest point on the full annotation boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import (
    Polygon,
    Triangle,
    as_points,
    circumcircle,
    is_simple,
    nearest_boundary_points,
    point_in_polygon,
    shoelace_area,
)

SHRINK = 0.25


class MalformedAnnotationError(ValueError):
    """Annotation vertices violate the two-chain convention."""


@dataclass
class AnnotationPolygon:
    """Two-chain text annotation.

    ``upper`` and ``lower`` both run left to right; the closed outline is
    upper left-to-right followed by lower right-to-left.
    """

    upper: np.ndarray
    lower: np.ndarray
    ignore: bool = False
    source_vertex_count: int = 0

    @classmethod
    def make(cls, upper, lower, ignore: bool = False) -> "AnnotationPolygon":
        up = _clean_chain(as_points(upper))
        low = _clean_chain(as_points(lower))
        if len(up) < 2 or len(low) < 2:
            raise MalformedAnnotationError("each chain needs at least 2 distinct vertices")
        ann = cls(up, low, ignore=ignore, source_vertex_count=len(up) + len(low))
        ring = ann.closed_vertices()
        if abs(shoelace_area(ring)) <= 1e-9:
            raise MalformedAnnotationError("annotation polygon has zero area")
        if not is_simple(ring):
            raise MalformedAnnotationError("annotation polygon is self-intersecting")
        return ann

    def closed_vertices(self) -> np.ndarray:
        return np.vstack([self.upper, self.lower[::-1]])

    def polygon(self) -> Polygon:
        return Polygon.make(self.closed_vertices())


def _clean_chain(pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return pts
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.abs(pts[1:] - pts[:-1]) > 1e-9, axis=1)
    return pts[keep]


def split_sides(vertices) -> AnnotationPolygon:
    """Split a flat vertex ring into upper/lower chains.

    Expects the dataset convention "upper chain left to right, then lower
    chain right to left" with an even vertex count >= 4; quadrilaterals in
    clockwise-from-top-left order are the 4-vertex special case.
    """
    pts = as_points(vertices)
    n = len(pts)
    if n < 4 or n % 2 != 0:
        raise MalformedAnnotationError(f"need an even vertex count >= 4, got {n}")
    half = n // 2
    return AnnotationPolygon.make(pts[:half], pts[half:][::-1])


def _zip_edges(ann: AnnotationPolygon) -> list[tuple[int, int]]:
    """Connecting edges (upper_idx, lower_idx) of the zip triangulation.

    Chains are merged by normalized arc length, so every triangle straddles
    the two chains and the construction is reproducible.
    """
    tu = _arc_params(ann.upper)
    tl = _arc_params(ann.lower)
    iu = il = 0
    edges = [(0, 0)]
    while iu < len(tu) - 1 or il < len(tl) - 1:
        if iu == len(tu) - 1:
            il += 1
        elif il == len(tl) - 1:
            iu += 1
        elif tu[iu + 1] <= tl[il + 1]:
            iu += 1
        else:
            il += 1
        edges.append((iu, il))
    return edges


def _arc_params(chain: np.ndarray) -> np.ndarray:
    seg = np.hypot(*(chain[1:] - chain[:-1]).T)
    total = seg.sum()
    if total <= 0:
        raise MalformedAnnotationError("chain has zero length")
    return np.concatenate([[0.0], np.cumsum(seg)]) / total


def triangulate_annotation(ann: AnnotationPolygon) -> list[Triangle]:
    """Tile the annotation with triangles straddling the two chains.

    The zip merge yields exactly len(upper) + len(lower) - 2 triangles whose
    total area equals the annotation polygon area.
    """
    edges = _zip_edges(ann)
    tris = []
    for (iu0, il0), (iu1, il1) in zip(edges, edges[1:]):
        if iu1 > iu0:
            corners = (ann.upper[iu0], ann.upper[iu1], ann.lower[il0])
        else:
            corners = (ann.upper[iu0], ann.lower[il1], ann.lower[il0])
        _, radius = circumcircle(*corners)
        tris.append(Triangle(tuple(corners[0]), tuple(corners[1]), tuple(corners[2]), radius))
    return tris


def central_region_polygon(ann: AnnotationPolygon) -> Polygon:
    """Central text region: 25% inset along every chain-connecting edge.

    The two points at 25% of the edge length from each endpoint are emitted
    for every connecting edge (the original end edges included, so the
    region closes); the result is strictly inside the annotation and smaller
    than it, which keeps neighboring instances separable.
    """
    upper_side = []
    lower_side = []
    for iu, il in _zip_edges(ann):
        u = ann.upper[iu]
        v = ann.lower[il] - u
        if np.hypot(*v) <= 1e-9:
            continue
        upper_side.append(u + SHRINK * v)
        lower_side.append(u + (1.0 - SHRINK) * v)
    ring = upper_side + lower_side[::-1]
    if len(ring) < 3:
        raise MalformedAnnotationError("central region degenerates to fewer than 3 vertices")
    return Polygon.make(np.array(ring))


@dataclass(frozen=True)
class RasterGrid:
    """Cell grid over an image; cell (i, j) has center ((i+.5)s, (j+.5)s)."""

    width: int
    height: int
    stride: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.stride < 1:
            raise ValueError("grid dimensions and stride must be positive")

    @classmethod
    def for_image(cls, image_w: int, image_h: int, stride: int = 1) -> "RasterGrid":
        return cls(
            width=-(-int(image_w) // stride),
            height=-(-int(image_h) // stride),
            stride=stride,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def cell_centers(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Image coordinates of cell centers for (row, col) index arrays."""
        x = (np.asarray(cols) + 0.5) * self.stride
        y = (np.asarray(rows) + 0.5) * self.stride
        return np.stack([x, y], axis=-1)


@dataclass
class EncodeStats:
    instances: int = 0
    ignored: int = 0
    encoded_cells: int = 0
    conflict_cells: int = 0


@dataclass
class LabelRaster:
    """Central-region mask plus signed x/y distance maps on a grid.

    Distances are valid (and finite) exactly where mask == 1 and zero
    elsewhere; cell center + (dist_x, dist_y) lands on the annotation
    boundary.
    """

    grid: RasterGrid
    mask: np.ndarray
    dist_x: np.ndarray
    dist_y: np.ndarray
    ignore_mask: np.ndarray
    stats: EncodeStats | None = field(default=None, compare=False)

    @classmethod
    def zeros(cls, grid: RasterGrid) -> "LabelRaster":
        shape = grid.shape
        return cls(
            grid=grid,
            mask=np.zeros(shape, dtype=np.uint8),
            dist_x=np.zeros(shape, dtype=np.float64),
            dist_y=np.zeros(shape, dtype=np.float64),
            ignore_mask=np.zeros(shape, dtype=np.uint8),
        )


def _region_cells(poly: Polygon, grid: RasterGrid) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of grid cells whose centers fall inside the polygon."""
    x0, y0, x1, y1 = poly.bounds()
    c0 = max(0, int(np.floor(x0 / grid.stride - 0.5)))
    c1 = min(grid.width - 1, int(np.ceil(x1 / grid.stride - 0.5)))
    r0 = max(0, int(np.floor(y0 / grid.stride - 0.5)))
    r1 = min(grid.height - 1, int(np.ceil(y1 / grid.stride - 0.5)))
    if c1 < c0 or r1 < r0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
    cols = cols.ravel()
    rows = rows.ravel()
    inside = point_in_polygon(grid.cell_centers(rows, cols), poly.vertices)
    return rows[inside], cols[inside]


def encode(annotations: list[AnnotationPolygon], grid: RasterGrid) -> LabelRaster:
    """Rasterize annotations into a LabelRaster.

    The mask is the union of the central regions of non-ignore annotations;
    each positive cell stores the offset from its center to the nearest
    point of the owning annotation's full boundary. A cell claimed by two
    central regions goes to the annotation whose boundary is nearer, and the
    conflict is counted in the returned stats. Ignore annotations only fill
    the ignore mask (over their full outline).
    """
    out = LabelRaster.zeros(grid)
    stats = EncodeStats()
    best_dist = np.full(grid.shape, np.inf)

    for ann in annotations:
        if ann.ignore:
            stats.ignored += 1
            rows, cols = _region_cells(ann.polygon(), grid)
            out.ignore_mask[rows, cols] = 1
            continue
        stats.instances += 1
        central = central_region_polygon(ann)
        rows, cols = _region_cells(central, grid)
        if len(rows) == 0:
            continue
        centers = grid.cell_centers(rows, cols)
        feet, dist = nearest_boundary_points(centers, ann.closed_vertices())

        occupied = out.mask[rows, cols] == 1
        stats.conflict_cells += int(occupied.sum())
        claim = ~occupied | (dist < best_dist[rows, cols])
        r, c = rows[claim], cols[claim]
        out.mask[r, c] = 1
        out.dist_x[r, c] = feet[claim, 0] - centers[claim, 0]
        out.dist_y[r, c] = feet[claim, 1] - centers[claim, 1]
        best_dist[r, c] = dist[claim]

    stats.encoded_cells = int(out.mask.sum())
    out.stats = stats
    return out
