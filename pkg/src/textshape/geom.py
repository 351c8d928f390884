"""Core 2D geometry: Delaunay triangulation, alpha shapes, nearest-boundary
queries, minimum-area rotated rectangles and rasterized polygon IoU.

Coordinates are image pixels unless a function says otherwise (alpha shapes
operate on coordinates normalized to the unit square, see
:func:`normalize_points`). All functions are pure and safe to call from
multiple workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay as _Delaunay
from scipy.spatial import QhullError

EPS = 1e-9


class DegenerateInputError(ValueError):
    """Fewer distinct points than required, or no usable area."""


class AlphaShapeError(ValueError):
    """Alpha-shape construction failed for a recoverable reason."""


class EmptyAlphaShapeError(AlphaShapeError):
    """Every triangle was discarded by the alpha filter."""


def as_points(points) -> np.ndarray:
    """Coerce to a float64 (N, 2) array, rejecting NaN/inf coordinates."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) point array, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("point coordinates must be finite")
    return pts


def shoelace_area(vertices) -> float:
    """Signed area, positive for counter-clockwise vertex order."""
    v = as_points(vertices)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _drop_repeats(pts: np.ndarray) -> np.ndarray:
    """Drop consecutive duplicates and an explicit closing vertex."""
    if len(pts) == 0:
        return pts
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.abs(pts[1:] - pts[:-1]) > EPS, axis=1)
    pts = pts[keep]
    if len(pts) > 1 and np.all(np.abs(pts[0] - pts[-1]) <= EPS):
        pts = pts[:-1]
    return pts


@dataclass
class Polygon:
    """Simple polygon; builders normalize the vertex order to CCW."""

    vertices: np.ndarray

    @classmethod
    def make(cls, points) -> "Polygon":
        pts = _drop_repeats(as_points(points))
        if len(pts) < 3:
            raise DegenerateInputError("polygon needs at least 3 distinct vertices")
        area = shoelace_area(pts)
        if abs(area) <= EPS:
            raise DegenerateInputError("polygon has zero area")
        if area < 0:
            pts = pts[::-1].copy()
        return cls(pts)

    @property
    def area(self) -> float:
        return abs(shoelace_area(self.vertices))

    @property
    def orientation(self) -> str:
        return "CCW" if shoelace_area(self.vertices) > 0 else "CW"

    def bounds(self) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y)."""
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 1].min()),
            float(v[:, 0].max()),
            float(v[:, 1].max()),
        )


@dataclass(frozen=True)
class Triangle:
    a: tuple[float, float]
    b: tuple[float, float]
    c: tuple[float, float]
    circumradius: float

    @property
    def points(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=np.float64)

    @property
    def area(self) -> float:
        return abs(shoelace_area(self.points))


@dataclass(frozen=True)
class NormTransform:
    """Isotropic map between original and [0, 1]^2 coordinates.

    ``apply`` sends original points to normalized ones:
    ``(p - offset) * scale``; ``invert`` undoes it exactly.
    """

    offset: tuple[float, float]
    scale: float

    def apply(self, points) -> np.ndarray:
        return (as_points(points) - np.asarray(self.offset)) * self.scale

    def invert(self, points) -> np.ndarray:
        return as_points(points) / self.scale + np.asarray(self.offset)


def circumcircle(a, b, c) -> tuple[np.ndarray, float]:
    """Circumcenter and circumradius of a triangle; radius is inf if collinear."""
    centers, radii = _circumcircles(np.array([[a, b, c]], dtype=np.float64))
    return centers[0], float(radii[0])


def _circumcircles(tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized circumcircles for a (T, 3, 2) triangle array."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab = b - a
    ac = c - a
    d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ac2 = np.einsum("ij,ij->i", ac, ac)
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
        uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
    centers = a + np.stack([ux, uy], axis=1)
    radii = np.where(
        np.abs(d) <= 1e-300,
        np.inf,
        np.hypot(ux, uy),
    )
    return centers, radii


def _collinear(pts: np.ndarray) -> bool:
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[1] <= 1e-9 * max(sv[0], 1e-30)


def _delaunay_raw(points, joggle: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deduplicated points, CCW-oriented simplices and their circumradii.

    ``joggle`` asks Qhull to perturb the input by an epsilon (QJ), which is
    deterministic and much faster on grid-aligned point sets; the resulting
    near-degenerate slivers are filtered out below. Degeneracy is checked
    explicitly beforehand because joggling would mask it.
    """
    pts = np.unique(as_points(points), axis=0)
    if len(pts) < 3:
        raise DegenerateInputError("need at least 3 distinct points")
    if joggle and _collinear(pts):
        raise DegenerateInputError("points are collinear")
    if len(pts) == 3:
        joggle = False   # QJ needs 4+ points for its initial simplex
    try:
        tess = _Delaunay(pts, qhull_options="QJ" if joggle else None)
    except QhullError as exc:
        raise DegenerateInputError(f"degenerate point set: {exc}") from exc
    simplices = tess.simplices.copy()
    tris = pts[simplices]
    signed = 0.5 * (
        (tris[:, 1, 0] - tris[:, 0, 0]) * (tris[:, 2, 1] - tris[:, 0, 1])
        - (tris[:, 1, 1] - tris[:, 0, 1]) * (tris[:, 2, 0] - tris[:, 0, 0])
    )
    flip = signed < 0
    simplices[flip] = simplices[flip][:, ::-1]
    keep = np.abs(signed) > 1e-14
    simplices = simplices[keep]
    if len(simplices) == 0:
        raise DegenerateInputError("all candidate triangles are collinear")
    _, radii = _circumcircles(pts[simplices])
    return pts, simplices, radii


def delaunay(points) -> list[Triangle]:
    """Delaunay triangulation of a point set.

    Duplicates are removed first. Raises :class:`DegenerateInputError` for
    fewer than 3 distinct points or an all-collinear set. Every returned
    triangle carries its circumradius; degenerate triangles are never
    emitted.
    """
    pts, simplices, radii = _delaunay_raw(points)
    tris = pts[simplices]
    return [
        Triangle(tuple(t[0]), tuple(t[1]), tuple(t[2]), float(r))
        for t, r in zip(tris, radii)
    ]


def _directed_edges(simplices: np.ndarray) -> np.ndarray:
    """All directed edges (3 per CCW triangle) as a (3T, 2) array."""
    return np.concatenate(
        [simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [2, 0]]]
    )


def _largest_component(simplices: np.ndarray, areas: np.ndarray) -> np.ndarray:
    """Indices of the triangle component with the largest total area.

    Triangles are adjacent when they share an (undirected) edge; an edge of
    a triangulation belongs to at most two triangles, so matching sorted
    edge keys pairwise is enough.
    """
    n = len(simplices)
    edges = np.sort(_directed_edges(simplices), axis=1)
    tri_idx = np.tile(np.arange(n), 3)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    es = edges[order]
    ts = tri_idx[order]
    same = np.all(es[1:] == es[:-1], axis=1)
    a, b = ts[:-1][same], ts[1:][same]
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    ncomp, comp = connected_components(graph, directed=False)
    totals = np.zeros(ncomp)
    np.add.at(totals, comp, areas)
    best = int(np.argmax(totals))
    return np.flatnonzero(comp == best)


def _boundary_loops(simplices: np.ndarray) -> list[list[int]]:
    """Closed vertex loops bounding a set of CCW triangles.

    Directed edges of CCW triangles keep the interior on their left, so
    boundary edges (those without a reversed twin) chain into closed loops.
    """
    directed = _directed_edges(simplices)
    base = int(directed.max()) + 1
    keys = directed[:, 0] * base + directed[:, 1]
    rev = directed[:, 1] * base + directed[:, 0]
    has_twin = np.isin(keys, rev)
    boundary = sorted(map(tuple, directed[~has_twin].tolist()))
    outgoing: dict[int, list[int]] = {}
    for t, h in boundary:
        outgoing.setdefault(t, []).append(h)
    for heads in outgoing.values():
        heads.sort()

    unused = set(boundary)
    loops = []
    for start in boundary:
        if start not in unused:
            continue
        loop = [start[0]]
        edge = start
        unused.discard(edge)
        while edge[1] != start[0]:
            loop.append(edge[1])
            nxt = _next_boundary_edge(edge, outgoing, unused)
            if nxt is None:
                raise AlphaShapeError("boundary walk failed to close a loop")
            edge = nxt
            unused.discard(edge)
        loops.append(loop)
    return loops


def _next_boundary_edge(edge, outgoing, unused):
    tail, head = edge
    candidates = [w for w in outgoing.get(head, ()) if (head, w) in unused]
    if not candidates:
        return None
    # At a pinch vertex any continuation is valid: triangulation edges never
    # cross, and repeated vertices are split into sub-loops afterwards.
    return (head, candidates[0])


def _split_pinches(loop: list[int]) -> list[list[int]]:
    """Split a loop that revisits a vertex into simple sub-loops."""
    stack: list[int] = []
    pos: dict[int, int] = {}
    out: list[list[int]] = []
    for v in loop:
        if v in pos:
            cut = pos[v]
            sub = stack[cut:]
            if len(sub) >= 3:
                out.append(sub)
            for u in stack[cut:]:
                pos.pop(u, None)
            del stack[cut:]
        pos[v] = len(stack)
        stack.append(v)
    if len(stack) >= 3:
        out.append(stack)
    return out


def _shape_from_filter(
    pts: np.ndarray, simplices: np.ndarray, radii: np.ndarray, alpha: float
) -> tuple[Polygon, float]:
    """Alpha-filtered shape plus the fraction of points it covers.

    Coverage is the share of input points that are vertices of the chosen
    component's triangles; a well-formed shape covers nearly all of them
    while a stray fragment covers only a few.
    """
    kept = simplices[radii <= alpha]
    if len(kept) == 0:
        raise EmptyAlphaShapeError(f"no triangle has circumradius <= {alpha}")
    tris = pts[kept]
    areas = 0.5 * np.abs(
        (tris[:, 1, 0] - tris[:, 0, 0]) * (tris[:, 2, 1] - tris[:, 0, 1])
        - (tris[:, 1, 1] - tris[:, 0, 1]) * (tris[:, 2, 0] - tris[:, 0, 0])
    )
    kept = kept[_largest_component(kept, areas)]
    coverage = len(np.unique(kept)) / len(pts)

    best: list[int] | None = None
    best_area = -1.0
    for raw in _boundary_loops(kept):
        for loop in _split_pinches(raw):
            area = abs(shoelace_area(pts[loop]))
            if area > best_area:
                best_area = area
                best = loop
    if best is None or best_area <= EPS:
        raise AlphaShapeError("alpha shape has no usable outer boundary")
    try:
        return Polygon.make(pts[best]), coverage
    except DegenerateInputError as exc:
        # A degenerate loop at this alpha is recoverable by escalating.
        raise AlphaShapeError(str(exc)) from exc


def alpha_shape(points, alpha: float) -> Polygon:
    """Concave hull: Delaunay triangles kept while circumradius <= alpha.

    Points are expected in normalized [0, 1]^2 coordinates (see
    :func:`normalize_points`); ``alpha`` may be ``math.inf``, in which case
    the result is the convex hull. Among the retained triangles only the
    connected component with the largest total area contributes; its outer
    boundary is returned as a simple CCW polygon.

    Raises :class:`EmptyAlphaShapeError` when the filter discards every
    triangle and :class:`DegenerateInputError` for unusable input.
    """
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    pts, simplices, radii = _delaunay_raw(points)
    poly, _ = _shape_from_filter(pts, simplices, radii, alpha)
    return poly


def alpha_shape_with_fallback(
    points,
    alpha: float,
    doublings: int = 4,
    min_coverage: float = 0.98,
    must_contain=None,
    min_containment: float = 0.9,
) -> Polygon:
    """Alpha shape with the escalation ladder used by the decoder.

    The detection contract wants a polygon enclosing the boundary points,
    so an attempt is accepted only when its component covers at least
    ``min_coverage`` of them and, when ``must_contain`` points are given
    (the central-region cell centers the points were regressed from),
    contains at least ``min_containment`` of those. Empty, fragmented or
    non-enclosing results (corner slivers at a small alpha, or the open
    band a noisy ring collapses to) retry with alpha doubled up to
    ``doublings`` times. The convex hull is the final fallback, so every
    non-degenerate point set yields a polygon.
    """
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    pts, simplices, radii = _delaunay_raw(points, joggle=True)
    inner = None
    if must_contain is not None and len(must_contain):
        inner = as_points(must_contain)
        if len(inner) > 512:
            inner = inner[:: len(inner) // 512 + 1]
    a = alpha
    for _ in range(doublings + 1):
        try:
            poly, coverage = _shape_from_filter(pts, simplices, radii, a)
        except AlphaShapeError:
            poly, coverage = None, 0.0
        if poly is not None and coverage >= min_coverage:
            if inner is None or point_in_polygon(inner, poly.vertices).mean() >= min_containment:
                return poly
        a *= 2.0
    return Polygon.make(convex_hull(pts))


def convex_hull(points) -> np.ndarray:
    """Convex hull vertices in CCW order (monotone chain)."""
    pts = np.unique(as_points(points), axis=0)
    if len(pts) < 3:
        raise DegenerateInputError("need at least 3 distinct points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2:
                u = chain[-1] - chain[-2]
                v = p - chain[-2]
                if u[0] * v[1] - u[1] * v[0] > EPS:
                    break
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateInputError("points are collinear")
    return hull


def nearest_boundary_points(points, vertices) -> tuple[np.ndarray, np.ndarray]:
    """Closest boundary point on a polygon for each query point.

    Edges are treated as continuous segments. Ties within 1e-9 are broken
    toward the candidate with the smallest y, then smallest x. Returns
    (feet (M, 2), distances (M,)).
    """
    P = as_points(points)
    V = as_points(vertices)
    if len(V) < 3:
        raise DegenerateInputError("polygon needs at least 3 vertices")
    A = V
    B = np.roll(V, -1, axis=0)
    AB = B - A
    len2 = np.einsum("ij,ij->i", AB, AB)
    len2 = np.where(len2 <= 1e-300, 1.0, len2)

    feet_out = np.empty_like(P)
    dist_out = np.empty(len(P))
    chunk = 16384
    for lo in range(0, len(P), chunk):
        p = P[lo : lo + chunk]
        diff = p[:, None, :] - A[None, :, :]
        t = np.einsum("mej,ej->me", diff, AB) / len2
        np.clip(t, 0.0, 1.0, out=t)
        foot = A[None, :, :] + t[:, :, None] * AB[None, :, :]
        d = np.hypot(p[:, None, 0] - foot[:, :, 0], p[:, None, 1] - foot[:, :, 1])
        dmin = d.min(axis=1)
        tol = EPS * np.maximum(1.0, dmin)
        cand = d <= (dmin + tol)[:, None]
        fy = np.where(cand, foot[:, :, 1], np.inf)
        cand &= fy <= (fy.min(axis=1) + EPS)[:, None]
        fx = np.where(cand, foot[:, :, 0], np.inf)
        cand &= fx <= (fx.min(axis=1) + EPS)[:, None]
        idx = cand.argmax(axis=1)
        rows = np.arange(len(p))
        feet_out[lo : lo + chunk] = foot[rows, idx]
        dist_out[lo : lo + chunk] = d[rows, idx]
    return feet_out, dist_out


def nearest_point_on_polygon(p, poly: Polygon | np.ndarray) -> tuple[np.ndarray, float, float]:
    """Nearest boundary point b and signed offsets (b.x - p.x, b.y - p.y)."""
    vertices = poly.vertices if isinstance(poly, Polygon) else poly
    q = np.asarray(p, dtype=np.float64).reshape(1, 2)
    feet, _ = nearest_boundary_points(q, vertices)
    foot = feet[0]
    return foot, float(foot[0] - q[0, 0]), float(foot[1] - q[0, 1])


def normalize_points(points) -> tuple[np.ndarray, NormTransform]:
    """Shift and isotropically scale points into [0, 1]^2.

    A single scale factor 1 / max(width, height) of the bounding box keeps
    the aspect ratio. Returns the normalized points and the transform needed
    to undo the mapping.
    """
    pts = as_points(points)
    if len(pts) < 2:
        raise DegenerateInputError("need at least 2 points")
    mins = pts.min(axis=0)
    span = pts.max(axis=0) - mins
    extent = float(span.max())
    if extent <= 0:
        raise DegenerateInputError("all points are identical")
    t = NormTransform(offset=(float(mins[0]), float(mins[1])), scale=1.0 / extent)
    return t.apply(pts), t


def denormalize_polygon(poly: Polygon, t: NormTransform) -> Polygon:
    """Map a polygon in normalized coordinates back to the original scale."""
    return Polygon(t.invert(poly.vertices))


def min_area_rect(poly: Polygon | np.ndarray) -> Polygon:
    """Minimum-area oriented rectangle enclosing a polygon.

    Rotating calipers over the convex hull: the optimal rectangle shares a
    direction with some hull edge.
    """
    vertices = poly.vertices if isinstance(poly, Polygon) else as_points(poly)
    hull = convex_hull(vertices)
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    dirs = edges / lengths[:, None]

    best_area = math.inf
    best = None
    for ux, uy in dirs:
        rot = np.array([[ux, uy], [-uy, ux]])
        proj = hull @ rot.T
        lo = proj.min(axis=0)
        hi = proj.max(axis=0)
        area = float((hi[0] - lo[0]) * (hi[1] - lo[1]))
        if area < best_area - 1e-12:
            best_area = area
            corners = np.array(
                [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
            )
            best = corners @ rot
    if best is None:
        raise DegenerateInputError("cannot fit a rectangle to a degenerate polygon")
    return Polygon.make(best)


def point_in_polygon(points, vertices) -> np.ndarray:
    """Even-odd (crossing number) point-in-polygon test, vectorized."""
    P = as_points(points)
    V = as_points(vertices)
    inside = np.zeros(len(P), dtype=bool)
    x, y = P[:, 0], P[:, 1]
    x1, y1 = V[:, 0], V[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for k in range(len(V)):
        cond = (y1[k] > y) != (y2[k] > y)
        if not cond.any():
            continue
        xs = x1[k] + (y - y1[k]) * (x2[k] - x1[k]) / (y2[k] - y1[k])
        inside ^= cond & (x < xs)
    return inside


def polygon_mask(
    vertices,
    origin: tuple[float, float],
    cell: tuple[float, float],
    shape: tuple[int, int],
) -> np.ndarray:
    """Rasterize a polygon: cell is set when its center is inside.

    Scanline even-odd fill: per grid row, edge crossings are collected and
    a cell is inside when an odd number of crossings lie left of its
    center. Linear in edges per row, so dense decoded polygons stay cheap.
    """
    ny, nx = shape
    V = as_points(vertices)
    xc = origin[0] + (np.arange(nx) + 0.5) * cell[0]
    yc = origin[1] + (np.arange(ny) + 0.5) * cell[1]

    x1, y1 = V[:, 0], V[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    dy = y2 - y1
    straddle = (y1[None, :] > yc[:, None]) != (y2[None, :] > yc[:, None])
    if not straddle.any():
        return np.zeros(shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = x1[None, :] + (yc[:, None] - y1[None, :]) * (x2 - x1)[None, :] / dy[None, :]
    cross = np.where(straddle, cross, np.inf)
    cross.sort(axis=1)
    k = int(straddle.sum(axis=1).max())
    cross = cross[:, :k]
    counts = (cross[:, None, :] < xc[None, :, None]).sum(axis=2)
    return (counts % 2 == 1)


def polygon_iou(a: Polygon, b: Polygon, resolution: int = 256) -> float:
    """Rasterized intersection-over-union of two simple polygons.

    Both polygons are scan-converted onto a shared resolution x resolution
    grid spanning their joint bounding box; concave inputs are handled by
    construction. Disjoint polygons score 0.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    x0, y0 = min(ax0, bx0), min(ay0, by0)
    x1, y1 = max(ax1, bx1), max(ay1, by1)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    cell = ((x1 - x0) / resolution, (y1 - y0) / resolution)
    shape = (resolution, resolution)
    ma = polygon_mask(a.vertices, (x0, y0), cell, shape)
    mb = polygon_mask(b.vertices, (x0, y0), cell, shape)
    union = np.logical_or(ma, mb).sum()
    if union == 0:
        return 0.0
    inter = np.logical_and(ma, mb).sum()
    return float(inter) / float(union)


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_cross(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of two segments, with epsilon slack."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > EPS and d2 < -EPS) or (d1 < -EPS and d2 > EPS)) and (
        (d3 > EPS and d4 < -EPS) or (d3 < -EPS and d4 > EPS)
    ):
        return True
    return False


def is_simple(vertices) -> bool:
    """True when no two non-adjacent polygon edges properly intersect."""
    V = as_points(vertices)
    n = len(V)
    if n < 3:
        return False
    edges = [(V[i], V[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True
