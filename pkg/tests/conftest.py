"""Shared oracle helpers, deliberately independent of the library internals."""

from __future__ import annotations

import numpy as np
import pytest


def shoelace(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def ray_cast_inside(px: float, py: float, vertices) -> bool:
    """Classic scalar even-odd test (independent of the library rasterizer)."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = v[i]
        xj, yj = v[j]
        if (yi > py) != (yj > py):
            x_cross = xi + (py - yi) * (xj - xi) / (yj - yi)
            if px < x_cross:
                inside = not inside
        j = i
    return inside


def rasterize_oracle(vertices, x0, y0, x1, y1, n) -> np.ndarray:
    """Per-edge parity accumulation on an n x n grid of cell centers."""
    v = np.asarray(vertices, dtype=float)
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    gx, gy = np.meshgrid(xs, ys)
    inside = np.zeros((n, n), dtype=bool)
    m = len(v)
    for i in range(m):
        xi, yi = v[i]
        xj, yj = v[(i + 1) % m]
        cond = (yi > gy) != (yj > gy)
        if not cond.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = xi + (gy - yi) * (xj - xi) / (yj - yi)
        inside ^= cond & (gx < x_cross)
    return inside


def boundary_samples(vertices, n: int) -> np.ndarray:
    """n points uniformly spaced by arc length along the polygon boundary."""
    v = np.asarray(vertices, dtype=float)
    closed = np.vstack([v, v[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    t = np.linspace(0.0, total, n, endpoint=False)
    idx = np.searchsorted(cum, t, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    frac = (t - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    return closed[idx] + frac[:, None] * (closed[idx + 1] - closed[idx])


def strip_collinear(vertices, tol: float = 1e-9) -> np.ndarray:
    """Drop vertices collinear with their neighbors (for hull comparisons)."""
    v = np.asarray(vertices, dtype=float)
    keep = []
    n = len(v)
    for i in range(n):
        a, b, c = v[i - 1], v[i], v[(i + 1) % n]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cross) > tol:
            keep.append(i)
    return v[keep]


def vertex_sets_match(a, b, tol: float = 1e-9) -> bool:
    """Order-insensitive vertex set comparison."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        return False
    used = np.zeros(len(b), dtype=bool)
    for p in a:
        d = np.hypot(b[:, 0] - p[0], b[:, 1] - p[1])
        d[used] = np.inf
        j = int(np.argmin(d))
        if d[j] > tol:
            return False
        used[j] = True
    return True


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
