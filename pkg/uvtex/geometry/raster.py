"""
Scanline-free triangle rasterization and bilinear sampling.

Pixel (row y, column x) has its center at (x + 0.5, y + 0.5). A pixel is
covered by a triangle when all three barycentric coordinates of its center
are >= 0. When several triangles cover a pixel the nearest one wins and
exact depth ties go to the smallest triangle index; without depth the
smallest covering index wins.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..common.errors import GeometryError
from .camera import Camera, project_points
from .mesh import Mesh

NO_TRIANGLE = -1
INTERIOR_EPS = 1e-9


@dataclass
class DepthBuffer:
    """
    Per-pixel nearest-surface record.

    Attributes:
        depth: (h, w) camera-space z, +inf where empty
        triangle: (h, w) winning triangle index or NO_TRIANGLE
        bary: (h, w, 3) screen-space barycentrics of the pixel center
    """

    depth: np.ndarray
    triangle: np.ndarray
    bary: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    @property
    def covered(self) -> np.ndarray:
        return self.triangle != NO_TRIANGLE


def barycentric_coordinates(tri: np.ndarray, px, py) -> np.ndarray:
    """
    Barycentric coordinates of points with respect to one 2D triangle.

    Args:
        tri: (3, 2) corner positions
        px, py: point coordinates (any broadcastable shapes)

    Returns:
        (..., 3) coordinates; NaN for a degenerate triangle
    """
    (ax, ay), (bx, by), (cx, cy) = np.asarray(tri, dtype=np.float64)
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    d = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
    if d == 0.0:
        shape = np.broadcast(px, py).shape
        return np.full(shape + (3,), np.nan)
    l0 = ((by - cy) * (px - cx) + (cx - bx) * (py - cy)) / d
    l1 = ((cy - ay) * (px - cx) + (ax - cx) * (py - cy)) / d
    l2 = 1.0 - l0 - l1
    return np.stack(np.broadcast_arrays(l0, l1, l2), axis=-1)


def perspective_depth(bary: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Perspective-correct depth: reciprocal of barycentrically blended 1/z."""
    z = np.asarray(z, dtype=np.float64)
    return 1.0 / (bary[..., 0] / z[0] + bary[..., 1] / z[1] + bary[..., 2] / z[2])


def perspective_weights(bary: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Screen barycentrics converted to surface barycentrics."""
    z = np.asarray(z, dtype=np.float64)
    w = bary / z
    return w / w.sum(axis=-1, keepdims=True)


def _bbox_slices(tri: np.ndarray, width: int, height: int) -> Optional[tuple[slice, slice]]:
    lo = np.floor(tri.min(axis=0) - 0.5).astype(np.int64) - 1
    hi = np.ceil(tri.max(axis=0) - 0.5).astype(np.int64) + 1
    x0, y0 = max(int(lo[0]), 0), max(int(lo[1]), 0)
    x1, y1 = min(int(hi[0]), width - 1), min(int(hi[1]), height - 1)
    if x1 < x0 or y1 < y0:
        return None
    return slice(y0, y1 + 1), slice(x0, x1 + 1)


def rasterize_triangles_2d(
    tri2d: np.ndarray,
    width: int,
    height: int,
    depths: Optional[np.ndarray] = None,
    skip: Optional[np.ndarray] = None,
) -> DepthBuffer:
    """
    Rasterize 2D triangles in index order.

    Args:
        tri2d: (m, 3, 2) corner positions in pixel units
        width, height: buffer size
        depths: optional (m, 3) positive corner depths; enables the z-test
        skip: optional (m,) boolean, True for triangles to ignore

    Returns:
        DepthBuffer; depth stays +inf when `depths` is None
    """
    if width <= 0 or height <= 0:
        raise GeometryError(f"zero-size buffer {width}x{height}")

    tri2d = np.asarray(tri2d, dtype=np.float64).reshape(-1, 3, 2)
    depth = np.full((height, width), np.inf)
    triangle = np.full((height, width), NO_TRIANGLE, dtype=np.int64)
    bary = np.zeros((height, width, 3))

    for i, tri in enumerate(tri2d):
        if skip is not None and skip[i]:
            continue
        if not np.all(np.isfinite(tri)):
            continue
        window = _bbox_slices(tri, width, height)
        if window is None:
            continue
        rows, cols = window
        py = np.arange(rows.start, rows.stop, dtype=np.float64)[:, None] + 0.5
        px = np.arange(cols.start, cols.stop, dtype=np.float64)[None, :] + 0.5
        lam = barycentric_coordinates(tri, px, py)
        inside = np.all(lam >= 0.0, axis=-1)
        if not inside.any():
            continue

        if depths is None:
            update = inside & (triangle[rows, cols] == NO_TRIANGLE)
        else:
            z = perspective_depth(lam, depths[i])
            update = inside & (z < depth[rows, cols])
            depth[rows, cols][update] = z[update]
        triangle[rows, cols][update] = i
        bary[rows, cols][update] = lam[update]

    return DepthBuffer(depth=depth, triangle=triangle, bary=bary)


def coverage_counts(tri2d: np.ndarray, width: int, height: int) -> np.ndarray:
    """(h, w) number of triangles whose strict interior contains each pixel center."""
    tri2d = np.asarray(tri2d, dtype=np.float64).reshape(-1, 3, 2)
    counts = np.zeros((height, width), dtype=np.int64)
    for tri in tri2d:
        window = _bbox_slices(tri, width, height)
        if window is None:
            continue
        rows, cols = window
        py = np.arange(rows.start, rows.stop, dtype=np.float64)[:, None] + 0.5
        px = np.arange(cols.start, cols.stop, dtype=np.float64)[None, :] + 0.5
        lam = barycentric_coordinates(tri, px, py)
        counts[rows, cols] += np.all(lam > INTERIOR_EPS, axis=-1)
    return counts


def rasterize_depth(mesh: Mesh, camera: Camera, width: int, height: int) -> DepthBuffer:
    """
    Z-buffer the mesh as seen by the camera.

    Triangles with any vertex at or behind the near plane are skipped.
    """
    if width <= 0 or height <= 0:
        raise GeometryError(f"zero-size buffer {width}x{height}")
    uv, z, in_front = project_points(camera, mesh.vertices)
    tri2d = uv[mesh.triangles]
    tri_depth = z[mesh.triangles]
    skip = ~np.all(in_front[mesh.triangles], axis=1)
    return rasterize_triangles_2d(tri2d, width, height, depths=tri_depth, skip=skip)


# ============================================================================
# Bilinear sampling
# ============================================================================


def bilinear_taps(x, y, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Flat indices and weights of the four texels a bilinear lookup reads.

    Coordinates are in pixel units with centers at i + 0.5; lookups outside
    the image clamp to the boundary centers.

    Returns:
        (indices, weights), each shaped (..., 4); weights sum to 1
    """
    fx = np.clip(np.asarray(x, dtype=np.float64) - 0.5, 0.0, width - 1)
    fy = np.clip(np.asarray(y, dtype=np.float64) - 0.5, 0.0, height - 1)
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    tx = fx - x0
    ty = fy - y0

    indices = np.stack(
        [y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1], axis=-1
    )
    weights = np.stack(
        [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=-1
    )
    return indices, weights


def bilinear_sample(image: np.ndarray, x, y) -> np.ndarray:
    """
    Bilinearly sample an (h, w, c) image at pixel coordinates.

    Returns:
        (..., c) interpolated values
    """
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape[:2]
    flat = image.reshape(height * width, -1)
    indices, weights = bilinear_taps(x, y, width, height)
    return np.sum(flat[indices] * weights[..., None], axis=-2)
