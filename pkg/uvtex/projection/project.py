"""
Projection of the input image onto the mesh's UV layout.

Every covered texel is lifted to its surface point, projected into the
image and kept when it lies inside the frame and passes the z-buffer test

    depth(texel) <= depth(winner, exact point) + depth_bias * (scene depth range)

where `winner` is the triangle the z-buffer holds for the pixel the texel
lands in, and its depth is interpolated at the texel's sub-pixel position
rather than read at the pixel center. A texel whose winner is its own
triangle or shares a vertex with it is never self-occluded.

Kept texels take the bilinearly sampled image color; all others get color 0
and mask 0.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from ..common.errors import GeometryError
from ..common.log import get_logger
from ..geometry.camera import Camera, project_points
from ..geometry.mesh import Mesh
from ..geometry.raster import NO_TRIANGLE, bilinear_sample, rasterize_depth
from .coverage import UvCoverage, build_uv_coverage
from .texture import TextureMap

logger = get_logger(__name__)

DEFAULT_DEPTH_BIAS = 1e-3
ERODE_TEXELS = 2


@dataclass
class Visibility:
    """
    Per-texel visibility of one view.

    Attributes:
        mask: (S, S) boolean, True where the texel is seen
        pixels: (S, S, 2) projected pixel coordinates (NaN where undefined)
        depth: (S, S) camera-space depth of the texel point (inf where undefined)
    """

    mask: np.ndarray
    pixels: np.ndarray
    depth: np.ndarray


def scene_depth_range(mesh: Mesh, camera: Camera) -> float:
    """Spread of camera-space depth over the vertices in front of the camera."""
    _, depth, in_front = project_points(camera, mesh.vertices)
    if not in_front.any():
        return 0.0
    return float(depth[in_front].max() - depth[in_front].min())


def _depth_at(
    mesh: Mesh, camera: Camera, triangles: np.ndarray, uv: np.ndarray
) -> np.ndarray:
    """
    Perspective-correct depth of each triangle's plane at pixel position uv.

    Points slightly outside a triangle extrapolate its plane. NaN where the
    triangle is degenerate on screen or the extrapolation leaves the camera.
    """
    vertex_uv, vertex_z, _ = project_points(camera, mesh.vertices)
    corners = vertex_uv[mesh.triangles[triangles]]
    z = vertex_z[mesh.triangles[triangles]]
    (ax, ay), (bx, by), (cx, cy) = (corners[:, i].T for i in range(3))
    px, py = uv[:, 0], uv[:, 1]
    d = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
    safe = np.where(d != 0.0, d, 1.0)
    l0 = ((by - cy) * (px - cx) + (cx - bx) * (py - cy)) / safe
    l1 = ((cy - ay) * (px - cx) + (ax - cx) * (py - cy)) / safe
    l2 = 1.0 - l0 - l1
    inv = l0 / z[:, 0] + l1 / z[:, 1] + l2 / z[:, 2]
    ok = (d != 0.0) & (inv > 0.0)
    return np.where(ok, 1.0 / np.where(ok, inv, 1.0), np.nan)


def compute_visibility(
    mesh: Mesh,
    camera: Camera,
    size: int,
    depth_bias: float = DEFAULT_DEPTH_BIAS,
    coverage: Optional[UvCoverage] = None,
    erode: bool = False,
) -> Visibility:
    """
    Decide which texels the camera sees.

    Args:
        mesh: Surface carrying the UV layout
        camera: View to test against; its width/height is the image frame
        size: Texture side S
        depth_bias: Fraction of the scene depth range tolerated by the z-test
        coverage: Precomputed UV coverage for (mesh, size)
        erode: Shrink the visible region by two texels
    """
    if depth_bias < 0:
        raise GeometryError("depth_bias must be non-negative")
    coverage = coverage or build_uv_coverage(mesh, size)
    width, height = camera.width, camera.height
    zbuffer = rasterize_depth(mesh, camera, width, height)

    covered = coverage.covered
    points = coverage.surface_points(mesh)
    uv, depth, in_front = project_points(camera, points)

    inside = (
        in_front
        & (uv[:, 0] >= 0.0)
        & (uv[:, 0] < width)
        & (uv[:, 1] >= 0.0)
        & (uv[:, 1] < height)
    )
    px = np.clip(np.floor(np.nan_to_num(uv[:, 0])).astype(np.int64), 0, width - 1)
    py = np.clip(np.floor(np.nan_to_num(uv[:, 1])).astype(np.int64), 0, height - 1)
    tolerance = depth_bias * scene_depth_range(mesh, camera)

    winner = zbuffer.triangle[py, px]
    hit = inside & (winner != NO_TRIANGLE)
    own = mesh.triangles[coverage.triangle[covered]]
    rival = mesh.triangles[np.maximum(winner, 0)]
    neighbor = hit & (own[:, :, None] == rival[:, None, :]).any(axis=(1, 2))

    surface = np.array(zbuffer.depth[py, px])
    if hit.any():
        exact = _depth_at(mesh, camera, winner[hit], uv[hit])
        surface[hit] = np.where(np.isnan(exact), surface[hit], exact)
    unoccluded = neighbor | ~hit | (depth <= surface + tolerance)
    seen = inside & unoccluded

    mask = np.zeros((size, size), dtype=bool)
    mask[covered] = seen
    if erode:
        mask = ndimage.binary_erosion(mask, iterations=ERODE_TEXELS)

    pixels = np.full((size, size, 2), np.nan)
    pixels[covered] = uv
    texel_depth = np.full((size, size), np.inf)
    texel_depth[covered] = np.where(in_front, depth, np.inf)

    logger.debug(
        f"[project] {int(mask.sum())}/{int(covered.sum())} covered texels visible "
        f"in {width}x{height} view"
    )
    return Visibility(mask=mask, pixels=pixels, depth=texel_depth)


def project_texture(
    mesh: Mesh,
    camera: Camera,
    image: np.ndarray,
    size: int,
    depth_bias: float = DEFAULT_DEPTH_BIAS,
    coverage: Optional[UvCoverage] = None,
    erode: bool = False,
) -> TextureMap:
    """
    Build the partial texture T_proj from one posed image.

    The camera frame must match the image dimensions.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape[:2] != (camera.height, camera.width):
        raise GeometryError(
            f"image is {image.shape[1]}x{image.shape[0]} but camera frame is "
            f"{camera.width}x{camera.height}"
        )
    vis = compute_visibility(mesh, camera, size, depth_bias, coverage, erode)
    rgb = np.zeros((size, size, 3))
    if vis.mask.any():
        xy = vis.pixels[vis.mask]
        rgb[vis.mask] = bilinear_sample(image, xy[:, 0], xy[:, 1])
    return TextureMap(rgb=rgb, mask=vis.mask.astype(np.float64))
