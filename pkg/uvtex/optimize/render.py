"""
Differentiable UV rendering.

A RenderMap freezes, for one (mesh, camera, frame, texture size), which
triangle each pixel sees and where that pixel lands in UV space. Rendering
is then a fixed sparse linear map from texels to pixels: each covered pixel
is a bilinear blend of four texels. render_vjp applies the transpose.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..common.errors import GeometryError
from ..geometry.camera import Camera, project_points
from ..geometry.mesh import Mesh
from ..geometry.raster import NO_TRIANGLE, bilinear_taps, perspective_weights, rasterize_depth
from ..projection.texture import TextureMap


@dataclass
class RenderMap:
    """
    Attributes:
        triangle: (H, W) visible triangle per pixel or NO_TRIANGLE
        uv: (H, W, 2) interpolated UV, NaN on background
        mask: (H, W) foreground
        matrix: (H*W, S*S) sparse bilinear weights
        size: Texture side S
    """

    triangle: np.ndarray
    uv: np.ndarray
    mask: np.ndarray
    matrix: sp.csr_matrix
    size: int

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]


def build_render_map(mesh: Mesh, camera: Camera, width: int, height: int, size: int) -> RenderMap:
    """Rasterize once and freeze per-pixel UVs and bilinear texel weights."""
    if size <= 0:
        raise GeometryError(f"texture size must be positive, got {size}")
    buffer = rasterize_depth(mesh, camera, width, height)
    mask = buffer.triangle != NO_TRIANGLE
    triangle = buffer.triangle

    uv = np.full((height, width, 2), np.nan)
    ys, xs = np.nonzero(mask)
    if len(ys):
        _, depth, _ = project_points(camera, mesh.vertices)
        tri = triangle[ys, xs]
        weights = perspective_weights(buffer.bary[ys, xs], depth[mesh.triangles[tri]])
        uv[ys, xs] = np.einsum("kj,kjd->kd", weights, mesh.uv_corners[tri])

    rows = ys * width + xs
    pix_uv = uv[ys, xs]
    taps, tap_weights = bilinear_taps(pix_uv[:, 0] * size, pix_uv[:, 1] * size, size, size)
    matrix = sp.csr_matrix(
        (tap_weights.reshape(-1), (np.repeat(rows, 4), taps.reshape(-1))),
        shape=(height * width, size * size),
    )
    return RenderMap(triangle=triangle, uv=uv, mask=mask, matrix=matrix, size=size)


def render_flat(render_map: RenderMap, flat: np.ndarray) -> np.ndarray:
    """Render a flat (S*S*3,) texture vector to an (H, W, 3) image."""
    texels = np.asarray(flat, dtype=np.float64).reshape(render_map.size * render_map.size, 3)
    return (render_map.matrix @ texels).reshape(render_map.height, render_map.width, 3)


def render(render_map: RenderMap, texture) -> tuple[np.ndarray, np.ndarray]:
    """
    Render a texture through the frozen map.

    Returns:
        (image (H, W, 3), foreground mask (H, W)); background pixels are 0
    """
    rgb = texture.rgb if isinstance(texture, TextureMap) else texture
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape != (render_map.size, render_map.size, 3):
        raise GeometryError(f"texture shape {rgb.shape} does not match render map S={render_map.size}")
    return render_flat(render_map, rgb), render_map.mask.copy()


def render_vjp(render_map: RenderMap, cotangent: np.ndarray) -> np.ndarray:
    """Scatter an (H, W, 3) image cotangent back onto the (S, S, 3) texel grid."""
    cot = np.asarray(cotangent, dtype=np.float64).reshape(render_map.height * render_map.width, 3)
    return (render_map.matrix.T @ cot).reshape(render_map.size, render_map.size, 3)
