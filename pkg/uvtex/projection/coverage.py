"""
UV chart rasterization.

Texel (row r, column c) of a side-S texture has its center at
((c + 0.5) / S, (r + 0.5) / S) in UV space. Each covered texel belongs to
exactly one triangle, chosen by the same coverage and lowest-index rule the
depth rasterizer uses.
"""

from dataclasses import dataclass

import numpy as np

from ..common.errors import GeometryError
from ..geometry.mesh import Mesh
from ..geometry.raster import NO_TRIANGLE, rasterize_triangles_2d


@dataclass(frozen=True)
class UvCoverage:
    """
    Attributes:
        triangle: (S, S) triangle index per texel or NO_TRIANGLE
        bary: (S, S, 3) barycentrics within that triangle's UV footprint
    """

    triangle: np.ndarray
    bary: np.ndarray

    @property
    def size(self) -> int:
        return self.triangle.shape[0]

    @property
    def covered(self) -> np.ndarray:
        return self.triangle != NO_TRIANGLE

    def surface_points(self, mesh: Mesh) -> np.ndarray:
        """(k, 3) model-space points of the covered texels, row-major order."""
        tri = self.triangle[self.covered]
        corners = mesh.vertices[mesh.triangles[tri]]
        return np.einsum("kj,kjd->kd", self.bary[self.covered], corners)


def build_uv_coverage(mesh: Mesh, size: int) -> UvCoverage:
    """Rasterize the mesh's UV triangles into a size x size texel grid."""
    if size <= 0:
        raise GeometryError(f"texture size must be positive, got {size}")
    buffer = rasterize_triangles_2d(mesh.uv_corners * size, size, size)
    return UvCoverage(triangle=buffer.triangle, bary=buffer.bary)
