"""
Registration Module

Non-rigid ICP that deforms the template mesh onto a target surface.
"""

from .closest import SurfaceIndex, closest_point_on_triangles, closest_surface_point
from .nicp import (
    NicpIteration,
    NicpParams,
    load_landmarks,
    nicp_register,
    rigid_align,
    similarity_align,
    umeyama,
)

__all__ = [
    "SurfaceIndex",
    "closest_point_on_triangles",
    "closest_surface_point",
    "NicpIteration",
    "NicpParams",
    "load_landmarks",
    "nicp_register",
    "rigid_align",
    "similarity_align",
    "umeyama",
]
