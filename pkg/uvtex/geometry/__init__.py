"""
Geometry Module

Mesh and camera primitives: OBJ I/O, pinhole projection, depth
rasterization and bilinear image sampling.
"""

from .camera import (
    NEAR_PLANE,
    Camera,
    camera_from_pose,
    project_point,
    project_points,
    rotation_yaw_pitch,
)
from .mesh import (
    Mesh,
    bbox_diagonal,
    face_normals,
    load_obj,
    mesh_edges,
    save_obj,
    uv_overlap_count,
    vertex_normals,
)
from .raster import (
    NO_TRIANGLE,
    DepthBuffer,
    barycentric_coordinates,
    bilinear_sample,
    bilinear_taps,
    coverage_counts,
    perspective_depth,
    perspective_weights,
    rasterize_depth,
    rasterize_triangles_2d,
)

__all__ = [
    # Mesh
    "Mesh",
    "bbox_diagonal",
    "face_normals",
    "load_obj",
    "mesh_edges",
    "save_obj",
    "uv_overlap_count",
    "vertex_normals",
    # Camera
    "NEAR_PLANE",
    "Camera",
    "camera_from_pose",
    "project_point",
    "project_points",
    "rotation_yaw_pitch",
    # Rasterization
    "NO_TRIANGLE",
    "DepthBuffer",
    "barycentric_coordinates",
    "bilinear_sample",
    "bilinear_taps",
    "coverage_counts",
    "perspective_depth",
    "perspective_weights",
    "rasterize_depth",
    "rasterize_triangles_2d",
]
