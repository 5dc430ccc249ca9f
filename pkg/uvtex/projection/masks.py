"""
Mask-pattern libraries from randomized head poses.

Each mask is the visibility of the UV layout under a camera orbiting the
mesh center by a yaw and pitch drawn uniformly from the given ranges.
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..common.errors import ConfigError
from ..common.imageio import save_gray
from ..geometry.camera import Camera, camera_from_pose
from ..geometry.mesh import Mesh
from .coverage import build_uv_coverage
from .project import DEFAULT_DEPTH_BIAS, compute_visibility

PathLike = Union[str, Path]


def _check_range(name: str, bounds: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(bounds[0]), float(bounds[1])
    if hi < lo:
        raise ConfigError(f"{name} range [{lo}, {hi}] is inverted")
    return lo, hi


def synth_masks(
    mesh: Mesh,
    size: int,
    n: int,
    yaw_range: tuple[float, float] = (-60.0, 60.0),
    pitch_range: tuple[float, float] = (-20.0, 20.0),
    seed: int = 0,
    image_size: int = 256,
    depth_bias: float = DEFAULT_DEPTH_BIAS,
    camera: Optional[Camera] = None,
) -> list[np.ndarray]:
    """
    Generate n visibility masks.

    Args:
        mesh: Head mesh with UVs
        size: Texture side S
        n: Number of masks
        yaw_range, pitch_range: Pose ranges in degrees (lo == hi is allowed)
        seed: Pose sampling seed
        image_size: Frame side of the default frontal camera
        depth_bias: As in project_texture
        camera: Base view; defaults to the canonical frontal camera

    Returns:
        n float arrays of shape (S, S), 1 = visible
    """
    if n < 1:
        raise ConfigError("mask count must be >= 1")
    yaw_lo, yaw_hi = _check_range("yaw", yaw_range)
    pitch_lo, pitch_hi = _check_range("pitch", pitch_range)

    base = camera or Camera.frontal(mesh.vertices, image_size, image_size)
    center = 0.5 * (mesh.vertices.min(axis=0) + mesh.vertices.max(axis=0))
    coverage = build_uv_coverage(mesh, size)
    rng = np.random.default_rng(seed)

    masks = []
    for _ in range(n):
        yaw = rng.uniform(yaw_lo, yaw_hi)
        pitch = rng.uniform(pitch_lo, pitch_hi)
        view = camera_from_pose(base, center, yaw, pitch)
        vis = compute_visibility(mesh, view, size, depth_bias, coverage)
        masks.append(vis.mask.astype(np.float64))
    return masks


def save_masks(masks: list[np.ndarray], directory: PathLike) -> list[Path]:
    """Write masks as mask_0000.png, mask_0001.png, ..."""
    directory = Path(directory)
    paths = []
    for i, mask in enumerate(masks):
        path = directory / f"mask_{i:04d}.png"
        save_gray(path, mask, bit_depth=8)
        paths.append(path)
    return paths
