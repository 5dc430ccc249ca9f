"""
Pinhole camera model.

A point p in model space maps to camera space as (x', y', z') = R p + t and
to pixels as (fx x'/z' + cx, fy y'/z' + cy). There is no lens distortion.
Points with z' <= NEAR_PLANE are behind the camera.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..common.errors import GeometryError

NEAR_PLANE = 1e-9


@dataclass
class Camera:
    """Pinhole camera with image size in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    width: int = 256
    height: int = 256

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.width = int(self.width)
        self.height = int(self.height)

    def validate(self) -> None:
        """Raise GeometryError when the camera is not a proper pinhole."""
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("image dimensions must be positive")
        gram = self.rotation.T @ self.rotation
        if np.max(np.abs(gram - np.eye(3))) > 1e-6:
            raise GeometryError("rotation is not orthonormal")

    @property
    def center(self) -> np.ndarray:
        """Camera position in model space."""
        return -self.rotation.T @ self.translation

    def to_dict(self) -> dict:
        return {
            "fx": float(self.fx),
            "fy": float(self.fy),
            "cx": float(self.cx),
            "cy": float(self.cy),
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Camera":
        return cls(**data)

    @classmethod
    def frontal(
        cls,
        points: np.ndarray,
        width: int,
        height: int,
        fov_deg: float = 30.0,
        margin: float = 1.15,
    ) -> "Camera":
        """
        Canonical frontal camera framing a point set.

        Looks down -z at the bounding-box center with +y up in the image,
        far enough back that the box (scaled by `margin`) fits the shorter
        image side.
        """
        points = getattr(points, "vertices", points)
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        lo, hi = points.min(axis=0), points.max(axis=0)
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        tan_half = np.tan(np.radians(fov_deg) / 2.0)
        focal = 0.5 * min(width, height) / tan_half
        distance = half[2] + margin * max(half[0], half[1]) / tan_half
        rotation = np.diag([1.0, -1.0, -1.0])
        translation = np.array([-mid[0], mid[1], mid[2] + distance])
        return cls(
            fx=focal,
            fy=focal,
            cx=width / 2.0,
            cy=height / 2.0,
            rotation=rotation,
            translation=translation,
            width=width,
            height=height,
        )


def rotation_yaw_pitch(yaw_deg: float, pitch_deg: float) -> np.ndarray:
    """Rotation about +y by yaw, after rotation about +x by pitch."""
    yaw, pitch = np.radians(yaw_deg), np.radians(pitch_deg)
    cy_, sy_ = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    ry = np.array([[cy_, 0.0, sy_], [0.0, 1.0, 0.0], [-sy_, 0.0, cy_]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    return ry @ rx


def camera_from_pose(
    base: Camera, center: np.ndarray, yaw_deg: float, pitch_deg: float
) -> Camera:
    """
    The camera that sees the model rotated by (yaw, pitch) about `center`
    exactly as `base` sees the unrotated model.
    """
    center = np.asarray(center, dtype=np.float64).reshape(3)
    rot = rotation_yaw_pitch(yaw_deg, pitch_deg)
    rotation = base.rotation @ rot
    translation = base.rotation @ (center - rot @ center) + base.translation
    return Camera(
        fx=base.fx,
        fy=base.fy,
        cx=base.cx,
        cy=base.cy,
        rotation=rotation,
        translation=translation,
        width=base.width,
        height=base.height,
    )


def project_point(camera: Camera, p) -> Optional[tuple[float, float, float]]:
    """
    Project one model-space point.

    Returns:
        (u, v, depth) in pixels / model units, or None when the point is
        behind the camera
    """
    cam = camera.rotation @ np.asarray(p, dtype=np.float64).reshape(3) + camera.translation
    if cam[2] <= NEAR_PLANE:
        return None
    return (
        float(camera.fx * cam[0] / cam[2] + camera.cx),
        float(camera.fy * cam[1] / cam[2] + camera.cy),
        float(cam[2]),
    )


def project_points(camera: Camera, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorized project_point.

    Returns:
        uv (n, 2) pixel coordinates (NaN behind the camera), depth (n,),
        in_front (n,) boolean
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cam = points @ camera.rotation.T + camera.translation
    depth = cam[:, 2]
    in_front = depth > NEAR_PLANE
    safe = np.where(in_front, depth, 1.0)
    uv = np.stack(
        [camera.fx * cam[:, 0] / safe + camera.cx, camera.fy * cam[:, 1] / safe + camera.cy],
        axis=1,
    )
    uv[~in_front] = np.nan
    return uv, depth, in_front
