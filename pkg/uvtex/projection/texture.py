"""
TextureMap: square RGB texel grid plus a per-texel validity mask.

On disk a texture is a PNG pair, `<name>.png` (RGB) and `<name>.mask.png`
(gray, 255 = valid).
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

import numpy as np

from ..common.errors import UvtexError
from ..common.imageio import load_gray, load_image, save_gray, save_image

PathLike = Union[str, Path]


@dataclass
class TextureMap:
    """
    Attributes:
        rgb: (S, S, 3) texel colors, unclamped in memory
        mask: (S, S) validity in [0, 1]; 1 = observed
    """

    rgb: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.rgb = np.asarray(self.rgb, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=np.float64)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3 or self.rgb.shape[0] != self.rgb.shape[1]:
            raise UvtexError(f"texture must be (S, S, 3), got {self.rgb.shape}")
        if self.mask.shape != self.rgb.shape[:2]:
            raise UvtexError(f"mask shape {self.mask.shape} does not match texture")

    @property
    def size(self) -> int:
        return self.rgb.shape[0]

    @property
    def valid(self) -> np.ndarray:
        """Boolean validity (mask > 0.5)."""
        return self.mask > 0.5

    @classmethod
    def full(cls, rgb: np.ndarray) -> "TextureMap":
        rgb = np.asarray(rgb, dtype=np.float64)
        return cls(rgb=rgb, mask=np.ones(rgb.shape[:2]))

    def with_rgb(self, rgb: np.ndarray) -> "TextureMap":
        return replace(self, rgb=np.array(rgb, dtype=np.float64), mask=self.mask.copy())

    def validate(self) -> None:
        if not np.all(np.isfinite(self.rgb)):
            raise UvtexError("texture has non-finite values")
        if self.mask.min() < 0.0 or self.mask.max() > 1.0:
            raise UvtexError("texture mask outside [0, 1]")


def texture_paths(path: PathLike) -> tuple[Path, Path]:
    """(`<name>.png`, `<name>.mask.png`) for a base path with or without suffix."""
    path = Path(path)
    if path.suffix == ".png":
        path = path.with_suffix("")
    return path.with_name(path.name + ".png"), path.with_name(path.name + ".mask.png")


def save_texture(texture: TextureMap, path: PathLike, bit_depth: int = 16) -> None:
    rgb_path, mask_path = texture_paths(path)
    save_image(rgb_path, texture.rgb, bit_depth=bit_depth)
    save_gray(mask_path, texture.mask, bit_depth=8)


def load_texture(path: PathLike) -> TextureMap:
    """Load a PNG pair; a missing mask file means fully valid."""
    rgb_path, mask_path = texture_paths(path)
    rgb = load_image(rgb_path)
    if rgb.shape[0] != rgb.shape[1]:
        raise UvtexError(f"texture {rgb_path} is not square")
    mask = load_gray(mask_path) if mask_path.exists() else np.ones(rgb.shape[:2])
    return TextureMap(rgb=rgb, mask=mask)
