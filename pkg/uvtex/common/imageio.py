"""
PNG import/export.

Images are float arrays of shape (H, W, 3) in linear [0, 1] units; grayscale
masks are (H, W). Values are clamped to [0, 1] only here, on the way in and
out. 8-bit and 16-bit PNGs are both accepted on read.
"""

from pathlib import Path
from typing import Union

import cv2
import numpy as np

from .errors import UvtexError

PathLike = Union[str, Path]


def _scale_for(dtype: np.dtype) -> float:
    if dtype == np.uint8:
        return 255.0
    if dtype == np.uint16:
        return 65535.0
    raise UvtexError(f"unsupported PNG sample type {dtype}")


def quantize(values: np.ndarray, bit_depth: int) -> np.ndarray:
    if bit_depth == 8:
        scale, dtype = 255.0, np.uint8
    elif bit_depth == 16:
        scale, dtype = 65535.0, np.uint16
    else:
        raise UvtexError(f"bit depth must be 8 or 16, got {bit_depth}")
    clamped = np.clip(np.nan_to_num(values, nan=0.0), 0.0, 1.0)
    return np.floor(clamped * scale + 0.5).astype(dtype)


def load_image(path: PathLike) -> np.ndarray:
    """Read an RGB (or gray, broadcast to RGB) PNG as float64 in [0, 1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise UvtexError(f"cannot read image: {path}")
    scale = _scale_for(raw.dtype)
    if raw.ndim == 2:
        raw = np.repeat(raw[:, :, None], 3, axis=2)
    elif raw.shape[2] == 4:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGRA2RGB)
    else:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    return raw.astype(np.float64) / scale


def save_image(path: PathLike, image: np.ndarray, bit_depth: int = 8) -> None:
    """Write an (H, W, 3) float image as an RGB PNG."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise UvtexError(f"expected (H, W, 3) image, got shape {image.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    data = cv2.cvtColor(quantize(image, bit_depth), cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), data):
        raise UvtexError(f"cannot write image: {path}")


def load_gray(path: PathLike) -> np.ndarray:
    """Read a grayscale PNG as float64 in [0, 1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise UvtexError(f"cannot read image: {path}")
    scale = _scale_for(raw.dtype)
    if raw.ndim == 3:
        raw = raw[:, :, 0]
    return raw.astype(np.float64) / scale


def save_gray(path: PathLike, values: np.ndarray, bit_depth: int = 8) -> None:
    """Write an (H, W) float array as a grayscale PNG."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise UvtexError(f"expected (H, W) array, got shape {values.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), quantize(values, bit_depth)):
        raise UvtexError(f"cannot write image: {path}")
