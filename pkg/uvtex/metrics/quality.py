"""
PSNR and SSIM on unit-range float images.

Both accept (H, W, 3) arrays or TextureMaps and an optional (H, W) mask.
"""

from typing import Optional

import cv2
import numpy as np

from ..common.errors import MetricError
from ..projection.texture import TextureMap

MAX_VALUE = 1.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
K1 = 0.01
K2 = 0.03


def _pixels(a) -> np.ndarray:
    data = a.rgb if isinstance(a, TextureMap) else a
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    return data


def _pair(a, b, mask: Optional[np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch: {a.shape} vs {b.shape}")
    if mask is None:
        mask = np.ones(a.shape[:2], dtype=bool)
    else:
        mask = np.asarray(mask) > 0.5
        if mask.shape != a.shape[:2]:
            raise MetricError(f"mask shape {mask.shape} does not match {a.shape[:2]}")
    if not mask.any():
        raise MetricError("empty mask")
    return a, b, mask


def psnr(a, b, mask: Optional[np.ndarray] = None) -> float:
    """10 log10(MAX^2 / MSE); +inf when the inputs agree on the mask."""
    a, b, mask = _pair(a, b, mask)
    mse = float(np.mean((a[mask] - b[mask]) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(MAX_VALUE * MAX_VALUE / mse))


def ssim_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel SSIM with an 11x11 Gaussian window."""
    c1 = (K1 * MAX_VALUE) ** 2
    c2 = (K2 * MAX_VALUE) ** 2
    window = (SSIM_WINDOW, SSIM_WINDOW)

    def blur(x: np.ndarray) -> np.ndarray:
        return cv2.GaussianBlur(x, window, SSIM_SIGMA, sigmaY=SSIM_SIGMA).reshape(x.shape)

    mu_a = blur(a)
    mu_b = blur(b)
    var_a = blur(a * a) - mu_a**2
    var_b = blur(b * b) - mu_b**2
    cov = blur(a * b) - mu_a * mu_b
    numerator = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    denominator = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return numerator / denominator


def ssim(a, b, mask: Optional[np.ndarray] = None) -> float:
    """
    Mean SSIM, per channel then averaged; with a mask, the mean runs over
    masked pixels only.

    Raises:
        MetricError: shape mismatch or a side shorter than the window
    """
    a, b, mask = _pair(a, b, mask)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise MetricError(f"SSIM needs both sides >= {SSIM_WINDOW}, got {a.shape[:2]}")
    scores = ssim_map(a, b)
    return float(np.mean(scores[mask]))
