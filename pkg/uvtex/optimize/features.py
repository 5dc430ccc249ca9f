"""
Linear multi-scale image features and their adjoint.

phi(image) is a 3-level pyramid. Level 0 works on the RGB-mean intensity;
each further level blurs the previous intensity with a zero-padded Gaussian
(sigma = 1) and keeps every second row and column. Every level contributes
three channels: intensity, horizontal forward difference and vertical
forward difference (0 in the last column / row). All steps are linear, so
features_vjp is the exact transpose.
"""

import numpy as np
from scipy import ndimage

LEVELS = 3
BLUR_SIGMA = 1.0
BLUR_RADIUS = 4


def _gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


_KERNEL = _gaussian_kernel(BLUR_SIGMA, BLUR_RADIUS)


def _blur(x: np.ndarray) -> np.ndarray:
    # symmetric kernel + zero padding: the operator is its own transpose
    y = ndimage.correlate1d(x, _KERNEL, axis=0, mode="constant", cval=0.0)
    return ndimage.correlate1d(y, _KERNEL, axis=1, mode="constant", cval=0.0)


def _grad_x(x: np.ndarray) -> np.ndarray:
    g = np.zeros_like(x)
    g[:, :-1] = x[:, 1:] - x[:, :-1]
    return g


def _grad_x_t(g: np.ndarray) -> np.ndarray:
    x = np.zeros_like(g)
    x[:, 1:] += g[:, :-1]
    x[:, :-1] -= g[:, :-1]
    return x


def _grad_y(x: np.ndarray) -> np.ndarray:
    return _grad_x(x.T).T


def _grad_y_t(g: np.ndarray) -> np.ndarray:
    return _grad_x_t(g.T).T


def _downsample_t(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    up = np.zeros(shape)
    up[::2, ::2] = x
    return up


def features(image: np.ndarray, levels: int = LEVELS) -> list[np.ndarray]:
    """
    Feature stack of an (H, W, 3) image.

    Returns:
        One (3, h_k, w_k) array per level: intensity, d/dx, d/dy
    """
    intensity = np.asarray(image, dtype=np.float64).mean(axis=2)
    stack = []
    for level in range(levels):
        if level > 0:
            intensity = _blur(intensity)[::2, ::2]
        stack.append(np.stack([intensity, _grad_x(intensity), _grad_y(intensity)]))
    return stack


def features_vjp(cotangent: list[np.ndarray], shape: tuple[int, int]) -> np.ndarray:
    """
    Transpose of `features` for an image of (H, W) pixels.

    Returns:
        (H, W, 3) image cotangent
    """
    shapes = [shape]
    for _ in range(1, len(cotangent)):
        h, w = shapes[-1]
        shapes.append(((h + 1) // 2, (w + 1) // 2))

    carry = np.zeros(shapes[-1])
    for level in range(len(cotangent) - 1, -1, -1):
        c = cotangent[level]
        carry = carry + c[0] + _grad_x_t(c[1]) + _grad_y_t(c[2])
        if level > 0:
            carry = _blur(_downsample_t(carry, shapes[level - 1]))
    return np.repeat(carry[:, :, None] / 3.0, 3, axis=2)


def feature_masks(mask: np.ndarray, levels: int = LEVELS) -> list[np.ndarray]:
    """
    Per-level boolean masks matching `features`.

    Intensity uses the level's foreground; a difference channel needs both
    of its pixels in the foreground.
    """
    current = np.asarray(mask, dtype=bool)
    masks = []
    for level in range(levels):
        if level > 0:
            current = current[::2, ::2]
        gx = np.zeros_like(current)
        gx[:, :-1] = current[:, 1:] & current[:, :-1]
        gy = np.zeros_like(current)
        gy[:-1] = current[1:] & current[:-1]
        masks.append(np.stack([current, gx, gy]))
    return masks
