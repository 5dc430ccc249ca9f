"""
Compound render loss.

    L = l1 * pixel(I_M - I) + perc * feature(phi(I_M) - phi(I)) + reg * R(w - w_init)

Pixel and feature terms are evaluated on the foreground only and divided by
the foreground pixel count. Each is a sum of squares by default ("l2sq") or
of absolute values ("l1"). R is the smoothed norm sqrt(|d|^2 + eps^2)
("l2") or the squared norm ("l2sq").
"""

from dataclasses import dataclass

import numpy as np

from ..common.errors import ConfigError, OptimizationError
from .features import feature_masks, features, features_vjp

PIXEL_NORMS = ("l2sq", "l1")
REG_NORMS = ("l2", "l2sq")


@dataclass
class LossWeights:
    l1: float = 1.0
    perc: float = 0.1
    reg: float = 0.05
    pixel_norm: str = "l2sq"
    reg_norm: str = "l2"
    epsilon: float = 1e-8

    def validate(self) -> None:
        if min(self.l1, self.perc, self.reg) < 0:
            raise ConfigError("loss weights must be non-negative")
        if max(self.l1, self.perc, self.reg) <= 0:
            raise ConfigError("at least one loss weight must be positive")
        if self.pixel_norm not in PIXEL_NORMS:
            raise ConfigError(f"loss.pixel_norm must be one of {PIXEL_NORMS}")
        if self.reg_norm not in REG_NORMS:
            raise ConfigError(f"loss.reg_norm must be one of {REG_NORMS}")
        if self.epsilon <= 0:
            raise ConfigError("loss.epsilon must be positive")


@dataclass
class LossTerms:
    """Weighted loss components; total is their sum."""

    total: float
    l1: float
    perc: float
    reg: float


def _norm_and_grad(residual: np.ndarray, norm: str) -> tuple[float, np.ndarray]:
    if norm == "l1":
        return float(np.sum(np.abs(residual))), np.sign(residual)
    return float(np.sum(residual * residual)), 2.0 * residual


def total_loss(
    rendered: np.ndarray,
    mask: np.ndarray,
    image: np.ndarray,
    w: np.ndarray,
    w_init: np.ndarray,
    weights: LossWeights,
) -> tuple[LossTerms, np.ndarray, np.ndarray]:
    """
    Evaluate the loss and its analytic gradients.

    Args:
        rendered: (H, W, 3) I_M
        mask: (H, W) foreground
        image: (H, W, 3) target I
        w, w_init: Current and anchor latent
        weights: Term weights and norms

    Returns:
        (terms, dL/dI_M (H, W, 3), dL/dw from the regularizer)

    Raises:
        OptimizationError: empty foreground
    """
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise OptimizationError("empty foreground mask")
    m3 = mask[:, :, None]
    rendered = np.where(m3, rendered, 0.0)
    target = np.where(m3, image, 0.0)
    grad_image = np.zeros_like(rendered)

    pixel_value, pixel_grad = _norm_and_grad(rendered - target, weights.pixel_norm)
    pixel_loss = weights.l1 * pixel_value / count
    grad_image += weights.l1 * pixel_grad / count

    perc_loss = 0.0
    if weights.perc > 0:
        fmasks = feature_masks(mask)
        residual = [
            np.where(fm, a - b, 0.0)
            for a, b, fm in zip(features(rendered), features(target), fmasks)
        ]
        total, grads = 0.0, []
        for r, fm in zip(residual, fmasks):
            value, grad = _norm_and_grad(r, weights.pixel_norm)
            total += value
            grads.append(np.where(fm, grad, 0.0))
        perc_loss = weights.perc * total / count
        back = features_vjp(grads, mask.shape)
        grad_image += weights.perc * np.where(m3, back, 0.0) / count

    delta = np.asarray(w, dtype=np.float64) - np.asarray(w_init, dtype=np.float64)
    if weights.reg_norm == "l2sq":
        reg_value = float(delta @ delta)
        reg_grad = 2.0 * delta
    else:
        reg_value = float(np.sqrt(delta @ delta + weights.epsilon**2))
        reg_grad = delta / reg_value
    reg_loss = weights.reg * reg_value

    terms = LossTerms(
        total=pixel_loss + perc_loss + reg_loss, l1=pixel_loss, perc=perc_loss, reg=reg_loss
    )
    return terms, grad_image, weights.reg * reg_grad
