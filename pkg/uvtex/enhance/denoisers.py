"""
x0-predicting denoisers for the reverse diffusion loop.

A denoiser is any callable (x_t, t) -> x0_hat on (S, S, 3) arrays.
"""

from typing import Callable, Optional

import numpy as np

from ..common.errors import DenoiserError, ExternalProcessError
from ..common.external import ExternalTool
from ..generator.model import GeneratorModel
from .schedule import DiffusionSchedule, make_schedule

Denoiser = Callable[[np.ndarray, int], np.ndarray]


def project_to_manifold(model: GeneratorModel, flat: np.ndarray) -> np.ndarray:
    """mu + B B^T (x - mu) on a flat texture vector."""
    centered = np.asarray(flat, dtype=np.float64).reshape(-1) - model.mean
    return model.mean + model.basis @ (model.basis.T @ centered)


def projection_denoiser(
    model: GeneratorModel, schedule: Optional[DiffusionSchedule] = None
) -> Denoiser:
    """
    Orthogonal projection of the rescaled sample onto the generator subspace.

        x0_hat = mu + P (x_t / sqrt(abar_t) - mu),  P = B B^T
    """
    schedule = schedule or make_schedule()
    shape = (model.size, model.size, 3)

    def denoise(x_t: np.ndarray, t: int) -> np.ndarray:
        scaled = np.asarray(x_t, dtype=np.float64) / np.sqrt(schedule.alpha_bar(t))
        return project_to_manifold(model, scaled).reshape(shape)

    return denoise


def external_denoiser(
    tool: ExternalTool,
    schedule: Optional[DiffusionSchedule] = None,
    mask: Optional[np.ndarray] = None,
) -> Denoiser:
    """
    Denoiser backed by an external tool.

    The tool receives x_t / sqrt(abar_t) clamped to [0, 1] as in.png, the
    validity mask, and the timestep as {t}. out.png is taken as x0_hat.
    """
    schedule = schedule or make_schedule()

    def denoise(x_t: np.ndarray, t: int) -> np.ndarray:
        scaled = np.clip(np.asarray(x_t) / np.sqrt(schedule.alpha_bar(t)), 0.0, 1.0)
        valid = np.ones(scaled.shape[:2]) if mask is None else mask
        try:
            return tool.run(scaled, valid, {"t": str(t)})
        except ExternalProcessError as e:
            raise DenoiserError(f"[{e.phase}] {e.detail}", step=t)

    return denoise
