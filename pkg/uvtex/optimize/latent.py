"""
Search spaces for the correction loop.

A latent space decodes a parameter vector to a flat (S*S*3,) texture and
pulls texture cotangents back to the parameters. Both spaces here are
affine, so the pullback does not depend on the current point.
"""

from typing import Protocol

import numpy as np

from ..enhance.denoisers import project_to_manifold
from ..enhance.schedule import DiffusionSchedule, forward_diffuse
from ..generator.model import GeneratorModel, gen_flat, gen_vjp


class LatentSpace(Protocol):
    model: GeneratorModel

    @property
    def dim(self) -> int: ...

    def decode(self, x: np.ndarray) -> np.ndarray: ...

    def vjp(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray: ...


class GeneratorLatentSpace:
    """The generator's W space."""

    name = "generator"

    def __init__(self, model: GeneratorModel):
        self.model = model

    @property
    def dim(self) -> int:
        return self.model.d_w

    def decode(self, x: np.ndarray) -> np.ndarray:
        return gen_flat(self.model, x)

    def vjp(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        return gen_vjp(self.model, x, cotangent)


class DiffusionLatentSpace:
    """
    The injected-noise latent x_{t*} of the enhancement sampler.

    Decoding runs the deterministic DDIM chain with the projection denoiser.
    That chain returns its first estimate unchanged, so

        decode(x) = mu + P (x / sqrt(abar_t*) - mu)

    and the pullback is P g / sqrt(abar_t*).
    """

    name = "diffusion"

    def __init__(self, model: GeneratorModel, schedule: DiffusionSchedule, t_star: int):
        self.model = model
        self.schedule = schedule
        self.t_star = t_star
        self._scale = np.sqrt(schedule.alpha_bar(t_star))

    @property
    def dim(self) -> int:
        return self.model.n_values

    def encode(self, texture_flat: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """Forward-diffuse a flat texture to t*."""
        flat = np.asarray(texture_flat, dtype=np.float64).reshape(-1)
        return forward_diffuse(flat, self.t_star, np.asarray(eps).reshape(-1), self.schedule)

    def decode(self, x: np.ndarray) -> np.ndarray:
        return project_to_manifold(self.model, np.asarray(x, dtype=np.float64) / self._scale)

    def vjp(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        g = np.asarray(cotangent, dtype=np.float64).reshape(-1)
        return self.model.basis @ (self.model.basis.T @ g) / self._scale
