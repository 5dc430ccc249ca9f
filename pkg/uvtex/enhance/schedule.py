"""
Linear DDPM noise schedule.

Timesteps run 1..T. alphas_bar[0] is 1 so that t = 0 means "no noise".
"""

from dataclasses import dataclass

import numpy as np

from ..common.errors import ConfigError

DEFAULT_STEPS = 1000
DEFAULT_BETA_MIN = 1e-4
DEFAULT_BETA_MAX = 0.02


@dataclass(frozen=True)
class DiffusionSchedule:
    """
    Attributes:
        betas: (T,) variance of step t at index t - 1
        alphas_bar: (T + 1,) cumulative products, alphas_bar[0] = 1
    """

    betas: np.ndarray
    alphas_bar: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.betas)

    @property
    def alphas(self) -> np.ndarray:
        return 1.0 - self.betas

    def alpha_bar(self, t: int) -> float:
        if not 0 <= t <= self.steps:
            raise ConfigError(f"timestep {t} outside [0, {self.steps}]")
        return float(self.alphas_bar[t])


def make_schedule(
    steps: int = DEFAULT_STEPS,
    beta_min: float = DEFAULT_BETA_MIN,
    beta_max: float = DEFAULT_BETA_MAX,
) -> DiffusionSchedule:
    """Betas linear from beta_min to beta_max over `steps` steps."""
    if steps < 1:
        raise ConfigError(f"schedule needs at least one step, got {steps}")
    if not 0.0 < beta_min <= beta_max < 1.0:
        raise ConfigError(
            f"schedule requires 0 < beta_min <= beta_max < 1, got {beta_min}, {beta_max}"
        )
    betas = np.linspace(beta_min, beta_max, steps, dtype=np.float64)
    alphas_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return DiffusionSchedule(betas=betas, alphas_bar=alphas_bar)


def timestep_for_strength(strength: float, steps: int) -> int:
    """round(strength * T) with halves rounded up, and never below 1."""
    if not 0.0 < strength <= 1.0:
        raise ConfigError(f"strength must be in (0, 1], got {strength}")
    return max(1, int(np.floor(strength * steps + 0.5)))


def forward_diffuse(
    x0: np.ndarray, t: int, eps: np.ndarray, schedule: DiffusionSchedule
) -> np.ndarray:
    """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x0.shape:
        raise ConfigError(f"noise shape {eps.shape} does not match {x0.shape}")
    abar = schedule.alpha_bar(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps
