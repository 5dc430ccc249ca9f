"""
SDEdit repainting in texel space.

The input texture is diffused forward to t* = round(strength * T) and then
denoised back to t = 0 with DDIM steps:

    x0_hat  = denoiser(x_t, t)
    eps_hat = (x_t - sqrt(abar_t) x0_hat) / sqrt(1 - abar_t)
    x_{t-1} = sqrt(abar_{t-1}) x0_hat
              + sqrt(1 - abar_{t-1} - sigma_t^2) eps_hat + sigma_t z

sigma_t is zero for eta = 0 (deterministic DDIM). The validity mask of the
input is returned unchanged.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage

from ..common.errors import ConfigError, DenoiserError
from ..common.external import ExternalTool
from ..common.log import get_logger
from ..generator.model import GeneratorModel
from ..projection.texture import TextureMap
from .denoisers import Denoiser, external_denoiser, projection_denoiser
from .schedule import (
    DEFAULT_BETA_MAX,
    DEFAULT_BETA_MIN,
    DEFAULT_STEPS,
    DiffusionSchedule,
    forward_diffuse,
    make_schedule,
    timestep_for_strength,
)

logger = get_logger(__name__)


class DenoiserKind(Enum):
    PROJECTION = "projection"
    EXTERNAL = "external"


@dataclass
class EnhanceSettings:
    """Enhancement stage settings."""

    strength: float = 0.3
    steps: int = DEFAULT_STEPS
    beta_min: float = DEFAULT_BETA_MIN
    beta_max: float = DEFAULT_BETA_MAX
    denoiser: DenoiserKind = DenoiserKind.PROJECTION
    command: str = ""
    timeout: float = 300.0
    eta: float = 0.0
    deterministic_noise: bool = False
    detail_transfer: bool = False
    detail_gamma: float = 0.5
    detail_sigma: float = 2.0

    def validate(self) -> None:
        if not 0.0 < self.strength <= 1.0:
            raise ConfigError(f"enhance.strength must be in (0, 1], got {self.strength}")
        make_schedule(self.steps, self.beta_min, self.beta_max)
        if self.eta < 0:
            raise ConfigError("enhance.eta must be non-negative")
        if self.timeout <= 0:
            raise ConfigError("enhance.timeout must be positive")
        if self.denoiser == DenoiserKind.EXTERNAL and not self.command.strip():
            raise ConfigError("enhance.command is required for the external denoiser")
        if self.detail_sigma <= 0:
            raise ConfigError("enhance.detail_sigma must be positive")

    def schedule(self) -> DiffusionSchedule:
        return make_schedule(self.steps, self.beta_min, self.beta_max)


def build_denoiser(
    settings: EnhanceSettings,
    model: Optional[GeneratorModel],
    schedule: DiffusionSchedule,
    seed: int = 0,
    mask: Optional[np.ndarray] = None,
) -> Denoiser:
    if settings.denoiser == DenoiserKind.EXTERNAL:
        tool = ExternalTool(command=settings.command, timeout=settings.timeout, seed=seed)
        return external_denoiser(tool, schedule, mask)
    if model is None:
        raise ConfigError("the projection denoiser needs a generator model")
    return projection_denoiser(model, schedule)


def ddim_step(
    x_t: np.ndarray,
    x0_hat: np.ndarray,
    t: int,
    schedule: DiffusionSchedule,
    eta: float = 0.0,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """One reverse step from t to t - 1 given the denoiser's x0 estimate."""
    abar_t = schedule.alpha_bar(t)
    abar_prev = schedule.alpha_bar(t - 1)
    eps_hat = (x_t - np.sqrt(abar_t) * x0_hat) / np.sqrt(1.0 - abar_t)
    sigma = 0.0
    if eta > 0:
        ratio = (1.0 - abar_prev) / (1.0 - abar_t)
        sigma = eta * np.sqrt(ratio) * np.sqrt(1.0 - abar_t / abar_prev)
    direction = np.sqrt(max(1.0 - abar_prev - sigma * sigma, 0.0))
    x_prev = np.sqrt(abar_prev) * x0_hat + direction * eps_hat
    if sigma > 0 and noise is not None:
        x_prev = x_prev + sigma * noise
    return x_prev


def sdedit(
    texture: TextureMap,
    strength: float,
    denoiser: Denoiser,
    schedule: Optional[DiffusionSchedule] = None,
    seed: int = 0,
    deterministic_noise: bool = False,
    eta: float = 0.0,
) -> TextureMap:
    """
    Noise a texture to t* and denoise it back.

    Raises:
        DenoiserError: the denoiser returned a wrong shape or non-finite
            values; `step` is the timestep
    """
    schedule = schedule or make_schedule()
    t_star = timestep_for_strength(strength, schedule.steps)
    rng = np.random.default_rng(seed)
    x0 = texture.rgb
    eps = np.zeros_like(x0) if deterministic_noise else rng.standard_normal(x0.shape)
    x = forward_diffuse(x0, t_star, eps, schedule)
    logger.info(f"[enhance] strength={strength:g} t*={t_star} eta={eta:g}")

    for t in range(t_star, 0, -1):
        x0_hat = np.asarray(denoiser(x, t), dtype=np.float64)
        if x0_hat.shape != x.shape:
            raise DenoiserError(
                f"denoiser returned shape {x0_hat.shape}, expected {x.shape}", step=t
            )
        if not np.all(np.isfinite(x0_hat)):
            raise DenoiserError("denoiser returned non-finite values", step=t)
        noise = rng.standard_normal(x.shape) if eta > 0 and t > 1 else None
        x = ddim_step(x, x0_hat, t, schedule, eta, noise)

    return texture.with_rgb(x)


def transfer_detail(
    texture: TextureMap,
    reference: TextureMap,
    visible: np.ndarray,
    gamma: float = 0.5,
    sigma: float = 2.0,
) -> TextureMap:
    """Add gamma * highpass(reference) on visible texels."""
    ref = reference.rgb
    highpass = ref - ndimage.gaussian_filter(ref, sigma=(sigma, sigma, 0), mode="nearest")
    out = texture.rgb + gamma * np.where(np.asarray(visible, bool)[:, :, None], highpass, 0.0)
    return texture.with_rgb(out)


def enhance_texture(
    texture: TextureMap,
    settings: EnhanceSettings,
    model: Optional[GeneratorModel] = None,
    seed: int = 0,
    reference: Optional[TextureMap] = None,
    visible: Optional[np.ndarray] = None,
) -> TextureMap:
    """Run sdedit with the configured denoiser, then optional detail transfer."""
    settings.validate()
    schedule = settings.schedule()
    denoiser = build_denoiser(settings, model, schedule, seed=seed, mask=texture.mask)
    out = sdedit(
        texture,
        settings.strength,
        denoiser,
        schedule,
        seed=seed,
        deterministic_noise=settings.deterministic_noise,
        eta=settings.eta,
    )
    if settings.detail_transfer:
        if reference is None or visible is None:
            raise ConfigError("detail transfer needs T_init and the visibility mask")
        out = transfer_detail(out, reference, visible, settings.detail_gamma, settings.detail_sigma)
    return out
