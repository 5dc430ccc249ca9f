"""
Enhance Module

Linear DDPM schedule and SDEdit repainting of the optimized texture with a
pluggable x0-predicting denoiser.
"""

from .denoisers import Denoiser, external_denoiser, project_to_manifold, projection_denoiser
from .schedule import (
    DiffusionSchedule,
    forward_diffuse,
    make_schedule,
    timestep_for_strength,
)
from .sdedit import (
    DenoiserKind,
    EnhanceSettings,
    build_denoiser,
    ddim_step,
    enhance_texture,
    sdedit,
    transfer_detail,
)

__all__ = [
    "Denoiser",
    "DenoiserKind",
    "DiffusionSchedule",
    "EnhanceSettings",
    "build_denoiser",
    "ddim_step",
    "enhance_texture",
    "external_denoiser",
    "forward_diffuse",
    "make_schedule",
    "project_to_manifold",
    "projection_denoiser",
    "sdedit",
    "timestep_for_strength",
]
