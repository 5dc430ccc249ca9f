"""
Optimize Module

Differentiable UV rendering, the compound render loss, and the two latent
optimization phases (inversion toward T_init, render-based correction).
"""

from .adam import Adam
from .features import feature_masks, features, features_vjp
from .invert import (
    OptimSchedule,
    TraceRow,
    correct_latent,
    correction_objective,
    invert_latent,
    masked_l1,
    read_trace_csv,
    write_trace_csv,
)
from .latent import DiffusionLatentSpace, GeneratorLatentSpace, LatentSpace
from .loss import LossTerms, LossWeights, total_loss
from .render import RenderMap, build_render_map, render, render_flat, render_vjp

__all__ = [
    "Adam",
    "DiffusionLatentSpace",
    "GeneratorLatentSpace",
    "LatentSpace",
    "LossTerms",
    "LossWeights",
    "OptimSchedule",
    "RenderMap",
    "TraceRow",
    "build_render_map",
    "correct_latent",
    "correction_objective",
    "feature_masks",
    "features",
    "features_vjp",
    "invert_latent",
    "masked_l1",
    "read_trace_csv",
    "render",
    "render_flat",
    "render_vjp",
    "total_loss",
    "write_trace_csv",
]
