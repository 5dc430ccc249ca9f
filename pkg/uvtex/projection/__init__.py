"""
Projection Module

Partial texture T_proj and its visibility mask from a posed image, plus
randomized-pose mask libraries.
"""

from .coverage import UvCoverage, build_uv_coverage
from .masks import save_masks, synth_masks
from .project import (
    DEFAULT_DEPTH_BIAS,
    Visibility,
    compute_visibility,
    project_texture,
    scene_depth_range,
)
from .texture import TextureMap, load_texture, save_texture, texture_paths

__all__ = [
    # Texture
    "TextureMap",
    "load_texture",
    "save_texture",
    "texture_paths",
    # Coverage
    "UvCoverage",
    "build_uv_coverage",
    # Projection
    "DEFAULT_DEPTH_BIAS",
    "Visibility",
    "compute_visibility",
    "project_texture",
    "scene_depth_range",
    # Masks
    "save_masks",
    "synth_masks",
]
