"""
Generator Module

Synthetic texture corpus, the linear eigen-texture generator and its fixed
Z -> W mapper.
"""

from .corpus import (
    Region,
    StyleParams,
    iter_corpus,
    load_corpus,
    load_layout,
    parse_layout,
    region_mask,
    save_corpus,
    synth_corpus,
    synth_texture,
)
from .model import (
    GeneratorModel,
    fit_pca,
    gen_flat,
    gen_texture,
    gen_vjp,
    load_model,
    map_vjp,
    map_z_to_w,
    mapper_weights,
    project_texture_to_latent,
    save_model,
)

__all__ = [
    # Corpus
    "Region",
    "StyleParams",
    "iter_corpus",
    "load_corpus",
    "load_layout",
    "parse_layout",
    "region_mask",
    "save_corpus",
    "synth_corpus",
    "synth_texture",
    # Model
    "GeneratorModel",
    "fit_pca",
    "gen_flat",
    "gen_texture",
    "gen_vjp",
    "load_model",
    "map_vjp",
    "map_z_to_w",
    "mapper_weights",
    "project_texture_to_latent",
    "save_model",
]
