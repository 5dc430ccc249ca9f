"""
Inpaint Module

Completes a partial texture (T_proj) into T_sd with built-in Poisson
baselines or an external tool.
"""

from .inpaint import InpainterKind, InpainterSpec, inpaint, mirror_columns

__all__ = [
    "InpainterKind",
    "InpainterSpec",
    "inpaint",
    "mirror_columns",
]
