"""
Fusion Module

Poisson machinery: the masked sparse solver and the fusion of T_proj into
T_sd that yields T_init.
"""

from .fuse import fuse
from .poisson import (
    DEFAULT_TOLERANCE,
    GuidanceField,
    PoissonProblem,
    PoissonResult,
    find_islands,
    poisson_solve,
)

__all__ = [
    "DEFAULT_TOLERANCE",
    "GuidanceField",
    "PoissonProblem",
    "PoissonResult",
    "find_islands",
    "fuse",
    "poisson_solve",
]
