"""
Poisson fusion of the projected texture into the completed one.

The invisible chart texels are re-solved with T_sd's gradients as guidance
and T_proj's visible texels as boundary, so T_sd's structure is kept while
its tone is pulled onto T_proj's photometry.
"""

from typing import Optional

import numpy as np

from ..common.errors import UvtexError
from ..common.log import get_logger
from ..projection.texture import TextureMap
from .poisson import DEFAULT_TOLERANCE, GuidanceField, PoissonProblem, poisson_solve

logger = get_logger(__name__)


def fuse(
    t_proj: TextureMap,
    t_sd: TextureMap,
    coverage: Optional[np.ndarray] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    preconditioner: bool = False,
) -> TextureMap:
    """
    Fuse T_proj into T_sd, producing T_init.

    Args:
        t_proj: Partial texture; its valid texels are copied unchanged
        t_sd: Completed texture supplying the guidance gradients
        coverage: (S, S) chart coverage; defaults to t_sd's validity
        tolerance: CG relative residual target
        preconditioner: Jacobi-precondition the solve

    Returns:
        T_init, valid on the full chart coverage
    """
    if t_proj.size != t_sd.size:
        raise UvtexError(f"texture sizes differ: {t_proj.size} vs {t_sd.size}")
    coverage = t_sd.valid if coverage is None else np.asarray(coverage, dtype=bool)

    visible = t_proj.valid
    region = coverage & ~visible
    problem = PoissonProblem(
        region=region,
        boundary=t_proj.rgb,
        guidance=GuidanceField.from_source(t_sd.rgb),
        domain=coverage,
        tolerance=tolerance,
        preconditioner=preconditioner,
    )
    result = poisson_solve(problem)

    rgb = np.where(visible[:, :, None], t_proj.rgb, t_sd.rgb)
    solved = region & ~result.islands
    rgb[solved] = result.values[solved]
    if result.islands.any():
        logger.info(f"[fuse] {int(result.islands.sum())} texels kept from T_sd (no boundary)")
    return TextureMap(rgb=rgb, mask=(coverage | visible).astype(np.float64))
