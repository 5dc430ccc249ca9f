"""
Texture completion: the T_proj -> T_sd contract.

Three backends share one contract. The output is valid on the whole chart
coverage and the valid input texels come back unchanged.

- harmonic: Poisson fill with zero guidance
- symmetric: mirror valid texels across the vertical line u = axis, then
  harmonic for what the mirror could not reach
- external: any tool speaking the temp-dir PNG protocol; visible texels are
  re-composited afterwards
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..common.errors import ConfigError, ExternalProcessError, InpaintError
from ..common.external import ExternalTool
from ..common.log import get_logger
from ..fusion.poisson import DEFAULT_TOLERANCE, GuidanceField, PoissonProblem, poisson_solve
from ..projection.texture import TextureMap

logger = get_logger(__name__)


class InpainterKind(Enum):
    HARMONIC = "harmonic"
    SYMMETRIC = "symmetric"
    EXTERNAL = "external"


@dataclass
class InpainterSpec:
    """Which inpainter to run and its settings."""

    kind: InpainterKind = InpainterKind.HARMONIC
    axis: float = 0.5
    command: str = ""
    timeout: float = 300.0
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE

    def validate(self) -> None:
        if not 0.0 < self.axis < 1.0:
            raise ConfigError(f"inpainter.axis must be in (0, 1), got {self.axis}")
        if self.timeout <= 0:
            raise ConfigError("inpainter.timeout must be positive")
        if self.kind == InpainterKind.EXTERNAL and not self.command.strip():
            raise ConfigError("inpainter.command is required for the external inpainter")


def _harmonic_fill(
    rgb: np.ndarray, known: np.ndarray, coverage: np.ndarray, tolerance: float
) -> np.ndarray:
    if not known.any():
        raise InpaintError("no boundary data", phase="harmonic")
    size = rgb.shape[0]
    problem = PoissonProblem(
        region=coverage & ~known,
        boundary=rgb,
        guidance=GuidanceField.zeros(size, size, 3),
        domain=coverage | known,
        tolerance=tolerance,
        island_fill=rgb[known].mean(axis=0),
    )
    result = poisson_solve(problem)
    out = rgb.copy()
    fill = problem.region
    out[fill] = result.values[fill]
    return out


def mirror_columns(size: int, axis: float) -> np.ndarray:
    """Source column for each column under u -> 2 * axis - u; -1 when outside."""
    u = (np.arange(size) + 0.5) / size
    mirrored = np.rint((2.0 * axis - u) * size - 0.5).astype(np.int64)
    return np.where((mirrored >= 0) & (mirrored < size), mirrored, -1)


def _symmetric_fill(
    rgb: np.ndarray, known: np.ndarray, coverage: np.ndarray, axis: float, tolerance: float
) -> np.ndarray:
    if not known.any():
        raise InpaintError("no boundary data", phase="symmetric")
    size = rgb.shape[0]
    source = mirror_columns(size, axis)
    cols = np.broadcast_to(source[None, :], (size, size))
    has_source = cols >= 0
    safe = np.where(has_source, cols, 0)
    rows = np.broadcast_to(np.arange(size)[:, None], (size, size))

    take = coverage & ~known & has_source & known[rows, safe]
    out = rgb.copy()
    out[take] = rgb[rows[take], safe[take]]
    filled = known | take
    logger.debug(f"[inpaint] mirrored {int(take.sum())} texels across u={axis:g}")
    return _harmonic_fill(out, filled, coverage, tolerance)


def inpaint(
    partial: TextureMap,
    spec: Optional[InpainterSpec] = None,
    coverage: Optional[np.ndarray] = None,
) -> TextureMap:
    """
    Complete a partial texture into T_sd.

    Args:
        partial: Texture with validity mask
        spec: Backend and settings (harmonic when None)
        coverage: (S, S) chart coverage to complete; defaults to every texel

    Returns:
        Texture valid on coverage (and on every input-valid texel)

    Raises:
        InpaintError: no valid input for the Poisson backends, or an
            external failure naming its phase
    """
    spec = spec or InpainterSpec()
    spec.validate()
    size = partial.size
    coverage = np.ones((size, size), dtype=bool) if coverage is None else np.asarray(coverage, bool)
    known = partial.valid
    rgb = np.where(known[:, :, None], partial.rgb, 0.0)

    if spec.kind == InpainterKind.HARMONIC:
        out = _harmonic_fill(rgb, known, coverage, spec.tolerance)
    elif spec.kind == InpainterKind.SYMMETRIC:
        out = _symmetric_fill(rgb, known, coverage, spec.axis, spec.tolerance)
    else:
        tool = ExternalTool(command=spec.command, timeout=spec.timeout, seed=spec.seed)
        try:
            result = tool.run(rgb, partial.mask)
        except ExternalProcessError as e:
            raise InpaintError(e.detail, phase=e.phase)
        out = np.where(known[:, :, None], partial.rgb, result)

    out = np.where(known[:, :, None], partial.rgb, out)
    return TextureMap(rgb=out, mask=(coverage | known).astype(np.float64))
