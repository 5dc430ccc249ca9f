"""
Exception hierarchy for uvtex.

Every error raised on purpose by the package derives from UvtexError so the
CLI can map it to an exit code. ConfigError means the inputs were rejected
before any work started; everything else is a runtime failure.
"""

from typing import Optional


class UvtexError(Exception):
    """Base class for all uvtex errors."""


class ConfigError(UvtexError):
    """Configuration failed validation."""


class MeshError(UvtexError):
    """A mesh violates a structural invariant."""


class ObjParseError(MeshError):
    """An OBJ file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(UvtexError):
    """Invalid camera, buffer size or other geometric input."""


class RegistrationError(UvtexError):
    """Non-rigid registration failed."""

    def __init__(self, message: str, stiffness: Optional[float] = None):
        self.stiffness = stiffness
        if stiffness is not None:
            message = f"stiffness {stiffness:g}: {message}"
        super().__init__(message)


class SolverError(UvtexError):
    """An iterative linear solve did not converge."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (final relative residual {residual:.3e})")


class InpaintError(UvtexError):
    """Texture completion failed."""

    def __init__(self, message: str, phase: Optional[str] = None):
        self.phase = phase
        if phase is not None:
            message = f"[{phase}] {message}"
        super().__init__(message)


class GeneratorError(UvtexError):
    """Corpus synthesis or generator fitting failed."""


class OptimizationError(UvtexError):
    """Latent optimization produced a non-finite value."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class DenoiserError(UvtexError):
    """A denoiser returned an unusable estimate."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class MetricError(UvtexError):
    """Inputs to a quality metric are incompatible."""


class StageError(UvtexError):
    """A pipeline stage aborted."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class ExternalProcessError(UvtexError):
    """An external tool failed; `phase` says where."""

    def __init__(self, message: str, phase: str):
        self.phase = phase
        self.detail = message
        super().__init__(f"[{phase}] {message}")
