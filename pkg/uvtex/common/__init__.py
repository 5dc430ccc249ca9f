"""
Common utilities shared across pipeline stages.
"""

from .config import apply_overrides, from_dict, load_config_file, save_config_file, to_dict
from .errors import (
    ConfigError,
    DenoiserError,
    ExternalProcessError,
    GeneratorError,
    GeometryError,
    InpaintError,
    MeshError,
    MetricError,
    ObjParseError,
    OptimizationError,
    RegistrationError,
    SolverError,
    StageError,
    UvtexError,
)
from .external import TMPDIR_ENV, ExternalTool, build_command
from .imageio import load_gray, load_image, quantize, save_gray, save_image
from .log import configure_logging, get_logger

__all__ = [
    "apply_overrides",
    "from_dict",
    "load_config_file",
    "save_config_file",
    "to_dict",
    "ConfigError",
    "DenoiserError",
    "ExternalProcessError",
    "GeneratorError",
    "GeometryError",
    "InpaintError",
    "MeshError",
    "MetricError",
    "ObjParseError",
    "OptimizationError",
    "RegistrationError",
    "SolverError",
    "StageError",
    "UvtexError",
    "TMPDIR_ENV",
    "ExternalTool",
    "build_command",
    "load_gray",
    "load_image",
    "quantize",
    "save_gray",
    "save_image",
    "configure_logging",
    "get_logger",
]
