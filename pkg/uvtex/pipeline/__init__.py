"""
Pipeline Module

Configuration tree, ablation registry and the stage-by-stage runner.
"""

from .config import (
    ABLATIONS,
    ALL_ABLATIONS,
    SCHEMA_VERSION,
    AblationSetting,
    CameraConfig,
    CameraMode,
    GeneratorConfig,
    LatentKind,
    PathsConfig,
    PipelineConfig,
    SeedConfig,
    StageToggles,
    TextureConfig,
    apply_ablation,
    get_ablation,
    load_config,
    save_config,
)
from .runner import LOCK_NAME, STAGES, PipelineResult, PipelineRunner, run_pipeline

__all__ = [
    # Config
    "ABLATIONS",
    "ALL_ABLATIONS",
    "SCHEMA_VERSION",
    "AblationSetting",
    "CameraConfig",
    "CameraMode",
    "GeneratorConfig",
    "LatentKind",
    "PathsConfig",
    "PipelineConfig",
    "SeedConfig",
    "StageToggles",
    "TextureConfig",
    "apply_ablation",
    "get_ablation",
    "load_config",
    "save_config",
    # Runner
    "LOCK_NAME",
    "STAGES",
    "PipelineResult",
    "PipelineRunner",
    "run_pipeline",
]
