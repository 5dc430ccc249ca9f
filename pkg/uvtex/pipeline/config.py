"""
Pipeline Configuration

The full configuration tree of a reconstruction run, and the ablation
settings that toggle its stages.

Paths given relative in a config file are resolved against the directory of
that file. Every random draw takes its seed from `seeds`.
"""

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from ..common.config import apply_overrides, from_dict, load_config_file, save_config_file, to_dict
from ..common.errors import ConfigError
from ..enhance.sdedit import EnhanceSettings
from ..generator.corpus import StyleParams
from ..geometry.camera import Camera
from ..inpaint.inpaint import InpainterSpec
from ..optimize.invert import OptimSchedule
from ..optimize.loss import LossWeights
from ..registration.nicp import NicpParams

PathLike = Union[str, Path]

SCHEMA_VERSION = 1
MIN_TEXTURE_SIZE = 64
MAX_TEXTURE_SIZE = 1024


class CameraMode(Enum):
    FRONTAL = "frontal"
    EXPLICIT = "explicit"


class LatentKind(Enum):
    GENERATOR = "generator"
    DIFFUSION = "diffusion"


@dataclass
class PathsConfig:
    template: Optional[str] = None
    target: Optional[str] = None
    image: Optional[str] = None
    output_dir: str = "out"
    landmarks: Optional[str] = None
    ground_truth: Optional[str] = None


@dataclass
class CameraConfig:
    """
    Frontal mode frames the registered mesh with `fov_deg` and `margin`;
    explicit mode uses the intrinsics and pose given here. The frame size
    always comes from the input image.
    """

    mode: CameraMode = CameraMode.FRONTAL
    fov_deg: float = 30.0
    margin: float = 1.15
    fx: Optional[float] = None
    fy: Optional[float] = None
    cx: Optional[float] = None
    cy: Optional[float] = None
    rotation: Optional[list] = None
    translation: Optional[list] = None

    def validate(self) -> None:
        if self.mode == CameraMode.EXPLICIT:
            missing = [
                name
                for name in ("fx", "fy", "cx", "cy", "rotation", "translation")
                if getattr(self, name) is None
            ]
            if missing:
                names = ", ".join(f"camera.{m}" for m in missing)
                raise ConfigError(f"explicit camera is missing {names}")
        elif not 0.0 < self.fov_deg < 180.0:
            raise ConfigError(f"camera.fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.margin <= 0:
            raise ConfigError("camera.margin must be positive")

    def to_camera(self, mesh, width: int, height: int) -> Camera:
        """The camera for a frame of the given size looking at `mesh`."""
        if self.mode == CameraMode.FRONTAL:
            camera = Camera.frontal(mesh, width, height, self.fov_deg, self.margin)
        else:
            camera = Camera(
                fx=self.fx,
                fy=self.fy,
                cx=self.cx,
                cy=self.cy,
                rotation=self.rotation,
                translation=self.translation,
                width=width,
                height=height,
            )
        camera.validate()
        return camera


@dataclass
class TextureConfig:
    size: int = 256
    depth_bias: float = 1e-3
    erode: bool = False
    preconditioner: bool = False


@dataclass
class GeneratorConfig:
    """
    `model` names a saved generator; without it the run fits one on a
    corpus, read from `corpus_dir` or synthesized from `layout`.
    """

    model: Optional[str] = None
    layout: Optional[str] = None
    corpus_dir: Optional[str] = None
    corpus_size: int = 2000
    d_w: int = 64
    d_z: Optional[int] = None
    style: StyleParams = field(default_factory=StyleParams)


@dataclass
class SeedConfig:
    corpus: int = 0
    model: int = 42
    noise: int = 0
    masks: int = 0


@dataclass
class StageToggles:
    register: bool = True
    use_init: bool = True
    latent_space: LatentKind = LatentKind.GENERATOR
    enhance: bool = True


@dataclass
class PipelineConfig:
    """Configuration of one reconstruction run."""

    schema_version: int = SCHEMA_VERSION
    paths: PathsConfig = field(default_factory=PathsConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    texture: TextureConfig = field(default_factory=TextureConfig)
    nicp: NicpParams = field(default_factory=NicpParams)
    inpainter: InpainterSpec = field(default_factory=InpainterSpec)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    schedule: OptimSchedule = field(default_factory=OptimSchedule)
    enhance: EnhanceSettings = field(default_factory=EnhanceSettings)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    stages: StageToggles = field(default_factory=StageToggles)

    @property
    def output_dir(self) -> Path:
        return Path(self.paths.output_dir)

    def validate(self, check_files: bool = True) -> None:
        """
        Raises:
            ConfigError: the first problem found
        """
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version {self.schema_version} is not supported (expected {SCHEMA_VERSION})"
            )
        size = self.texture.size
        if not (MIN_TEXTURE_SIZE <= size <= MAX_TEXTURE_SIZE and size & (size - 1) == 0):
            raise ConfigError(
                f"texture.size must be a power of two in "
                f"[{MIN_TEXTURE_SIZE}, {MAX_TEXTURE_SIZE}], got {size}"
            )
        if self.texture.depth_bias < 0:
            raise ConfigError("texture.depth_bias must be non-negative")
        if self.generator.d_w < 1 or (self.generator.d_z is not None and self.generator.d_z < 1):
            raise ConfigError("generator latent dimensions must be >= 1")
        if self.generator.model is None and self.generator.corpus_size <= self.generator.d_w:
            raise ConfigError("generator.corpus_size must exceed generator.d_w")

        self.camera.validate()
        self.nicp.validate()
        self.inpainter.validate()
        self.generator.style.validate()
        self.loss.validate()
        self.schedule.validate()
        self.enhance.validate()

        if check_files:
            self._check_files()

    def _check_files(self) -> None:
        required = {"paths.template": self.paths.template, "paths.image": self.paths.image}
        if self.stages.register:
            required["paths.target"] = self.paths.target
        for name, value in required.items():
            if not value:
                raise ConfigError(f"{name} is required")
        optional = {
            "paths.landmarks": self.paths.landmarks,
            "paths.ground_truth": self.paths.ground_truth,
            "generator.model": self.generator.model,
            "generator.layout": self.generator.layout,
            "generator.corpus_dir": self.generator.corpus_dir,
        }
        for name, value in {**required, **optional}.items():
            if value and not Path(value).exists():
                raise ConfigError(f"{name} does not exist: {value}")

    def resolve_paths(self, base: PathLike) -> None:
        """Make relative file paths absolute against `base`."""
        base = Path(base)

        def resolve(value: Optional[str]) -> Optional[str]:
            if value is None or Path(value).is_absolute():
                return value
            return str(base / value)

        for f in dataclasses.fields(self.paths):
            setattr(self.paths, f.name, resolve(getattr(self.paths, f.name)))
        for name in ("model", "layout", "corpus_dir"):
            setattr(self.generator, name, resolve(getattr(self.generator, name)))


def load_config(
    path: Optional[PathLike] = None,
    overrides: Optional[list[str]] = None,
) -> PipelineConfig:
    """
    Load a config file (or start from defaults) and apply dotted overrides.

    Relative paths from the file are resolved against its directory;
    relative paths from overrides are kept relative to the working directory.
    """
    data = load_config_file(path) if path else {}
    config = from_dict(PipelineConfig, data)
    if path:
        config.resolve_paths(Path(path).resolve().parent)
    if overrides:
        config = from_dict(PipelineConfig, apply_overrides(to_dict(config), overrides))
    return config


def save_config(config: PipelineConfig, path: PathLike) -> None:
    save_config_file(to_dict(config), path)


# ============================================================================
# Ablation registry
# ============================================================================


@dataclass(frozen=True)
class AblationSetting:
    """One row of the stage-toggle grid."""

    name: str
    use_init: bool
    latent_space: LatentKind
    enhance: bool
    description: str


ABLATION_A = AblationSetting("a", False, LatentKind.GENERATOR, False, "T_proj -> generator prior")
ABLATION_B = AblationSetting("b", True, LatentKind.GENERATOR, False, "T_init -> generator prior")
ABLATION_C = AblationSetting(
    "c", True, LatentKind.GENERATOR, True, "T_init -> generator prior -> enhance"
)
ABLATION_D = AblationSetting("d", False, LatentKind.DIFFUSION, False, "T_proj -> diffusion prior")
ABLATION_E = AblationSetting("e", True, LatentKind.DIFFUSION, False, "T_init -> diffusion prior")
ABLATION_F = AblationSetting(
    "f", True, LatentKind.DIFFUSION, True, "T_init -> diffusion prior -> enhance"
)

ALL_ABLATIONS = [ABLATION_A, ABLATION_B, ABLATION_C, ABLATION_D, ABLATION_E, ABLATION_F]

ABLATIONS = {
    **{a.name: a for a in ALL_ABLATIONS},
    "no-init": ABLATION_A,
    "full": ABLATION_C,
}


def get_ablation(name: str) -> Optional[AblationSetting]:
    """Get an ablation setting by name or alias."""
    return ABLATIONS.get(name.lower())


def apply_ablation(config: PipelineConfig, setting: AblationSetting) -> PipelineConfig:
    """Copy of `config` with the setting's stage toggles."""
    stages = dataclasses.replace(
        config.stages,
        use_init=setting.use_init,
        latent_space=setting.latent_space,
        enhance=setting.enhance,
    )
    return dataclasses.replace(config, stages=stages)
