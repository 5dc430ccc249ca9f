"""
Procedural multi-style texture corpus.

Texture i of a corpus with seed s is drawn from its own generator
default_rng([s, i]) by layering, in order:

1. a base skin color drawn from the HSV ranges
2. facial regions from the layout, each filled with base + group offset
   (+ jitter), composited in file order with edges softened by
   (1 - hardness)
3. optional dark outlines of width `stroke_width` texels
4. band-limited Gaussian noise of standard deviation `noise_amplitude`

Layouts are JSON: {"regions": [{"name", "group", "shape", ...}]} where
shape is "ellipse" (center, radii, optional angle in degrees) or "polygon"
(points), all in UV units, with optional "mirror" across u = 0.5.
"""

import colorsys
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np
from scipy import ndimage

from ..common.errors import ConfigError, GeneratorError
from ..common.imageio import load_image, save_image
from ..projection.texture import TextureMap

PathLike = Union[str, Path]

DEFAULT_LAYOUT = "face_layout.json"


def _default_offsets() -> dict[str, list[float]]:
    return {
        "eyes": [-0.35, -0.33, -0.3],
        "brows": [-0.3, -0.3, -0.28],
        "lips": [0.12, -0.12, -0.08],
        "nose_shadow": [-0.08, -0.08, -0.06],
        "hair": [-0.4, -0.4, -0.4],
    }


@dataclass
class StyleParams:
    """Color and texture settings of the corpus."""

    hue_range: tuple[float, float] = (0.02, 0.1)
    saturation_range: tuple[float, float] = (0.2, 0.55)
    value_range: tuple[float, float] = (0.5, 0.95)
    region_offsets: dict[str, list[float]] = field(default_factory=_default_offsets)
    offset_jitter: float = 0.08
    hardness: float = 0.6
    stroke_width: int = 0
    stroke_offset: float = -0.15
    noise_amplitude: float = 0.02
    noise_scale: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("hue_range", "saturation_range", "value_range"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ConfigError(f"style.{name} must satisfy 0 <= lo <= hi <= 1")
        for name in ("hardness", "noise_amplitude", "offset_jitter"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"style.{name} must be in [0, 1], got {value}")
        if self.stroke_width < 0:
            raise ConfigError("style.stroke_width must be non-negative")
        if self.noise_scale <= 0:
            raise ConfigError("style.noise_scale must be positive")
        for group, offset in self.region_offsets.items():
            if len(offset) != 3:
                raise ConfigError(f"style.region_offsets.{group} must have 3 components")


@dataclass
class Region:
    name: str
    group: str
    shape: str
    params: dict


# ============================================================================
# Layout
# ============================================================================


def _check_pair(region: str, key: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise GeneratorError(f"region '{region}': '{key}' must be two numbers")
    return arr


def parse_layout(data: dict) -> list[Region]:
    """Validate a layout dict into Regions; errors name the region."""
    if not isinstance(data, dict) or not isinstance(data.get("regions"), list):
        raise GeneratorError("layout must be an object with a 'regions' list")
    regions = []
    for i, item in enumerate(data["regions"]):
        name = item.get("name") if isinstance(item, dict) else None
        if not name:
            raise GeneratorError(f"layout region #{i} has no name")
        shape = item.get("shape")
        params = {"mirror": bool(item.get("mirror", False))}
        try:
            if shape == "ellipse":
                params["center"] = _check_pair(name, "center", item["center"])
                params["radii"] = _check_pair(name, "radii", item["radii"])
                if np.any(params["radii"] <= 0):
                    raise GeneratorError(f"region '{name}': radii must be positive")
                params["angle"] = float(item.get("angle", 0.0))
            elif shape == "polygon":
                points = np.asarray(item["points"], dtype=np.float64)
                if points.ndim != 2 or points.shape[1] != 2 or len(points) < 3:
                    raise GeneratorError(f"region '{name}': polygon needs >= 3 (u, v) points")
                params["points"] = points
            else:
                raise GeneratorError(f"region '{name}': unknown shape '{shape}'")
        except (KeyError, TypeError, ValueError) as e:
            raise GeneratorError(f"region '{name}': malformed ({e})")
        regions.append(Region(name=name, group=item.get("group", name), shape=shape, params=params))
    return regions


def load_layout(path: Optional[PathLike] = None) -> list[Region]:
    """Read a layout file; the packaged face layout when path is None."""
    if path is None:
        text = resources.files("uvtex.generator").joinpath(DEFAULT_LAYOUT).read_text()
    else:
        text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GeneratorError(f"layout is not valid JSON: {e}")
    return parse_layout(data)


def _texel_centers(size: int) -> tuple[np.ndarray, np.ndarray]:
    centers = (np.arange(size) + 0.5) / size
    return centers[None, :], centers[:, None]


def _inside_ellipse(u, v, center, radii, angle_deg) -> np.ndarray:
    theta = np.radians(angle_deg)
    du, dv = u - center[0], v - center[1]
    a = (du * np.cos(theta) + dv * np.sin(theta)) / radii[0]
    b = (-du * np.sin(theta) + dv * np.cos(theta)) / radii[1]
    return a * a + b * b <= 1.0


def _inside_polygon(u, v, points) -> np.ndarray:
    # even-odd crossing rule
    u, v = np.broadcast_arrays(u, v)
    inside = np.zeros(u.shape, dtype=bool)
    n = len(points)
    for k in range(n):
        (u1, v1), (u2, v2) = points[k], points[(k + 1) % n]
        if v1 == v2:
            continue
        crosses = (v1 > v) != (v2 > v)
        at = u1 + (v - v1) * (u2 - u1) / (v2 - v1)
        inside ^= crosses & (u < at)
    return inside


def region_mask(region: Region, size: int) -> np.ndarray:
    """(S, S) boolean coverage of a region, mirror included."""
    u, v = _texel_centers(size)
    p = region.params
    mask = np.zeros((size, size), dtype=bool)
    for mirrored in ((False, True) if p["mirror"] else (False,)):
        uu = 1.0 - u if mirrored else u
        if region.shape == "ellipse":
            mask |= _inside_ellipse(uu, v, p["center"], p["radii"], p["angle"])
        else:
            mask |= _inside_polygon(uu, v, p["points"])
    return mask


# ============================================================================
# Synthesis
# ============================================================================


def _soften(mask: np.ndarray, hardness: float, size: int) -> np.ndarray:
    alpha = mask.astype(np.float64)
    sigma = (1.0 - hardness) * size / 64.0
    if sigma > 0:
        alpha = ndimage.gaussian_filter(alpha, sigma=sigma, mode="nearest")
    return alpha


def synth_texture(
    regions: list[Region], size: int, rng: np.random.Generator, style: StyleParams
) -> np.ndarray:
    """Draw one (S, S, 3) texture."""
    hue = rng.uniform(*style.hue_range)
    sat = rng.uniform(*style.saturation_range)
    val = rng.uniform(*style.value_range)
    base = np.array(colorsys.hsv_to_rgb(hue, sat, val))
    rgb = np.broadcast_to(base, (size, size, 3)).copy()

    for region in regions:
        if region.group not in style.region_offsets:
            raise GeneratorError(
                f"region '{region.name}': no color offset for group '{region.group}'"
            )
        jitter = style.offset_jitter * rng.uniform(-1.0, 1.0, size=3)
        color = np.clip(base + np.asarray(style.region_offsets[region.group]) + jitter, 0.0, 1.0)
        hard = region_mask(region, size)
        alpha = _soften(hard, style.hardness, size)[:, :, None]
        rgb = rgb * (1.0 - alpha) + color * alpha

        if style.stroke_width > 0 and hard.any():
            outline = hard & ~ndimage.binary_erosion(hard, iterations=style.stroke_width)
            stroke = _soften(outline, style.hardness, size)[:, :, None]
            rgb = rgb * (1.0 - stroke) + np.clip(color + style.stroke_offset, 0.0, 1.0) * stroke

    if style.noise_amplitude > 0:
        noise = rng.standard_normal((size, size, 3))
        sigma = style.noise_scale * size / 64.0
        noise = ndimage.gaussian_filter(noise, sigma=(sigma, sigma, 0), mode="wrap")
        std = noise.std()
        if std > 0:
            rgb = rgb + style.noise_amplitude * noise / std

    return np.clip(rgb, 0.0, 1.0)


def iter_corpus(
    layout: Union[list[Region], PathLike, None],
    n: int,
    size: int,
    seed: Optional[int] = None,
    style: Optional[StyleParams] = None,
) -> Iterator[TextureMap]:
    """
    Synthesize n fully valid textures one at a time.

    Args:
        layout: Parsed regions, a layout file path, or None for the packaged layout
        n: Corpus size (>= 2)
        size: Texture side S
        seed: Corpus seed; overrides style.seed when given
        style: Color and texture settings

    Yields:
        TextureMaps; texture i depends only on (seed, i)
    """
    if n < 2:
        raise GeneratorError("corpus needs at least 2 textures")
    style = style or StyleParams()
    style.validate()
    regions = layout if isinstance(layout, list) else load_layout(layout)
    seed = style.seed if seed is None else seed

    for i in range(n):
        rng = np.random.default_rng([seed, i])
        yield TextureMap.full(synth_texture(regions, size, rng, style))


def synth_corpus(
    layout: Union[list[Region], PathLike, None],
    n: int,
    size: int,
    seed: Optional[int] = None,
    style: Optional[StyleParams] = None,
) -> list[TextureMap]:
    """The whole corpus as a list; see iter_corpus."""
    return list(iter_corpus(layout, n, size, seed, style))


def save_corpus(corpus: list[TextureMap], directory: PathLike) -> list[Path]:
    """Write texture_0000.png, texture_0001.png, ... as 16-bit RGB."""
    directory = Path(directory)
    paths = []
    for i, texture in enumerate(corpus):
        path = directory / f"texture_{i:04d}.png"
        save_image(path, texture.rgb, bit_depth=16)
        paths.append(path)
    return paths


def load_corpus(directory: PathLike) -> list[TextureMap]:
    """Load every PNG in a directory (sorted by name) as a fully valid texture."""
    paths = sorted(p for p in Path(directory).glob("*.png") if not p.name.endswith(".mask.png"))
    if not paths:
        raise GeneratorError(f"no corpus textures in {directory}")
    return [TextureMap.full(load_image(p)) for p in paths]
