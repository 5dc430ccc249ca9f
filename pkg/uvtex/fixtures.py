"""
Procedural fixtures: a head-like mesh, an icosphere, and the synthetic
end-to-end scene written by `uvtex make-fixture`.

The head is a latitude-longitude ellipsoid with a nose bump. Longitude maps
to u with a front-expanding curve (the face gets more texels than the back
of the head), latitude maps linearly to v with the top of the head at v = 0.
The back seam is cut, so seam vertices are duplicated.
"""

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .common.imageio import quantize, save_image
from .common.log import get_logger
from .generator.corpus import DEFAULT_LAYOUT, StyleParams, iter_corpus
from .generator.model import GeneratorModel, fit_pca, gen_texture, load_model, save_model
from .geometry.camera import Camera, rotation_yaw_pitch
from .geometry.mesh import Mesh, bbox_diagonal, save_obj, vertex_normals
from .inpaint.inpaint import InpainterKind
from .optimize.invert import OptimSchedule
from .optimize.render import build_render_map, render
from .pipeline.config import CameraConfig, CameraMode, PipelineConfig, save_config
from .projection.coverage import build_uv_coverage
from .projection.texture import TextureMap, save_texture

logger = get_logger(__name__)

PathLike = Union[str, Path]

HEAD_RADII = (0.8, 1.0, 0.9)
LATITUDE_LIMIT = 0.45 * np.pi
FRONT_EXPANSION = 1.5

TARGET_WARP = 0.02
TARGET_YAW = 10.0
TARGET_PITCH = -5.0


def _head_uv(theta: np.ndarray, phi: np.ndarray, expansion: float) -> np.ndarray:
    u = 0.5 + 0.5 * np.sign(theta) * (np.abs(theta) / np.pi) ** (1.0 / expansion)
    v = 0.5 - 0.5 * phi / LATITUDE_LIMIT
    return np.stack([u, v], axis=-1)


def head_mesh(
    segments: int = 48,
    rings: int = 32,
    radii: tuple[float, float, float] = HEAD_RADII,
    nose_height: float = 0.12,
    nose_width: float = 0.15,
    expansion: float = FRONT_EXPANSION,
) -> Mesh:
    """
    Head-like ellipsoid facing +z with +y up.

    Args:
        segments: Longitude subdivisions
        rings: Latitude subdivisions
        radii: Semi-axes along x, y, z
        nose_height: Relative radial bump at the front
        nose_width: Angular width of the bump in radians
        expansion: Front expansion of the u mapping (1 = linear)
    """
    theta = np.linspace(-np.pi, np.pi, segments + 1)
    phi = np.linspace(-LATITUDE_LIMIT, LATITUDE_LIMIT, rings + 1)
    grid_phi, grid_theta = np.meshgrid(phi, theta, indexing="ij")

    bump = 1.0 + nose_height * np.exp(
        -(grid_theta**2 + (grid_phi + 0.05) ** 2) / (2.0 * nose_width**2)
    )
    a, b, c = radii
    vertices = np.stack(
        [
            a * bump * np.cos(grid_phi) * np.sin(grid_theta),
            b * bump * np.sin(grid_phi),
            c * bump * np.cos(grid_phi) * np.cos(grid_theta),
        ],
        axis=-1,
    ).reshape(-1, 3)
    uv = _head_uv(grid_theta, grid_phi, expansion).reshape(-1, 2)

    cols = segments + 1
    triangles = []
    for i in range(rings):
        for j in range(segments):
            v00 = i * cols + j
            v01 = v00 + 1
            v10 = v00 + cols
            v11 = v10 + 1
            triangles.append((v00, v01, v10))
            triangles.append((v01, v11, v10))
    triangles = np.array(triangles, dtype=np.int64)
    return Mesh(vertices=vertices, triangles=triangles, uv_corners=uv[triangles])


def icosphere(subdivisions: int = 1, radius: float = 1.0) -> Mesh:
    """
    Subdivided icosahedron; one level gives 42 vertices and 80 triangles.

    UVs are spherical (longitude, latitude). Triangles across the seam are
    clamped to u = 1, so the layout is not overlap-free.
    """
    t = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]  # fmt: skip
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]  # fmt: skip
    points = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in vertices]

    for _ in range(subdivisions):
        midpoints: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in midpoints:
                m = points[i] + points[j]
                points.append(m / np.linalg.norm(m))
                midpoints[key] = len(points) - 1
            return midpoints[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined

    vertices = np.array(points) * radius
    triangles = np.array(faces, dtype=np.int64)
    unit = vertices / radius
    u = 0.5 + np.arctan2(unit[:, 0], unit[:, 2]) / (2.0 * np.pi)
    v = 0.5 - np.arcsin(np.clip(unit[:, 1], -1.0, 1.0)) / np.pi
    uv = np.stack([u, v], axis=-1)[triangles]
    span = uv[:, :, 0].max(axis=1) - uv[:, :, 0].min(axis=1)
    wrap = (span > 0.5)[:, None] & (uv[:, :, 0] < 0.5)
    uv[:, :, 0] = np.where(wrap, np.minimum(uv[:, :, 0] + 1.0, 1.0), uv[:, :, 0])
    return Mesh(vertices=vertices, triangles=triangles, uv_corners=uv)


def warp_mesh(mesh: Mesh, amplitude: float = 0.02, periods: float = 1.0) -> Mesh:
    """
    Smooth sinusoidal displacement along the vertex normals.

    The offset is amplitude * (bbox diagonal) * cos(2 pi periods t), with t
    the vertex height relative to the mesh's vertical center, in units of its
    height. Coincident vertices (cut seams) share one normal so the surface
    stays closed.
    """
    vertices = mesh.vertices
    normals = vertex_normals(mesh)
    _, group = np.unique(np.round(vertices, 9), axis=0, return_inverse=True)
    group = group.reshape(-1)
    merged = np.zeros((group.max() + 1, 3))
    np.add.at(merged, group, normals)
    merged /= np.maximum(np.linalg.norm(merged, axis=1, keepdims=True), 1e-12)

    y = vertices[:, 1]
    lo, hi = y.min(), y.max()
    t = (y - 0.5 * (lo + hi)) / max(hi - lo, 1e-12)
    offset = amplitude * bbox_diagonal(vertices) * np.cos(2.0 * np.pi * periods * t)
    return mesh.with_vertices(vertices + offset[:, None] * merged[group])


def move_mesh(
    mesh: Mesh,
    yaw_deg: float = 0.0,
    pitch_deg: float = 0.0,
    translation=(0.0, 0.0, 0.0),
    scale: float = 1.0,
) -> Mesh:
    """Similarity transform about the bounding-box center."""
    vertices = mesh.vertices
    center = 0.5 * (vertices.min(axis=0) + vertices.max(axis=0))
    rotation = rotation_yaw_pitch(yaw_deg, pitch_deg)
    moved = scale * (vertices - center) @ rotation.T + center + np.asarray(translation, dtype=np.float64)
    return mesh.with_vertices(moved)


# ============================================================================
# Synthetic end-to-end scene
# ============================================================================


@dataclass
class FixtureScene:
    """Files and ground truth of a synthetic scene."""

    directory: Path
    config_path: Path
    camera: Camera
    model: GeneratorModel
    w_true: np.ndarray
    ground_truth: TextureMap
    image: np.ndarray


def fixture_config(camera: Camera, size: int) -> PipelineConfig:
    """The shipped fixture configuration, with paths relative to the scene directory."""
    config = PipelineConfig()
    config.paths = replace(
        config.paths,
        template="template.obj",
        target="target.obj",
        image="image.png",
        output_dir="out",
        ground_truth="ground_truth.png",
    )
    config.camera = CameraConfig(
        mode=CameraMode.EXPLICIT,
        fx=camera.fx,
        fy=camera.fy,
        cx=camera.cx,
        cy=camera.cy,
        rotation=camera.rotation.tolist(),
        translation=camera.translation.tolist(),
    )
    config.texture = replace(config.texture, size=size)
    config.generator = replace(config.generator, model="generator.texgen", layout="layout.json")
    config.inpainter = replace(config.inpainter, kind=InpainterKind.SYMMETRIC)
    config.schedule = OptimSchedule(z_steps=50, w_steps=300, correct_steps=200, lr=0.01)
    config.enhance = replace(config.enhance, deterministic_noise=True)
    return config


def make_fixture(
    directory: PathLike,
    size: int = 64,
    image_size: int = 128,
    corpus_size: int = 64,
    d_w: int = 16,
    seed: int = 0,
    latent_scale: float = 0.3,
    style: Optional[StyleParams] = None,
) -> FixtureScene:
    """
    Write a synthetic scene whose ground truth lies on the generator manifold.

    The target is the head template under a smooth warp followed by a
    similarity transform, so the registration stage has real work to do.
    The ground-truth texture is generated from a small random latent and
    rendered on the target from a frontal camera to make the input image.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    template = head_mesh()
    target = move_mesh(
        warp_mesh(template, TARGET_WARP),
        yaw_deg=TARGET_YAW,
        pitch_deg=TARGET_PITCH,
        translation=(0.02, -0.01, 0.03),
        scale=1.1,
    )
    save_obj(template, directory / "template.obj")
    save_obj(target, directory / "target.obj")

    layout_text = resources.files("uvtex.generator").joinpath(DEFAULT_LAYOUT).read_text()
    (directory / "layout.json").write_text(layout_text)

    coverage = build_uv_coverage(target, size)
    corpus = iter_corpus(None, corpus_size, size, seed=seed, style=style)
    data = np.stack([quantize(t.rgb, 16) for t in corpus])
    model_path = directory / "generator.texgen"
    save_model(fit_pca(data, d_w, seed=seed + 42, coverage=coverage.covered), model_path)
    model = load_model(model_path)

    rng = np.random.default_rng(seed)
    w_true = latent_scale * rng.standard_normal(d_w)
    truth = gen_texture(model, w_true)
    truth = TextureMap.full(np.clip(truth.rgb, 0.0, 1.0))
    save_texture(truth, directory / "ground_truth")

    camera = Camera.frontal(target, image_size, image_size)
    render_map = build_render_map(target, camera, image_size, image_size, size)
    image, _ = render(render_map, truth)
    save_image(directory / "image.png", image, bit_depth=8)

    config_path = directory / "config.json"
    save_config(fixture_config(camera, size), config_path)
    logger.info(f"[fixture] wrote scene to {directory} (S={size}, image {image_size}px)")
    return FixtureScene(
        directory=directory,
        config_path=config_path,
        camera=camera,
        model=model,
        w_true=w_true,
        ground_truth=truth,
        image=image,
    )
