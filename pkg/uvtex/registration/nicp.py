"""
Non-rigid ICP.

Deforms a template mesh onto a target surface while keeping the template's
triangles and UVs. Each template vertex i carries a 4x3 affine X_i; per
stiffness level alpha the solver minimizes

    sum_i w_i |v_i X_i - u_i|^2
    + alpha sum_(i,j) |G (X_i - X_j)|_F^2
    + lambda sum_k |v_(i_k) X_(i_k) - l_k|^2

with v_i the homogeneous template vertex, u_i its closest target point and
w_i in {0, 1} pruning correspondences that are too far away or whose
normals disagree. The stacked least-squares system is solved through its
normal equations with Jacobi-preconditioned conjugate gradients.

Before the non-rigid schedule the template is placed by a similarity ICP
over nearest target vertices, started from the bounding-box alignment and
from each proper pairing of the two point clouds' principal axes; the
start with the smallest final residual wins.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve
from scipy.spatial import cKDTree

from ..common.errors import ConfigError, RegistrationError
from ..common.log import get_logger
from ..geometry.mesh import Mesh, bbox_diagonal, mesh_edges, vertex_normals
from .closest import SurfaceIndex

logger = get_logger(__name__)

PathLike = Union[str, Path]

MIN_CONSTRAINTS = 4
RIGID_TOLERANCE = 1e-10


@dataclass
class NicpParams:
    """
    Registration settings.

    `distance_cutoff` and `threshold` are fractions of the target's
    bounding-box diagonal. `landmarks` rows are [template_index, x, y, z].
    """

    stiffness: tuple[float, ...] = (100.0, 50.0, 20.0, 10.0, 5.0, 2.0, 1.0)
    max_iterations: int = 10
    threshold: float = 1e-4
    distance_cutoff: float = 0.05
    normal_cutoff_deg: float = 60.0
    gamma: float = 1.0
    landmarks: list = field(default_factory=list)
    landmark_weight: float = 10.0
    cg_tolerance: float = 1e-10
    rigid_iterations: int = 50

    def validate(self) -> None:
        schedule = list(self.stiffness)
        if not schedule:
            raise ConfigError("nicp.stiffness must not be empty")
        if any(a <= 0 for a in schedule):
            raise ConfigError("nicp.stiffness values must be positive")
        if any(b >= a for a, b in zip(schedule, schedule[1:])):
            raise ConfigError("nicp.stiffness must be strictly decreasing")
        if self.max_iterations < 1:
            raise ConfigError("nicp.max_iterations must be >= 1")
        if self.rigid_iterations < 0:
            raise ConfigError("nicp.rigid_iterations must be >= 0")
        if self.threshold <= 0 or self.distance_cutoff <= 0 or self.normal_cutoff_deg <= 0:
            raise ConfigError("nicp cutoffs must be positive")
        if self.landmark_weight < 0:
            raise ConfigError("nicp.landmark_weight must be non-negative")
        for row in self.landmarks:
            if len(row) != 4:
                raise ConfigError("nicp.landmarks rows must be [index, x, y, z]")


@dataclass
class NicpIteration:
    """One inner solve."""

    stiffness: float
    iteration: int
    objective: float
    displacement: float
    active: int


def load_landmarks(path: PathLike) -> list[list[float]]:
    """
    Read `template_vertex_index x y z` lines.

    Blank lines and `#` comments are ignored.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ConfigError(f"{path}:{lineno}: expected 'index x y z'")
        try:
            rows.append([int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3])])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: expected 'index x y z'")
    return rows


def similarity_align(template: Mesh, target: Mesh) -> np.ndarray:
    """
    Template vertices scaled and translated onto the target's bounding box.

    Scale is the ratio of bounding-box diagonals; the box centers coincide.
    """
    src, dst = template.vertices, target.vertices
    src_center = 0.5 * (src.min(axis=0) + src.max(axis=0))
    dst_center = 0.5 * (dst.min(axis=0) + dst.max(axis=0))
    scale = bbox_diagonal(dst) / bbox_diagonal(src)
    return (src - src_center) * scale + dst_center


def umeyama(source: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
    """
    Least-squares similarity (R, s, t) with target ~ s R source + t.

    R is a proper rotation; reflections are never returned.
    """
    mu_s, mu_t = source.mean(axis=0), target.mean(axis=0)
    a, b = source - mu_s, target - mu_t
    u, sigma, vt = np.linalg.svd(b.T @ a / len(a))
    d = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        d[2] = -1.0
    rotation = (u * d) @ vt
    variance = float(np.sum(a**2)) / len(a)
    scale = float(np.sum(sigma * d)) / variance if variance > 0 else 1.0
    return rotation, scale, mu_t - scale * rotation @ mu_s


def _principal_starts(source: np.ndarray, target: np.ndarray) -> list[np.ndarray]:
    """The source mapped onto the target's principal axes, one per proper sign pairing."""
    mu_s, mu_t = source.mean(axis=0), target.mean(axis=0)
    a, b = source - mu_s, target - mu_t
    _, axes_s = np.linalg.eigh(a.T @ a)
    _, axes_t = np.linalg.eigh(b.T @ b)
    spread_s = float(np.sum(a**2)) / len(a)
    spread_t = float(np.sum(b**2)) / len(b)
    scale = np.sqrt(spread_t / spread_s) if spread_s > 0 else 1.0
    starts = []
    for signs in ([1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]):
        rotation = (axes_t * signs) @ axes_s.T
        if np.linalg.det(rotation) < 0:
            rotation = (axes_t * np.negative(signs)) @ axes_s.T
        starts.append(scale * a @ rotation.T + mu_t)
    return starts


def _similarity_icp(
    points: np.ndarray, target: np.ndarray, tree: cKDTree, iterations: int, tol: float
) -> tuple[np.ndarray, float]:
    for _ in range(iterations):
        _, nearest = tree.query(points)
        rotation, scale, shift = umeyama(points, target[nearest])
        moved = scale * points @ rotation.T + shift
        step = float(np.mean(np.linalg.norm(moved - points, axis=1)))
        points = moved
        if step < tol:
            break
    distance, _ = tree.query(points)
    return points, float(np.mean(distance))


def rigid_align(template: Mesh, target: Mesh, iterations: int = 50) -> np.ndarray:
    """
    Template vertices placed on the target by similarity ICP.

    With `iterations` 0 this is `similarity_align`. Otherwise every start
    is refined against the target's vertices and the one with the smallest
    mean nearest-vertex distance is returned; ties keep the bounding-box
    start.
    """
    first = similarity_align(template, target)
    if iterations == 0:
        return first
    dst = target.vertices
    tree = cKDTree(dst)
    tol = RIGID_TOLERANCE * bbox_diagonal(dst)
    best, best_distance = None, np.inf
    for start in [first, *_principal_starts(template.vertices, dst)]:
        points, distance = _similarity_icp(start, dst, tree, iterations, tol)
        if distance < best_distance - tol:
            best, best_distance = points, distance
    logger.debug(f"[nicp] rigid start residual={best_distance:.3e}")
    return best


def _stiffness_matrix(edges: np.ndarray, n: int, gamma: float) -> sp.csr_matrix:
    rows = np.repeat(np.arange(len(edges)), 2)
    cols = edges.reshape(-1)
    vals = np.tile([-1.0, 1.0], len(edges))
    incidence = sp.csr_matrix((vals, (rows, cols)), shape=(len(edges), n))
    return sp.kron(incidence, sp.diags([1.0, 1.0, 1.0, gamma]), format="csr")


def _vertex_matrix(homogeneous: np.ndarray, indices: np.ndarray) -> sp.csr_matrix:
    n = len(homogeneous)
    rows = np.repeat(np.arange(len(indices)), 4)
    cols = (4 * indices[:, None] + np.arange(4)[None, :]).reshape(-1)
    vals = homogeneous[indices].reshape(-1)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(indices), 4 * n))


def _solve_normal_equations(
    lhs: sp.csr_matrix, rhs: np.ndarray, x0: np.ndarray, tol: float, stiffness: float
) -> np.ndarray:
    diag = lhs.diagonal()
    precond = sp.diags(1.0 / np.where(diag > 0, diag, 1.0))
    solution = np.empty_like(x0)
    for col in range(rhs.shape[1]):
        x, info = cg(lhs, rhs[:, col], x0=x0[:, col], rtol=tol, maxiter=20 * lhs.shape[0], M=precond)
        if info != 0:
            logger.debug(f"[nicp] cg info={info} at alpha={stiffness:g}, falling back to spsolve")
            x = spsolve(lhs.tocsc(), rhs[:, col])
        solution[:, col] = x
    if not np.all(np.isfinite(solution)):
        raise RegistrationError("singular normal equations", stiffness)
    return solution


def nicp_register(
    template: Mesh,
    target: Mesh,
    params: Optional[NicpParams] = None,
    history: Optional[list[NicpIteration]] = None,
) -> Mesh:
    """
    Register the template onto the target surface.

    Args:
        template: Fixed-topology mesh to deform
        target: Surface to match
        params: Schedule and cutoffs (defaults when None)
        history: If given, receives one NicpIteration per inner solve

    Returns:
        Template topology and UVs with deformed vertex positions

    Raises:
        RegistrationError: non-finite input, too few constraints or a
            singular system
    """
    params = params or NicpParams()
    params.validate()
    if not np.all(np.isfinite(template.vertices)) or not np.all(np.isfinite(target.vertices)):
        raise RegistrationError("non-finite vertices in input")
    if template.n_vertices < MIN_CONSTRAINTS:
        raise RegistrationError(f"template needs at least {MIN_CONSTRAINTS} vertices")
    if target.n_triangles == 0:
        raise RegistrationError("target mesh is empty")

    start_time = time.time()
    n = template.n_vertices
    diagonal = bbox_diagonal(target.vertices)
    index = SurfaceIndex(target)

    aligned = rigid_align(template, target, params.rigid_iterations)
    homogeneous = np.hstack([aligned, np.ones((n, 1))])
    stiffness_rows = _stiffness_matrix(mesh_edges(template), n, params.gamma)
    data_rows = _vertex_matrix(homogeneous, np.arange(n))

    lm_index = np.array([int(r[0]) for r in params.landmarks], dtype=np.int64)
    lm_points = np.array([r[1:] for r in params.landmarks], dtype=np.float64).reshape(-1, 3)
    if len(lm_index) and (lm_index.min() < 0 or lm_index.max() >= n):
        raise RegistrationError("landmark vertex index out of range")
    lm_rows = _vertex_matrix(homogeneous, lm_index) if len(lm_index) else None

    affine = np.tile(np.vstack([np.eye(3), np.zeros((1, 3))]), (n, 1))
    vertices = aligned.copy()
    cos_cutoff = np.cos(np.radians(params.normal_cutoff_deg))

    for level, alpha in enumerate(params.stiffness):
        lm_weight = params.landmark_weight * 0.5**level
        for iteration in range(params.max_iterations):
            closest, _, tri_normals, distance = index.query(vertices)
            normals = vertex_normals(template.with_vertices(vertices))
            agree = np.einsum("ij,ij->i", normals, tri_normals) >= cos_cutoff
            weights = ((distance <= params.distance_cutoff * diagonal) & agree).astype(np.float64)

            active = int(weights.sum())
            constraints = active + (len(lm_index) if lm_weight > 0 else 0)
            if constraints < MIN_CONSTRAINTS:
                raise RegistrationError(
                    f"only {constraints} correspondences survive pruning", alpha
                )

            blocks = [np.sqrt(alpha) * stiffness_rows, sp.diags(weights) @ data_rows]
            targets = [np.zeros((stiffness_rows.shape[0], 3)), weights[:, None] * closest]
            if lm_rows is not None and lm_weight > 0:
                blocks.append(np.sqrt(lm_weight) * lm_rows)
                targets.append(np.sqrt(lm_weight) * lm_points)
            system = sp.vstack(blocks, format="csr")
            rhs = np.vstack(targets)

            affine = _solve_normal_equations(
                (system.T @ system).tocsr(), system.T @ rhs, affine, params.cg_tolerance, alpha
            )
            residual = system @ affine - rhs
            objective = float(np.sum(residual**2))

            updated = data_rows @ affine
            displacement = float(np.mean(np.linalg.norm(updated - vertices, axis=1)))
            vertices = updated
            if not np.all(np.isfinite(vertices)):
                raise RegistrationError("non-finite vertices after solve", alpha)

            if history is not None:
                history.append(NicpIteration(alpha, iteration, objective, displacement, active))
            logger.debug(
                f"[nicp] alpha={alpha:g} iter={iteration} objective={objective:.6e} "
                f"displacement={displacement:.3e} active={active}/{n}"
            )
            if displacement < params.threshold * diagonal:
                break

    elapsed_ms = int((time.time() - start_time) * 1000)
    logger.info(f"[timing] nicp {elapsed_ms}ms")
    return Mesh(
        vertices=vertices,
        triangles=template.triangles.copy(),
        uv_corners=template.uv_corners.copy(),
    )
