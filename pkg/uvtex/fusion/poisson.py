"""
Discrete Poisson solver on masked texel grids.

For every texel p of the region, with N(p) its 4-neighbors inside the
domain (chart coverage):

    sum_(q in N(p)) (f_p - f_q) = sum_(q in N(p)) v_pq

where f_q is the Dirichlet boundary value for q outside the region. v_pq is
the guidance across edge (p, q). Neighbors outside the domain are dropped,
which makes chart edges Neumann boundaries. Region components without any
boundary texel ("islands") are not solved; they are filled and reported.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.linalg import cg

from ..common.errors import SolverError, UvtexError
from ..common.log import get_logger

logger = get_logger(__name__)

DEFAULT_TOLERANCE = 1e-8

# (row offset, col offset) of the four neighbors
_NEIGHBORS = ((0, 1), (0, -1), (1, 0), (-1, 0))


@dataclass
class GuidanceField:
    """
    Edge guidance stored as forward differences.

    dx[r, c] is the guidance g(r, c+1) - g(r, c) and dy[r, c] is
    g(r+1, c) - g(r, c), per channel. The edge term from p to q is
    v_pq = g_p - g_q.
    """

    dx: np.ndarray
    dy: np.ndarray
    source: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, height: int, width: int, channels: int) -> "GuidanceField":
        return cls(
            dx=np.zeros((height, width, channels)),
            dy=np.zeros((height, width, channels)),
        )

    @classmethod
    def from_source(cls, image: np.ndarray) -> "GuidanceField":
        """Guidance equal to the gradient field of `image`."""
        image = np.asarray(image, dtype=np.float64)
        if image.ndim == 2:
            image = image[:, :, None]
        dx = np.zeros_like(image)
        dy = np.zeros_like(image)
        dx[:, :-1] = image[:, 1:] - image[:, :-1]
        dy[:-1] = image[1:] - image[:-1]
        return cls(dx=dx, dy=dy, source=image)

    def edge(self, rows: np.ndarray, cols: np.ndarray, dr: int, dc: int) -> np.ndarray:
        """v_pq for p = (rows, cols) and q = p + (dr, dc)."""
        if dc == 1:
            return -self.dx[rows, cols]
        if dc == -1:
            return self.dx[rows, cols - 1]
        if dr == 1:
            return -self.dy[rows, cols]
        return self.dy[rows - 1, cols]


@dataclass
class PoissonProblem:
    """
    Attributes:
        region: (H, W) boolean unknown set
        boundary: (H, W, C) Dirichlet values, read outside the region
        guidance: Edge guidance on the region
        domain: (H, W) boolean texels that exist; defaults to all
        tolerance: CG relative residual target
        max_iterations: Defaults to 10 * |region|
        preconditioner: Use Jacobi preconditioning
        island_fill: (C,) fill for islands when the guidance has no source
    """

    region: np.ndarray
    boundary: np.ndarray
    guidance: GuidanceField
    domain: Optional[np.ndarray] = None
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: Optional[int] = None
    preconditioner: bool = False
    island_fill: Optional[np.ndarray] = None

    def __post_init__(self):
        self.region = np.asarray(self.region, dtype=bool)
        self.boundary = np.asarray(self.boundary, dtype=np.float64)
        if self.boundary.ndim == 2:
            self.boundary = self.boundary[:, :, None]
        if self.domain is None:
            self.domain = np.ones(self.region.shape, dtype=bool)
        self.domain = np.asarray(self.domain, dtype=bool)
        if self.tolerance <= 0:
            raise UvtexError("Poisson tolerance must be positive")
        if self.boundary.shape[:2] != self.region.shape:
            raise UvtexError("boundary and region shapes differ")


@dataclass
class PoissonResult:
    """
    Attributes:
        values: (H, W, C) boundary values outside the region, solution inside
        islands: (H, W) boolean region texels that had no boundary
        iterations: CG iterations per channel
    """

    values: np.ndarray
    islands: np.ndarray
    iterations: list[int] = field(default_factory=list)


def find_islands(region: np.ndarray, domain: np.ndarray) -> np.ndarray:
    """Region texels whose 4-connected component touches no domain texel outside the region."""
    labels, count = ndimage.label(region)
    if count == 0:
        return np.zeros(region.shape, dtype=bool)
    anchor = domain & ~region
    touching = ndimage.binary_dilation(anchor) & region
    anchored = np.unique(labels[touching])
    anchored = anchored[anchored > 0]
    return region & ~np.isin(labels, anchored)


def _assemble(problem: PoissonProblem, solve: np.ndarray):
    height, width = solve.shape
    index = -np.ones(solve.shape, dtype=np.int64)
    rows, cols = np.nonzero(solve)
    n = len(rows)
    index[rows, cols] = np.arange(n)
    channels = problem.boundary.shape[2]

    diag = np.zeros(n)
    rhs = np.zeros((n, channels))
    a_rows, a_cols = [], []
    for dr, dc in _NEIGHBORS:
        qr, qc = rows + dr, cols + dc
        in_grid = (qr >= 0) & (qr < height) & (qc >= 0) & (qc < width)
        qr_safe, qc_safe = np.where(in_grid, qr, 0), np.where(in_grid, qc, 0)
        usable = in_grid & problem.domain[qr_safe, qc_safe]
        diag += usable

        p = np.nonzero(usable)[0]
        rhs[p] += problem.guidance.edge(rows[p], cols[p], dr, dc)
        inner = usable & solve[qr_safe, qc_safe]
        a_rows.append(np.nonzero(inner)[0])
        a_cols.append(index[qr_safe[inner], qc_safe[inner]])
        outer = usable & ~problem.region[qr_safe, qc_safe]
        rhs[outer] += problem.boundary[qr_safe[outer], qc_safe[outer]]

    a_rows = np.concatenate(a_rows)
    a_cols = np.concatenate(a_cols)
    matrix = sp.csr_matrix(
        (
            np.concatenate([diag, -np.ones(len(a_rows))]),
            (np.concatenate([np.arange(n), a_rows]), np.concatenate([np.arange(n), a_cols])),
        ),
        shape=(n, n),
    )
    return matrix, rhs, rows, cols


def poisson_solve(problem: PoissonProblem) -> PoissonResult:
    """
    Solve the guided Poisson equation on the problem's region.

    Raises:
        SolverError: CG did not reach the tolerance within max_iterations
    """
    region = problem.region & problem.domain
    values = problem.boundary.copy()
    islands = find_islands(region, problem.domain)
    solve = region & ~islands

    if islands.any():
        labels, count = ndimage.label(islands)
        for label in range(1, count + 1):
            component = labels == label
            if problem.guidance.source is not None:
                fill = problem.guidance.source[component].mean(axis=0)
            elif problem.island_fill is not None:
                fill = np.asarray(problem.island_fill, dtype=np.float64)
            else:
                fill = np.zeros(values.shape[2])
            values[component] = fill
        logger.info(f"[poisson] filled {count} island component(s), {int(islands.sum())} texels")

    result = PoissonResult(values=values, islands=islands)
    if not solve.any():
        return result

    matrix, rhs, rows, cols = _assemble(problem, solve)
    n = matrix.shape[0]
    maxiter = problem.max_iterations or 10 * n
    precond = sp.diags(1.0 / matrix.diagonal()) if problem.preconditioner else None

    for ch in range(rhs.shape[1]):
        b = rhs[:, ch]
        b_norm = float(np.linalg.norm(b))
        if b_norm == 0.0:
            values[rows, cols, ch] = 0.0
            result.iterations.append(0)
            continue
        counter = {"k": 0}

        def count(_):
            counter["k"] += 1

        x, info = cg(
            matrix, b, rtol=problem.tolerance, atol=0.0, maxiter=maxiter, M=precond, callback=count
        )
        residual = float(np.linalg.norm(b - matrix @ x)) / b_norm
        if info != 0 or not np.all(np.isfinite(x)):
            raise SolverError(f"conjugate gradient stalled on channel {ch}", residual)
        values[rows, cols, ch] = x
        result.iterations.append(counter["k"])
        logger.debug(f"[poisson] channel={ch} n={n} iterations={counter['k']} residual={residual:.2e}")

    return result
