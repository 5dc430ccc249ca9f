import numpy as np
import pytest

from uvtex.common.errors import SolverError
from uvtex.fusion.fuse import fuse
from uvtex.fusion.poisson import GuidanceField, PoissonProblem, find_islands, poisson_solve
from uvtex.projection.texture import TextureMap

NEIGHBORS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def _dense_solve(problem):
    """Assemble the same equations densely and solve directly."""
    region = problem.region
    height, width = region.shape
    cells = list(zip(*np.nonzero(region)))
    index = {cell: k for k, cell in enumerate(cells)}
    channels = problem.boundary.shape[2]
    a = np.zeros((len(cells), len(cells)))
    b = np.zeros((len(cells), channels))
    for k, (r, c) in enumerate(cells):
        for dr, dc in NEIGHBORS:
            qr, qc = r + dr, c + dc
            if not (0 <= qr < height and 0 <= qc < width):
                continue
            a[k, k] += 1.0
            b[k] += problem.guidance.edge(np.array([r]), np.array([c]), dr, dc)[0]
            if region[qr, qc]:
                a[k, index[(qr, qc)]] -= 1.0
            else:
                b[k] += problem.boundary[qr, qc]
    values = problem.boundary.copy()
    solution = np.linalg.solve(a, b)
    for k, (r, c) in enumerate(cells):
        values[r, c] = solution[k]
    return values


def test_poisson_matches_dense_solve(rng):
    for _ in range(5):
        region = np.zeros((8, 8), dtype=bool)
        region[1:7, 1:7] = rng.uniform(size=(6, 6)) < 0.7
        guidance = GuidanceField(dx=rng.normal(size=(8, 8, 3)), dy=rng.normal(size=(8, 8, 3)))
        problem = PoissonProblem(
            region=region,
            boundary=rng.uniform(size=(8, 8, 3)),
            guidance=guidance,
            tolerance=1e-13,
        )
        result = poisson_solve(problem)
        assert not result.islands.any()
        np.testing.assert_allclose(result.values, _dense_solve(problem), atol=1e-8)


def test_poisson_reproduces_harmonic_function():
    size = 64
    y, x = np.mgrid[0:size, 0:size] / (size - 1)
    exact = (x * x - y * y)[:, :, None]
    region = np.zeros((size, size), dtype=bool)
    region[1:-1, 1:-1] = True
    boundary = np.where(region[:, :, None], 0.0, exact)
    problem = PoissonProblem(
        region=region,
        boundary=boundary,
        guidance=GuidanceField.zeros(size, size, 1),
        preconditioner=True,
    )
    result = poisson_solve(problem)
    assert np.max(np.abs(result.values - exact)) <= 1e-3


def test_poisson_values_outside_region_are_untouched(rng):
    region = np.zeros((10, 10), dtype=bool)
    region[3:7, 3:7] = True
    boundary = rng.uniform(size=(10, 10, 3))
    result = poisson_solve(
        PoissonProblem(region=region, boundary=boundary, guidance=GuidanceField.zeros(10, 10, 3))
    )
    np.testing.assert_array_equal(result.values[~region], boundary[~region])


def test_poisson_solve_is_linear(rng):
    region = np.zeros((12, 12), dtype=bool)
    region[2:10, 2:10] = True

    def solve(boundary, dx, dy):
        problem = PoissonProblem(
            region=region,
            boundary=boundary,
            guidance=GuidanceField(dx=dx, dy=dy),
            tolerance=1e-13,
        )
        return poisson_solve(problem).values

    first = [rng.normal(size=(12, 12, 3)) for _ in range(3)]
    second = [rng.normal(size=(12, 12, 3)) for _ in range(3)]
    alpha, beta = 0.6, -1.7
    combined = solve(*[alpha * f + beta * s for f, s in zip(first, second)])
    np.testing.assert_allclose(combined, alpha * solve(*first) + beta * solve(*second), atol=1e-9)


def test_islands_are_filled_not_solved():
    region = np.zeros((6, 6), dtype=bool)
    region[2:4, 2:4] = True
    domain = region.copy()  # no anchor anywhere
    islands = find_islands(region, domain)
    np.testing.assert_array_equal(islands, region)

    problem = PoissonProblem(
        region=region,
        boundary=np.zeros((6, 6, 3)),
        guidance=GuidanceField.zeros(6, 6, 3),
        domain=domain,
        island_fill=np.array([0.1, 0.2, 0.3]),
    )
    result = poisson_solve(problem)
    np.testing.assert_allclose(result.values[region], np.tile([0.1, 0.2, 0.3], (4, 1)))
    assert result.iterations == []


def test_poisson_reports_stalled_solve(rng):
    region = np.zeros((20, 20), dtype=bool)
    region[1:-1, 1:-1] = True
    problem = PoissonProblem(
        region=region,
        boundary=rng.uniform(size=(20, 20, 3)),
        guidance=GuidanceField.zeros(20, 20, 3),
        max_iterations=1,
        tolerance=1e-14,
    )
    with pytest.raises(SolverError) as exc:
        poisson_solve(problem)
    assert exc.value.residual > 0


# ============================================================================
# Seamless fusion
# ============================================================================


def test_fuse_keeps_visible_texels_exactly(rng):
    size = 16
    t_sd = TextureMap.full(rng.uniform(size=(size, size, 3)))
    mask = np.zeros((size, size))
    mask[:, : size // 2] = 1.0
    t_proj = TextureMap(np.where(mask[:, :, None] > 0, rng.uniform(size=(size, size, 3)), 0.0), mask)
    fused = fuse(t_proj, t_sd)
    visible = mask > 0.5
    np.testing.assert_array_equal(fused.rgb[visible], t_proj.rgb[visible])
    assert fused.valid.all()


def test_fuse_of_consistent_inputs_is_identity(rng):
    size = 16
    base = rng.uniform(size=(size, size, 3))
    mask = (rng.uniform(size=(size, size)) < 0.4).astype(np.float64)
    t_proj = TextureMap(np.where(mask[:, :, None] > 0, base, 0.0), mask)
    fused = fuse(t_proj, TextureMap.full(base), tolerance=1e-12)
    np.testing.assert_allclose(fused.rgb, base, atol=1e-6)


def test_fuse_without_visible_texels_returns_t_sd(rng):
    t_sd = TextureMap.full(rng.uniform(size=(8, 8, 3)))
    t_proj = TextureMap(np.zeros((8, 8, 3)), np.zeros((8, 8)))
    fused = fuse(t_proj, t_sd)
    np.testing.assert_array_equal(fused.rgb, t_sd.rgb)


def test_fuse_gradient_follows_t_sd_in_the_hole():
    size = 12
    ramp = np.broadcast_to(np.linspace(0.0, 1.0, size)[None, :, None], (size, size, 3)).copy()
    mask = np.ones((size, size))
    mask[4:8, 4:8] = 0.0
    offset = 0.25
    t_proj = TextureMap(np.where(mask[:, :, None] > 0, ramp + offset, 0.0), mask)
    fused = fuse(t_proj, TextureMap.full(ramp), tolerance=1e-12)
    # the hole is re-lit by the visible offset
    np.testing.assert_allclose(fused.rgb[4:8, 4:8], ramp[4:8, 4:8] + offset, atol=1e-6)
