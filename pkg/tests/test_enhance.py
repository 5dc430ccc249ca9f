import numpy as np
import pytest

from uvtex.common.errors import ConfigError, DenoiserError
from uvtex.enhance.denoisers import project_to_manifold, projection_denoiser
from uvtex.enhance.schedule import forward_diffuse, make_schedule, timestep_for_strength
from uvtex.enhance.sdedit import (
    DenoiserKind,
    EnhanceSettings,
    build_denoiser,
    ddim_step,
    enhance_texture,
    sdedit,
    transfer_detail,
)
from uvtex.generator.model import gen_texture
from uvtex.projection.texture import TextureMap

STUB = "{python} -m uvtex.stubs.passthrough --in {in} --mask {mask} --out {out} --t {t}"


# ============================================================================
# Schedule
# ============================================================================


def test_schedule_shape():
    schedule = make_schedule(1000, 1e-4, 0.02)
    assert schedule.steps == 1000
    assert schedule.alphas_bar[0] == 1.0
    assert len(schedule.alphas_bar) == 1001
    assert np.all(np.diff(schedule.alphas_bar) < 0)
    assert schedule.betas[0] == pytest.approx(1e-4)
    assert schedule.betas[-1] == pytest.approx(0.02)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        make_schedule(0)
    with pytest.raises(ConfigError):
        make_schedule(10, 0.02, 1e-4)
    with pytest.raises(ConfigError):
        make_schedule(10).alpha_bar(11)


@pytest.mark.parametrize(
    "strength, steps, expected",
    [(0.3, 1000, 300), (0.25, 10, 3), (0.0004, 1000, 1), (1.0, 50, 50)],
)
def test_timestep_for_strength(strength, steps, expected):
    assert timestep_for_strength(strength, steps) == expected


@pytest.mark.parametrize("strength", [0.0, -0.1, 1.5])
def test_strength_out_of_range(strength):
    with pytest.raises(ConfigError):
        timestep_for_strength(strength, 1000)


def test_forward_diffuse_variance(rng):
    schedule = make_schedule()
    t = 500
    n = 100_000
    x_t = forward_diffuse(np.zeros(n), t, rng.standard_normal(n), schedule)
    expected = 1.0 - schedule.alpha_bar(t)
    stderr = expected * np.sqrt(2.0 / (n - 1))
    assert abs(x_t.var(ddof=1) - expected) <= 3 * stderr


def test_forward_diffuse_edges(rng):
    schedule = make_schedule()
    x0 = rng.uniform(size=(4, 4, 3))
    np.testing.assert_array_equal(forward_diffuse(x0, 0, rng.normal(size=x0.shape), schedule), x0)
    with pytest.raises(ConfigError):
        forward_diffuse(x0, 10, np.zeros((4, 4)), schedule)


def test_ddim_step_with_exact_estimate_stays_on_the_path(rng):
    schedule = make_schedule()
    x0 = rng.uniform(size=(8, 8, 3))
    eps = rng.normal(size=x0.shape)
    for t in (1, 2, 300, 1000):
        x_t = forward_diffuse(x0, t, eps, schedule)
        expected = forward_diffuse(x0, t - 1, eps, schedule)
        np.testing.assert_allclose(ddim_step(x_t, x0, t, schedule), expected, atol=1e-12)


# ============================================================================
# Denoisers and SDEdit
# ============================================================================


def test_projection_denoiser_is_exact_on_the_manifold(small_model, rng):
    schedule = make_schedule()
    texture = gen_texture(small_model, rng.normal(size=small_model.d_w))
    denoise = projection_denoiser(small_model, schedule)
    for t in (1, 300, 900):
        x_t = np.sqrt(schedule.alpha_bar(t)) * texture.rgb
        np.testing.assert_allclose(denoise(x_t, t), texture.rgb, atol=1e-10)


def test_sdedit_keeps_manifold_textures(small_model, rng):
    texture = gen_texture(small_model, rng.normal(size=small_model.d_w))
    denoise = projection_denoiser(small_model)
    out = sdedit(texture, 0.3, denoise, deterministic_noise=True)
    assert np.max(np.abs(out.rgb - texture.rgb)) <= 1e-3
    np.testing.assert_array_equal(out.mask, texture.mask)


@pytest.mark.parametrize("eta", [0.0, 1.0])
def test_sdedit_lands_on_the_manifold(small_model, rng, eta):
    texture = TextureMap.full(rng.uniform(size=(16, 16, 3)))
    denoise = projection_denoiser(small_model)
    out = sdedit(texture, 0.3, denoise, seed=5, eta=eta)
    projected = project_to_manifold(small_model, out.rgb).reshape(out.rgb.shape)
    scale = np.max(np.abs(out.rgb))
    assert np.max(np.abs(projected - out.rgb)) <= 1e-5 * scale
    again = sdedit(texture, 0.3, denoise, seed=5, eta=eta)
    np.testing.assert_array_equal(again.rgb, out.rgb)


def test_sdedit_rejects_bad_denoiser_output():
    texture = TextureMap.full(np.full((8, 8, 3), 0.5))
    schedule = make_schedule(100)
    with pytest.raises(DenoiserError) as exc:
        sdedit(texture, 0.2, lambda x, t: np.zeros((4, 4, 3)), schedule)
    assert exc.value.step == 20
    with pytest.raises(DenoiserError) as exc:
        sdedit(texture, 0.2, lambda x, t: np.full(x.shape, np.nan), schedule)
    assert exc.value.step == 20


def test_external_denoiser_passthrough(rng):
    rgb = rng.uniform(0.1, 0.9, size=(16, 16, 3))
    texture = TextureMap.full(rgb)
    settings = EnhanceSettings(
        strength=0.2,
        steps=10,
        denoiser=DenoiserKind.EXTERNAL,
        command=STUB,
        timeout=60,
        deterministic_noise=True,
    )
    out = enhance_texture(texture, settings)
    assert np.max(np.abs(out.rgb - rgb)) <= 2 / 255


def test_external_denoiser_failure_reports_the_step(rng):
    settings = EnhanceSettings(
        strength=0.2,
        steps=10,
        denoiser=DenoiserKind.EXTERNAL,
        command="{python} -c 'import sys; sys.exit(2)'",
        timeout=60,
    )
    with pytest.raises(DenoiserError) as exc:
        enhance_texture(TextureMap.full(rng.uniform(size=(8, 8, 3))), settings)
    assert exc.value.step == 2
    assert "[exit]" in str(exc.value)


def test_transfer_detail(rng):
    texture = TextureMap.full(rng.uniform(size=(16, 16, 3)))
    flat = TextureMap.full(np.full((16, 16, 3), 0.4))
    visible = np.ones((16, 16), dtype=bool)
    np.testing.assert_allclose(transfer_detail(texture, flat, visible).rgb, texture.rgb, atol=1e-12)

    reference = TextureMap.full(rng.uniform(size=(16, 16, 3)))
    hidden = transfer_detail(texture, reference, np.zeros((16, 16), dtype=bool))
    np.testing.assert_array_equal(hidden.rgb, texture.rgb)
    shown = transfer_detail(texture, reference, visible, gamma=1.0)
    assert not np.allclose(shown.rgb, texture.rgb)


def test_enhance_settings_validation(small_model):
    with pytest.raises(ConfigError):
        EnhanceSettings(strength=0.0).validate()
    with pytest.raises(ConfigError):
        EnhanceSettings(denoiser=DenoiserKind.EXTERNAL).validate()
    settings = EnhanceSettings()
    with pytest.raises(ConfigError):
        build_denoiser(settings, None, settings.schedule())
    texture = gen_texture(small_model, np.zeros(small_model.d_w))
    with pytest.raises(ConfigError):
        enhance_texture(texture, EnhanceSettings(detail_transfer=True), small_model)
