import numpy as np
import pytest

from uvtex.common.errors import ConfigError, GeneratorError
from uvtex.generator.corpus import (
    StyleParams,
    iter_corpus,
    load_corpus,
    load_layout,
    parse_layout,
    region_mask,
    save_corpus,
    synth_corpus,
)
from uvtex.generator.model import (
    fit_pca,
    gen_flat,
    gen_texture,
    gen_vjp,
    load_model,
    map_vjp,
    map_z_to_w,
    mapper_weights,
    project_texture_to_latent,
    save_model,
)

SPOT_LAYOUT = {
    "regions": [
        {"name": "spot", "group": "eyes", "shape": "ellipse", "center": [0.5, 0.5], "radii": [0.2, 0.1]}
    ]
}


# ============================================================================
# Corpus
# ============================================================================


def test_packaged_layout_parses():
    regions = load_layout()
    assert regions
    assert {r.shape for r in regions} <= {"ellipse", "polygon"}


def test_layout_errors_name_the_region():
    bad = {"regions": [{"name": "blob", "shape": "ellipse", "center": [0.5], "radii": [0.1, 0.1]}]}
    with pytest.raises(GeneratorError, match="blob"):
        parse_layout(bad)
    with pytest.raises(GeneratorError, match="star"):
        parse_layout({"regions": [{"name": "star", "shape": "star"}]})
    with pytest.raises(GeneratorError):
        parse_layout({"shapes": []})


def test_mirrored_region_is_symmetric():
    layout = parse_layout(
        {
            "regions": [
                {
                    "name": "eye",
                    "shape": "ellipse",
                    "center": [0.3, 0.5],
                    "radii": [0.1, 0.05],
                    "mirror": True,
                }
            ]
        }
    )
    mask = region_mask(layout[0], 32)
    np.testing.assert_array_equal(mask, mask[:, ::-1])


def test_hard_noiseless_texture_is_piecewise_constant():
    style = StyleParams(noise_amplitude=0.0, hardness=1.0, offset_jitter=0.0)
    regions = parse_layout(SPOT_LAYOUT)
    (texture,) = synth_corpus(regions, 2, 32, seed=4, style=style)[:1]
    inside = region_mask(regions[0], 32)
    base = texture.rgb[~inside][0]
    np.testing.assert_array_equal(texture.rgb[~inside], np.broadcast_to(base, (int((~inside).sum()), 3)))
    expected = np.clip(base + np.asarray(style.region_offsets["eyes"]), 0.0, 1.0)
    np.testing.assert_allclose(texture.rgb[inside], np.broadcast_to(expected, (int(inside.sum()), 3)))


def test_texture_depends_only_on_seed_and_index():
    short = synth_corpus(None, 3, 16, seed=9)
    longer = list(iter_corpus(None, 5, 16, seed=9))
    for a, b in zip(short, longer):
        np.testing.assert_array_equal(a.rgb, b.rgb)
    assert not np.array_equal(longer[0].rgb, longer[1].rgb)


def test_corpus_values_stay_in_unit_range():
    for texture in iter_corpus(None, 4, 16, seed=1, style=StyleParams(stroke_width=1)):
        assert texture.rgb.min() >= 0.0 and texture.rgb.max() <= 1.0
        assert texture.valid.all()


def test_mean_texture_is_flattest_on_skin():
    size = 32
    mean = np.mean([t.rgb for t in iter_corpus(None, 200, size, seed=11)], axis=0)
    skin = ~np.any([region_mask(region, size) for region in load_layout()], axis=0)
    assert skin.any()
    assert np.all(mean[skin].var(axis=0) < mean.reshape(-1, 3).var(axis=0))


def test_corpus_needs_two_textures():
    with pytest.raises(GeneratorError):
        synth_corpus(None, 1, 16)


def test_style_validation():
    with pytest.raises(ConfigError):
        StyleParams(hue_range=(0.5, 0.1)).validate()
    with pytest.raises(ConfigError):
        StyleParams(hardness=1.5).validate()


def test_missing_group_offset_is_reported():
    regions = parse_layout(
        {"regions": [{"name": "mole", "group": "moles", "shape": "ellipse", "center": [0.5, 0.5], "radii": [0.1, 0.1]}]}
    )
    with pytest.raises(GeneratorError, match="moles"):
        synth_corpus(regions, 2, 16)


def test_corpus_files_reload_at_16_bits(tmp_path):
    corpus = synth_corpus(None, 3, 16, seed=2)
    paths = save_corpus(corpus, tmp_path)
    assert [p.name for p in paths] == ["texture_0000.png", "texture_0001.png", "texture_0002.png"]
    again = load_corpus(tmp_path)
    for a, b in zip(corpus, again):
        np.testing.assert_allclose(a.rgb, b.rgb, atol=0.5 / 65535 + 1e-12)


def test_empty_corpus_directory(tmp_path):
    with pytest.raises(GeneratorError):
        load_corpus(tmp_path)


# ============================================================================
# Generator
# ============================================================================


def test_two_point_pca_closed_form(rng):
    size = 8
    mu = rng.uniform(0.3, 0.7, size=size * size * 3)
    e = rng.normal(size=mu.size)
    e /= np.linalg.norm(e)
    c = 0.05
    corpus = np.stack([mu + c * e, mu - c * e]).reshape(2, size, size, 3)
    model = fit_pca(corpus, 1)
    np.testing.assert_allclose(model.mean, mu, atol=1e-12)
    np.testing.assert_allclose(abs(model.basis[:, 0] @ e), 1.0, atol=1e-8)
    np.testing.assert_allclose(model.sigma[0], c * np.sqrt(2.0), atol=1e-8)
    peak = np.argmax(np.abs(model.basis[:, 0]))
    assert model.basis[peak, 0] > 0


def test_basis_orthonormal_and_sigma_ordered(small_model):
    gram = small_model.basis.T @ small_model.basis
    np.testing.assert_allclose(gram, np.eye(small_model.d_w), atol=1e-6)
    assert np.all(small_model.sigma > 0)
    assert np.all(np.diff(small_model.sigma) <= 0)


def test_full_rank_model_reconstructs_corpus(small_corpus):
    model = fit_pca(small_corpus, len(small_corpus) - 1)
    for texture in small_corpus:
        w = project_texture_to_latent(model, texture)
        np.testing.assert_allclose(gen_flat(model, w), texture.rgb.reshape(-1), atol=1e-6)


def test_projection_recovers_latent(small_model, rng):
    w = rng.normal(size=small_model.d_w)
    texture = gen_texture(small_model, w)
    np.testing.assert_allclose(project_texture_to_latent(small_model, texture), w, atol=1e-8)
    np.testing.assert_array_equal(texture.mask, small_model.coverage)


def test_generated_samples_average_to_the_mean(small_model, rng):
    n = 10_000
    total = sum(gen_flat(small_model, w) for w in rng.standard_normal((n, small_model.d_w)))
    spread = np.sqrt(((small_model.basis * small_model.sigma) ** 2).sum(axis=1))
    keep = spread > 1e-6
    z = (total / n - small_model.mean)[keep] / (spread[keep] / np.sqrt(n))
    # |z| per texel is bounded by the norm of a d_w-dimensional standard normal
    assert np.abs(z).max() < 5.0


def test_rank_deficient_corpus_is_rejected(small_corpus):
    copies = [small_corpus[0]] * 4
    with pytest.raises(GeneratorError, match="rank"):
        fit_pca(copies, 2)
    with pytest.raises(GeneratorError):
        fit_pca(small_corpus[:3], 3)


def test_mapper_is_seeded_and_orthogonal():
    a1, a2 = mapper_weights(6, 4, seed=42)
    b1, b2 = mapper_weights(6, 4, seed=42)
    np.testing.assert_array_equal(a1, b1)
    np.testing.assert_array_equal(a2, b2)
    np.testing.assert_allclose(a1.T @ a1, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(a2 @ a2.T, np.eye(4), atol=1e-12)
    c1, _ = mapper_weights(6, 4, seed=43)
    assert not np.allclose(a1, c1)


def test_gen_vjp_is_the_adjoint(small_model, rng):
    for _ in range(10):
        w = rng.normal(size=small_model.d_w)
        d = rng.normal(size=small_model.d_w)
        cot = rng.normal(size=small_model.n_values)
        eps = 1e-3
        lhs = (gen_flat(small_model, w + eps * d) - gen_flat(small_model, w)) @ cot / eps
        rhs = gen_vjp(small_model, w, cot) @ d
        assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-9)


def test_map_vjp_matches_finite_differences(small_model, rng):
    for _ in range(10):
        z = rng.normal(size=small_model.d_z)
        d = rng.normal(size=small_model.d_z)
        cot = rng.normal(size=small_model.d_w)
        eps = 1e-6
        plus = map_z_to_w(small_model, z + eps * d) @ cot
        minus = map_z_to_w(small_model, z - eps * d) @ cot
        numeric = (plus - minus) / (2 * eps)
        assert numeric == pytest.approx(map_vjp(small_model, z, cot) @ d, rel=1e-6, abs=1e-9)


def test_wrong_latent_size_is_rejected(small_model):
    with pytest.raises(GeneratorError):
        gen_flat(small_model, np.zeros(small_model.d_w + 1))
    with pytest.raises(GeneratorError):
        map_z_to_w(small_model, np.zeros(small_model.d_z + 1))


def test_model_file_round_trip_is_float32(tmp_path, small_model):
    path = tmp_path / "model.texgen"
    save_model(small_model, path)
    again = load_model(path)
    assert (again.size, again.seed, again.d_w) == (small_model.size, small_model.seed, small_model.d_w)
    np.testing.assert_array_equal(again.basis, small_model.basis.astype(np.float32))
    np.testing.assert_array_equal(again.coverage, small_model.coverage)


def test_bad_model_files(tmp_path, small_model):
    path = tmp_path / "model.texgen"
    path.write_bytes(b"NOTAMODEL")
    with pytest.raises(GeneratorError):
        load_model(path)
    save_model(small_model, path)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(GeneratorError, match="truncated"):
        load_model(path)
