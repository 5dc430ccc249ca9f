import math

import numpy as np
import pytest

from uvtex.common.errors import MetricError
from uvtex.metrics.quality import psnr, ssim
from uvtex.metrics.report import (
    MetricReport,
    evaluate_textures,
    generate_report,
    load_report,
)
from uvtex.projection.texture import TextureMap


def test_psnr_of_one_level_offset(rng):
    a = rng.uniform(0.1, 0.9, size=(32, 32, 3))
    assert psnr(a, a + 1 / 255) == pytest.approx(48.13, abs=0.01)


def test_psnr_of_identical_inputs_is_infinite(rng):
    a = rng.uniform(size=(16, 16, 3))
    assert math.isinf(psnr(a, a.copy()))


def test_psnr_falls_as_noise_grows(rng):
    a = rng.uniform(size=(32, 32, 3))
    noise = rng.normal(size=a.shape)
    values = [psnr(a, a + amplitude * noise) for amplitude in (0.01, 0.03, 0.1, 0.3)]
    assert values == sorted(values, reverse=True)


def test_psnr_mask_restricts_the_comparison(rng):
    a = rng.uniform(size=(16, 16, 3))
    b = a.copy()
    b[:, 8:] = 0.0
    mask = np.zeros((16, 16))
    mask[:, :8] = 1.0
    assert math.isinf(psnr(a, b, mask))
    assert psnr(TextureMap.full(a), TextureMap.full(b)) < 30


def test_ssim_identity_and_symmetry(rng):
    a = rng.uniform(size=(24, 24, 3))
    b = np.clip(a + 0.1 * rng.normal(size=a.shape), 0.0, 1.0)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 <= ssim(a, b) < 1.0


def test_ssim_of_checkerboard_against_its_inverse_is_negative():
    cells = (np.indices((32, 32)) // 4).sum(axis=0) % 2
    board = np.repeat(cells[:, :, None], 3, axis=2).astype(np.float64)
    assert ssim(board, 1.0 - board) < 0.0


def test_metric_errors(rng):
    a = rng.uniform(size=(16, 16, 3))
    with pytest.raises(MetricError):
        psnr(a, a[:8])
    with pytest.raises(MetricError):
        psnr(a, a, np.zeros((16, 16)))
    with pytest.raises(MetricError):
        psnr(a, a, np.ones((8, 8)))
    with pytest.raises(MetricError):
        ssim(a[:8, :8], a[:8, :8])


def test_report_serializes_infinity(tmp_path, rng):
    texture = TextureMap.full(rng.uniform(size=(16, 16, 3)))
    visible = np.zeros((16, 16), dtype=bool)
    visible[4:12, 4:12] = True
    reports = evaluate_textures(texture, texture, visible)
    assert [r.key for r in reports] == ["final/texture/full", "final/texture/visible"]
    assert reports[0].to_dict()["psnr"] == "inf"
    assert reports[1].count == 64

    path = tmp_path / "report.json"
    summary = generate_report(reports, path)
    assert "PSNR=infdB" in summary
    assert load_report(path) == reports


def test_report_without_visible_texels(rng):
    texture = TextureMap.full(rng.uniform(size=(16, 16, 3)))
    reports = evaluate_textures(texture, texture, np.zeros((16, 16)))
    assert len(reports) == 1


def test_report_file_is_stable(tmp_path):
    report = MetricReport("final", "texture", "full", 31.5, 0.9, 256)
    generate_report([report], tmp_path / "a.json")
    generate_report([report], tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert report.summary() == "final/texture/full PSNR=31.50dB SSIM=0.9000"
