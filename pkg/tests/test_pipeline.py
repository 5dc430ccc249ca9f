import json
import shutil
import time

import numpy as np
import pytest

from uvtex.common.errors import ConfigError, InpaintError, StageError
from uvtex.fixtures import make_fixture
from uvtex.generator.model import gen_flat
from uvtex.metrics.report import load_report
from uvtex.pipeline import runner
from uvtex.pipeline.config import ALL_ABLATIONS, apply_ablation, get_ablation, load_config
from uvtex.pipeline.runner import LOCK_NAME, run_pipeline
from uvtex.projection.texture import load_texture

ARTIFACTS = {"T_proj", "T_sd", "T_init", "T_inv", "T_opt", "final"}

FAST = [
    "stages.register=false",
    "schedule.z_steps=5",
    "schedule.w_steps=5",
    "schedule.correct_steps=5",
    "enhance.steps=20",
]


def _config(scene, out, *overrides):
    return load_config(scene.config_path, [f"paths.output_dir={out}", *overrides])


def _tree(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_fast_run_writes_every_artifact(scene, tmp_path):
    out = tmp_path / "out"
    result = run_pipeline(_config(scene, out, *FAST, "paths.ground_truth=null"))
    assert set(result.textures) == ARTIFACTS
    for path in result.textures.values():
        assert path.exists()
        assert path.with_name(path.stem + ".mask.png").exists()
    assert (out / "traces" / "invert.csv").exists()
    assert (out / "traces" / "correct.csv").exists()
    assert not (out / "traces" / "nicp.csv").exists()
    assert not (out / "report.json").exists()
    assert not (out / LOCK_NAME).exists()
    assert json.loads((out / "config.json").read_text())["paths"]["output_dir"] == "."
    assert json.loads((out / "project" / "camera.json").read_text())["width"] == 128


def test_identical_runs_write_identical_bytes(scene, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    run_pipeline(_config(scene, first, *FAST))
    run_pipeline(_config(scene, second, *FAST))
    assert _tree(first) == _tree(second)


def test_resume_rebuilds_deleted_stages(scene, tmp_path):
    out = tmp_path / "out"
    config = _config(scene, out, *FAST, "paths.ground_truth=null")
    run_pipeline(config)
    before = _tree(out)
    shutil.rmtree(out / "correct")
    shutil.rmtree(out / "final")
    run_pipeline(config, resume=True)
    assert _tree(out) == before


def test_locked_output_directory(scene, tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    (out / LOCK_NAME).write_text("12345")
    with pytest.raises(ConfigError, match="in use"):
        run_pipeline(_config(scene, out, *FAST))
    assert (out / LOCK_NAME).exists()


def test_no_init_skips_inpaint_and_fuse(scene, tmp_path):
    out = tmp_path / "out"
    config = apply_ablation(_config(scene, out, *FAST), get_ablation("no-init"))
    result = run_pipeline(config)
    assert set(result.textures) == ARTIFACTS - {"T_sd", "T_init"}
    assert not (out / "inpaint").exists()
    assert not (out / "fuse").exists()


def test_disabled_enhancement_keeps_t_opt(scene, tmp_path):
    out = tmp_path / "out"
    run_pipeline(_config(scene, out, *FAST, "stages.enhance=false"))
    final = load_texture(out / "final" / "texture")
    t_opt = load_texture(out / "correct" / "T_opt")
    assert (final.rgb == t_opt.rgb).all()


def test_enhance_receives_unquantized_t_opt(scene, tmp_path, monkeypatch):
    seen = []

    def enhance(t_opt, *args, **kwargs):
        seen.append(t_opt)
        return t_opt

    monkeypatch.setattr(runner, "enhance_texture", enhance)
    out = tmp_path / "out"
    run_pipeline(_config(scene, out, *FAST, "paths.ground_truth=null"))
    (t_opt,) = seen
    latent = np.load(out / "correct" / "latent.npy")
    np.testing.assert_array_equal(t_opt.rgb.reshape(-1), gen_flat(scene.model, latent))
    assert not np.array_equal(t_opt.rgb, load_texture(out / "correct" / "T_opt").rgb)


def test_stage_failure_names_the_stage(scene, tmp_path):
    out = tmp_path / "out"
    config = _config(
        scene,
        out,
        *FAST,
        "inpainter.kind=external",
        "inpainter.command={python} -c 'import sys; sys.exit(4)'",
    )
    with pytest.raises(StageError) as exc:
        run_pipeline(config)
    assert exc.value.stage == "inpaint"
    assert isinstance(exc.value.cause, InpaintError)
    assert (out / "project" / "T_proj.png").exists()
    assert not (out / LOCK_NAME).exists()


@pytest.mark.parametrize("setting", ALL_ABLATIONS, ids=lambda a: a.name)
def test_every_ablation_completes(scene, tmp_path, setting):
    out = tmp_path / "out"
    result = run_pipeline(apply_ablation(_config(scene, out, *FAST), setting))
    keys = {r.key for r in load_report(out / "report.json")}
    assert "final/texture/full" in keys
    assert "final/render/visible" in keys
    assert keys == {r.key for r in result.reports}


# ============================================================================
# End to end
# ============================================================================


def _check_end_to_end(scene, out):
    start_time = time.perf_counter()
    result = run_pipeline(_config(scene, out))
    elapsed = time.perf_counter() - start_time
    assert set(result.textures) == ARTIFACTS
    assert (out / "traces" / "nicp.csv").exists()

    reports = {r.key: r for r in load_report(out / "report.json")}
    assert reports["final/texture/visible"].psnr >= 35.0
    assert reports["T_opt/texture/full"].psnr >= reports["T_sd/texture/full"].psnr
    return elapsed


@pytest.mark.slow
def test_synthetic_scene_end_to_end(scene, tmp_path):
    _check_end_to_end(scene, tmp_path / "out")


@pytest.mark.slow
def test_full_size_scene_end_to_end_within_five_minutes(tmp_path):
    scene = make_fixture(tmp_path / "scene", size=256, image_size=512)
    assert scene.model.size == 256
    elapsed = _check_end_to_end(scene, tmp_path / "out")
    assert elapsed < 300.0
