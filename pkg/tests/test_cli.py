import numpy as np

from uvtex.cli import main
from uvtex.common.imageio import save_image


def _images(tmp_path, rng):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    image = rng.uniform(size=(16, 16, 3))
    save_image(a, image)
    save_image(b, image)
    return a, b


def test_no_command_prints_help(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().out.lower()


def test_metrics_of_identical_files(tmp_path, rng, capsys):
    a, b = _images(tmp_path, rng)
    report = tmp_path / "report.json"
    assert main(["metrics", str(a), str(b), "--out", str(report)]) == 0
    assert "PSNR=inf" in capsys.readouterr().out
    assert report.exists()


def test_metrics_runtime_error_exits_2(tmp_path, rng):
    a, _ = _images(tmp_path, rng)
    small = tmp_path / "small.png"
    save_image(small, np.zeros((8, 8, 3)))
    assert main(["metrics", str(a), str(small)]) == 2


def test_unknown_config_key_exits_1(tmp_path):
    argv = ["synth-corpus", "--n", "2", "--out", str(tmp_path), "--set", "texture.bogus=1"]
    assert main(argv) == 1


def test_synth_corpus_is_reproducible(tmp_path):
    for name in ("one", "two"):
        argv = ["synth-corpus", "--n", "3", "--seed", "1", "--size", "16", "--out", str(tmp_path / name)]
        assert main(argv) == 0
    one = sorted((tmp_path / "one").iterdir())
    two = sorted((tmp_path / "two").iterdir())
    assert [p.name for p in one] == [p.name for p in two]
    assert all(p.read_bytes() == q.read_bytes() for p, q in zip(one, two))


def test_list_ablations(capsys):
    assert main(["list-ablations"]) == 0
    out = capsys.readouterr().out
    assert "no-init" in out and "full" in out
    for name in "abcdef":
        assert f"\n{name} " in out


def test_unknown_ablation_exits_1(scene, tmp_path):
    argv = ["pipeline", "-c", str(scene.config_path), "--out", str(tmp_path), "--ablation", "zz"]
    assert main(argv) == 1


def test_pipeline_command(scene, tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["pipeline", "-c", str(scene.config_path), "--out", str(out), "--ablation", "no-init"]
    for override in (
        "stages.register=false",
        "schedule.z_steps=3",
        "schedule.w_steps=3",
        "schedule.correct_steps=3",
        "enhance.steps=10",
    ):
        argv += ["--set", override]
    assert main(argv) == 0
    printed = capsys.readouterr().out
    assert "final" in printed and "T_sd" not in printed
    assert (out / "final" / "texture.png").exists()
