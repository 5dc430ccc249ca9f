import numpy as np
import pytest

from uvtex.common.errors import ConfigError, InpaintError
from uvtex.common.external import TMPDIR_ENV, build_command
from uvtex.inpaint.inpaint import InpainterKind, InpainterSpec, inpaint, mirror_columns
from uvtex.projection.texture import TextureMap
from uvtex.stubs.passthrough import FILL_VALUE

STUB = "{python} -m uvtex.stubs.passthrough --in {in} --mask {mask} --out {out} --seed {seed}"


def _half_valid(rng, size=16):
    rgb = rng.uniform(size=(size, size, 3))
    mask = np.zeros((size, size))
    mask[:, : size // 2] = 1.0
    return TextureMap(np.where(mask[:, :, None] > 0, rgb, 0.0), mask)


def test_mirror_columns_about_center():
    np.testing.assert_array_equal(mirror_columns(8, 0.5), [7, 6, 5, 4, 3, 2, 1, 0])
    # an off-center axis maps some columns outside the grid
    assert (mirror_columns(8, 0.25) == -1).sum() == 4


def test_symmetric_fill_mirrors_the_left_half(rng):
    partial = _half_valid(rng)
    out = inpaint(partial, InpainterSpec(kind=InpainterKind.SYMMETRIC))
    np.testing.assert_array_equal(out.rgb[:, 8:], partial.rgb[:, :8][:, ::-1])
    np.testing.assert_array_equal(out.rgb[:, :8], partial.rgb[:, :8])
    assert out.valid.all()


def test_harmonic_fill_preserves_visible_texels(rng):
    partial = _half_valid(rng)
    out = inpaint(partial)
    visible = partial.valid
    np.testing.assert_array_equal(out.rgb[visible], partial.rgb[visible])
    assert out.valid.all()
    assert np.all(np.isfinite(out.rgb))


def test_harmonic_fill_of_constant_data_is_constant():
    rgb = np.zeros((12, 12, 3))
    mask = np.zeros((12, 12))
    rgb[:, :3] = [0.3, 0.5, 0.7]
    mask[:, :3] = 1.0
    out = inpaint(TextureMap(rgb, mask))
    np.testing.assert_allclose(out.rgb, np.broadcast_to([0.3, 0.5, 0.7], rgb.shape), atol=1e-6)


def test_coverage_limits_the_fill(rng):
    partial = _half_valid(rng)
    coverage = np.ones((16, 16), dtype=bool)
    coverage[:, -2:] = False
    out = inpaint(partial, coverage=coverage)
    assert not out.valid[:, -2:].any()
    assert out.valid[:, :-2].all()


def test_no_valid_input_is_an_error():
    empty = TextureMap(np.zeros((8, 8, 3)), np.zeros((8, 8)))
    with pytest.raises(InpaintError) as exc:
        inpaint(empty)
    assert exc.value.phase == "harmonic"


def test_external_requires_a_command():
    with pytest.raises(ConfigError):
        InpainterSpec(kind=InpainterKind.EXTERNAL).validate()
    with pytest.raises(ConfigError):
        InpainterSpec(axis=1.0).validate()


# ============================================================================
# External hook
# ============================================================================


def test_build_command_keeps_paths_with_spaces_whole():
    argv = build_command("tool --in {in} --t {t}", {"in": "/tmp/a b/in.png", "t": "7"})
    assert argv == ["tool", "--in", "/tmp/a b/in.png", "--t", "7"]


def test_external_passthrough_stub(rng, tmp_path, monkeypatch):
    monkeypatch.setenv(TMPDIR_ENV, str(tmp_path))
    partial = _half_valid(rng)
    spec = InpainterSpec(kind=InpainterKind.EXTERNAL, command=STUB, timeout=60)
    out = inpaint(partial, spec)
    visible = partial.valid
    assert out.valid.all()
    np.testing.assert_array_equal(out.rgb[visible], partial.rgb[visible])
    np.testing.assert_allclose(out.rgb[~visible], FILL_VALUE, atol=1 / 255)
    # the temporary directory is cleaned up
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize(
    "command, timeout, phase",
    [
        ("{python} -c 'import sys; sys.exit(3)'", 60, "exit"),
        ("{python} -c pass", 60, "output"),
        ("{python} -c 'import time; time.sleep(30)'", 0.5, "timeout"),
        ("uvtex-no-such-tool {in} {out}", 60, "launch"),
    ],
)
def test_external_failures_name_their_phase(rng, command, timeout, phase):
    spec = InpainterSpec(kind=InpainterKind.EXTERNAL, command=command, timeout=timeout)
    with pytest.raises(InpaintError) as exc:
        inpaint(_half_valid(rng), spec)
    assert exc.value.phase == phase


def test_external_output_size_is_checked(rng):
    command = (
        "{python} -c \"import cv2, numpy as np, sys; "
        "cv2.imwrite(sys.argv[1], np.zeros((4, 4, 3), np.uint8))\" {out}"
    )
    spec = InpainterSpec(kind=InpainterKind.EXTERNAL, command=command, timeout=60)
    with pytest.raises(InpaintError) as exc:
        inpaint(_half_valid(rng), spec)
    assert exc.value.phase == "output"
