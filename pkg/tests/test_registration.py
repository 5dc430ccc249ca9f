import numpy as np
import pytest

from uvtex.common.errors import ConfigError, RegistrationError
from uvtex.fixtures import icosphere, move_mesh, warp_mesh
from uvtex.geometry.camera import rotation_yaw_pitch
from uvtex.geometry.mesh import bbox_diagonal
from uvtex.registration.closest import SurfaceIndex, closest_point_on_triangles, closest_surface_point
from uvtex.registration.nicp import (
    NicpParams,
    load_landmarks,
    nicp_register,
    rigid_align,
    similarity_align,
    umeyama,
)


def test_closest_point_matches_brute_force(rng):
    target = icosphere(subdivisions=1)
    corners = target.corners()
    queries = rng.uniform(-1.5, 1.5, size=(200, 3))
    _, _, _, distance = SurfaceIndex(target).query(queries)
    for p, d in zip(queries, distance):
        rep = np.broadcast_to(p, (len(corners), 3))
        points = closest_point_on_triangles(rep, corners[:, 0], corners[:, 1], corners[:, 2])
        assert d == pytest.approx(np.linalg.norm(points - p, axis=1).min(), abs=1e-9)


def test_closest_point_regions():
    a, b, c = np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]]), np.array([[0.0, 1, 0]])
    cases = {
        (0.2, 0.2, 1.0): (0.2, 0.2, 0.0),  # face interior
        (-1.0, -1.0, 0.0): (0.0, 0.0, 0.0),  # vertex a
        (0.5, -2.0, 0.0): (0.5, 0.0, 0.0),  # edge ab
        (1.0, 1.0, 0.0): (0.5, 0.5, 0.0),  # edge bc
    }
    for p, expected in cases.items():
        got = closest_point_on_triangles(np.array([p]), a, b, c)[0]
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_closest_surface_point_on_quad(quad):
    point, triangle, normal = closest_surface_point(quad, [0.3, 0.6, 2.0])
    np.testing.assert_allclose(point, [0.3, 0.6, 0.0], atol=1e-12)
    assert triangle == 1
    np.testing.assert_allclose(normal, [0.0, 0.0, 1.0], atol=1e-12)


def test_nicp_recovers_translated_template(head):
    target = head.with_vertices(head.vertices + [0.1, 0.0, 0.0])
    registered = nicp_register(head, target)
    error = np.linalg.norm(registered.vertices - target.vertices, axis=1).mean()
    assert error <= 1e-4 * bbox_diagonal(target.vertices)
    np.testing.assert_array_equal(registered.triangles, head.triangles)
    np.testing.assert_array_equal(registered.uv_corners, head.uv_corners)


def test_nicp_identity_is_a_fixed_point(head):
    registered = nicp_register(head, head)
    np.testing.assert_allclose(registered.vertices, head.vertices, atol=1e-6)


def test_nicp_history_records_each_solve(head):
    target = head.with_vertices(1.1 * head.vertices)
    history = []
    params = NicpParams(stiffness=(10.0, 1.0), max_iterations=3)
    nicp_register(head, target, params, history)
    assert history
    assert {h.stiffness for h in history} == {10.0, 1.0}
    assert all(h.iteration < 3 for h in history)


def test_nicp_fails_when_every_correspondence_is_pruned(head):
    target = icosphere(subdivisions=2)
    params = NicpParams(distance_cutoff=1e-9)
    with pytest.raises(RegistrationError) as exc:
        nicp_register(head, target, params)
    assert exc.value.stiffness == params.stiffness[0]


def test_nicp_rejects_non_finite_input(head):
    bad = head.with_vertices(head.vertices.copy())
    bad.vertices[0, 0] = np.nan
    with pytest.raises(RegistrationError):
        nicp_register(bad, head)


def test_nicp_params_validation():
    with pytest.raises(ConfigError):
        NicpParams(stiffness=(1.0, 10.0)).validate()
    with pytest.raises(ConfigError):
        NicpParams(stiffness=()).validate()
    with pytest.raises(ConfigError):
        NicpParams(landmarks=[[0, 1.0, 2.0]]).validate()


def test_nicp_landmark_out_of_range(head):
    params = NicpParams(landmarks=[[head.n_vertices, 0.0, 0.0, 0.0]])
    with pytest.raises(RegistrationError):
        nicp_register(head, head, params)


def test_load_landmarks(tmp_path):
    path = tmp_path / "landmarks.txt"
    path.write_text("# index x y z\n3 0.1 0.2 0.3\n\n7 1 2 3  # nose\n")
    assert load_landmarks(path) == [[3, 0.1, 0.2, 0.3], [7, 1.0, 2.0, 3.0]]
    path.write_text("3 0.1 0.2\n")
    with pytest.raises(ConfigError):
        load_landmarks(path)


# ============================================================================
# Rigid start and warped targets
# ============================================================================


def test_umeyama_recovers_a_similarity(rng):
    source = rng.normal(size=(30, 3))
    rotation = rotation_yaw_pitch(40.0, -25.0)
    target = 1.3 * source @ rotation.T + [0.5, -1.0, 2.0]
    got_rotation, scale, shift = umeyama(source, target)
    np.testing.assert_allclose(got_rotation, rotation, atol=1e-10)
    assert scale == pytest.approx(1.3, abs=1e-10)
    np.testing.assert_allclose(shift, [0.5, -1.0, 2.0], atol=1e-10)


def test_umeyama_never_reflects(rng):
    source = rng.normal(size=(20, 3))
    mirrored = source * [-1.0, 1.0, 1.0]
    rotation, _, _ = umeyama(source, mirrored)
    assert np.linalg.det(rotation) == pytest.approx(1.0)


def test_rigid_align_without_iterations_is_the_box_alignment(head):
    target = move_mesh(head, yaw_deg=20.0)
    np.testing.assert_array_equal(rigid_align(head, target, 0), similarity_align(head, target))


@pytest.mark.parametrize("yaw, pitch", [(30.0, 0.0), (-30.0, 0.0), (20.0, 15.0)])
def test_nicp_recovers_rotated_template(head, yaw, pitch):
    target = move_mesh(head, yaw_deg=yaw, pitch_deg=pitch, translation=(0.05, -0.02, 0.1))
    registered = nicp_register(head, target)
    error = np.linalg.norm(registered.vertices - target.vertices, axis=1).mean()
    assert error <= 1e-3 * bbox_diagonal(target.vertices)


def test_warp_mesh_amplitude(head):
    warped = warp_mesh(head, amplitude=0.02)
    offset = np.linalg.norm(warped.vertices - head.vertices, axis=1)
    assert offset.max() == pytest.approx(0.02 * bbox_diagonal(head.vertices), rel=1e-3)
    np.testing.assert_array_equal(warped.triangles, head.triangles)


def test_nicp_recovers_rigid_and_warped_template(head):
    target = move_mesh(
        warp_mesh(head, amplitude=0.02), yaw_deg=15.0, pitch_deg=-5.0, translation=(0.05, 0.0, -0.03)
    )
    registered = nicp_register(head, target)
    error = np.linalg.norm(registered.vertices - target.vertices, axis=1).mean()
    assert error <= 0.01 * bbox_diagonal(target.vertices)
    assert registered.triangles.tobytes() == head.triangles.tobytes()
    assert registered.uv_corners.tobytes() == head.uv_corners.tobytes()
