import numpy as np
import pytest

from uvtex.common.errors import GeometryError, ObjParseError
from uvtex.geometry.camera import Camera, project_point, project_points, rotation_yaw_pitch
from uvtex.geometry.mesh import load_obj, mesh_edges, save_obj
from uvtex.geometry.raster import (
    NO_TRIANGLE,
    barycentric_coordinates,
    bilinear_sample,
    bilinear_taps,
    perspective_depth,
    rasterize_depth,
    rasterize_triangles_2d,
)

QUAD_OBJ = """\
# unit quad
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vt 0 0
vt 1 0
vt 1 1
vt 0 1
f 1/1 2/2 3/3 4/4
"""


def test_load_obj_fan_triangulates_polygons(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text(QUAD_OBJ)
    mesh = load_obj(path)
    assert mesh.n_vertices == 4
    np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2], [0, 2, 3]])
    np.testing.assert_array_equal(mesh.uv_corners[1], [[0, 0], [1, 1], [0, 1]])


def test_load_obj_negative_indices(tmp_path):
    path = tmp_path / "neg.obj"
    path.write_text(QUAD_OBJ.replace("f 1/1 2/2 3/3 4/4", "f -4/-4 -3/-3 -2/-2"))
    mesh = load_obj(path)
    np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2]])


def test_load_obj_without_uvs_names_the_line(tmp_path):
    path = tmp_path / "nouv.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    with pytest.raises(ObjParseError) as exc:
        load_obj(path)
    assert exc.value.line == 4
    assert "UV" in str(exc.value)


def test_load_obj_index_out_of_range(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text(QUAD_OBJ.replace("4/4\n", "9/4\n"))
    with pytest.raises(ObjParseError):
        load_obj(path)


def test_save_obj_reloads_identically(tmp_path, head):
    path = tmp_path / "head.obj"
    save_obj(head, path)
    again = load_obj(path)
    np.testing.assert_array_equal(again.vertices, head.vertices)
    np.testing.assert_array_equal(again.triangles, head.triangles)
    np.testing.assert_array_equal(again.uv_corners, head.uv_corners)


def test_mesh_edges_of_quad(quad):
    np.testing.assert_array_equal(mesh_edges(quad), [[0, 1], [0, 2], [0, 3], [1, 2], [2, 3]])


# ============================================================================
# Camera
# ============================================================================


def test_camera_rejects_non_orthonormal_rotation():
    camera = Camera(fx=100, fy=100, cx=50, cy=50, rotation=np.diag([1.0, 2.0, 1.0]))
    with pytest.raises(GeometryError):
        camera.validate()


def test_camera_rejects_nonpositive_focal():
    with pytest.raises(GeometryError):
        Camera(fx=0, fy=100, cx=50, cy=50).validate()


def test_project_point_on_axis_hits_principal_point():
    camera = Camera(fx=100, fy=100, cx=64, cy=48, translation=[0, 0, 5])
    u, v, depth = project_point(camera, [0, 0, 0])
    assert (u, v, depth) == (64.0, 48.0, 5.0)


def test_project_point_behind_camera_is_none():
    camera = Camera(fx=100, fy=100, cx=64, cy=48, translation=[0, 0, 5])
    assert project_point(camera, [0, 0, -6]) is None
    uv, _, in_front = project_points(camera, np.array([[0, 0, -6.0], [0, 0, 0]]))
    assert not in_front[0] and in_front[1]
    assert np.all(np.isnan(uv[0]))


def test_frontal_camera_centers_the_mesh(head):
    camera = Camera.frontal(head, 128, 96)
    camera.validate()
    mid = 0.5 * (head.vertices.min(axis=0) + head.vertices.max(axis=0))
    u, v, _ = project_point(camera, mid)
    assert u == pytest.approx(64.0)
    assert v == pytest.approx(48.0)
    # +y is up in the image
    top = project_point(camera, mid + [0, 0.5, 0])
    assert top[1] < v


def test_project_point_ignores_scaling_along_the_ray(rng):
    rotation = rotation_yaw_pitch(20.0, -10.0)
    camera = Camera(fx=120, fy=110, cx=64, cy=48, rotation=rotation, translation=[0.1, -0.2, 4.0])
    for p in 0.5 * rng.normal(size=(20, 3)):
        u, v, depth = project_point(camera, p)
        for scale in rng.uniform(0.5, 3.0, size=3):
            su, sv, sdepth = project_point(camera, camera.center + scale * (p - camera.center))
            assert su == pytest.approx(u, abs=1e-9)
            assert sv == pytest.approx(v, abs=1e-9)
            assert sdepth == pytest.approx(scale * depth, rel=1e-12)


# ============================================================================
# Rasterization
# ============================================================================


def _oracle(tri2d, depths, width, height):
    """Every pixel against every triangle, index order, strict z-test."""
    py, px = np.mgrid[0:height, 0:width] + 0.5
    depth = np.full((height, width), np.inf)
    winner = np.full((height, width), NO_TRIANGLE)
    for i, tri in enumerate(tri2d):
        lam = barycentric_coordinates(tri, px, py)
        inside = np.all(lam >= 0.0, axis=-1)
        z = perspective_depth(lam, depths[i])
        update = inside & (z < depth)
        depth[update] = z[update]
        winner[update] = i
    return winner, depth


def test_rasterizer_matches_brute_force_oracle(rng):
    for _ in range(20):
        tri2d = rng.uniform(-8, 72, size=(100, 3, 2))
        depths = rng.uniform(1.0, 10.0, size=(100, 3))
        buffer = rasterize_triangles_2d(tri2d, 64, 64, depths=depths)
        winner, depth = _oracle(tri2d, depths, 64, 64)
        np.testing.assert_array_equal(buffer.triangle, winner)
        np.testing.assert_array_equal(buffer.depth, depth)


def test_rasterizer_barycentrics_sum_to_one(rng):
    tri2d = rng.uniform(0, 32, size=(10, 3, 2))
    buffer = rasterize_triangles_2d(tri2d, 32, 32)
    sums = buffer.bary[buffer.covered].sum(axis=-1)
    np.testing.assert_allclose(sums, 1.0, atol=1e-6)


def test_rasterizer_ties_go_to_lowest_index():
    tri = [[0, 0], [16, 0], [0, 16]]
    buffer = rasterize_triangles_2d(np.array([tri, tri]), 16, 16, depths=np.ones((2, 3)))
    assert set(np.unique(buffer.triangle)) == {NO_TRIANGLE, 0}


def test_rasterizer_rejects_zero_size_buffer():
    with pytest.raises(GeometryError):
        rasterize_triangles_2d(np.zeros((1, 3, 2)), 0, 16)


def test_rasterize_depth_keeps_nearest_surface(quad):
    near = quad.with_vertices(quad.vertices - [0.5, 0.5, 0.0])
    far = near.with_vertices(near.vertices + [0, 0, 1.0])
    both = near.with_vertices(np.vstack([far.vertices, near.vertices]))
    both.triangles = np.vstack([far.triangles, near.triangles + 4])
    both.uv_corners = np.vstack([far.uv_corners, near.uv_corners])
    camera = Camera(fx=20, fy=20, cx=16, cy=16, translation=[0, 0, 3])
    buffer = rasterize_depth(both, camera, 32, 32)
    # the center pixel sees a near triangle at depth 3
    assert buffer.triangle[16, 16] in (2, 3)
    assert buffer.depth[16, 16] == pytest.approx(3.0)


def test_bilinear_sample_at_pixel_center_returns_pixel(rng):
    image = rng.uniform(size=(8, 10, 3))
    np.testing.assert_allclose(bilinear_sample(image, 3.5, 2.5), image[2, 3])
    # outside the frame clamps to the border centers
    np.testing.assert_allclose(bilinear_sample(image, -4.0, -4.0), image[0, 0])


def test_bilinear_taps_weights_sum_to_one(rng):
    x = rng.uniform(-2, 12, size=50)
    y = rng.uniform(-2, 12, size=50)
    _, weights = bilinear_taps(x, y, 10, 10)
    np.testing.assert_allclose(weights.sum(axis=-1), 1.0)


def test_bilinear_sample_is_linear_in_the_image(rng):
    a = rng.uniform(size=(6, 9, 3))
    b = rng.uniform(size=(6, 9, 3))
    x = rng.uniform(-2, 11, size=40)
    y = rng.uniform(-2, 8, size=40)
    combined = bilinear_sample(0.7 * a - 1.3 * b, x, y)
    expected = 0.7 * bilinear_sample(a, x, y) - 1.3 * bilinear_sample(b, x, y)
    np.testing.assert_allclose(combined, expected, atol=1e-12)
