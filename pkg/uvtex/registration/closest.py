"""
Exact closest-point queries against a triangle mesh.

Candidates are pruned with a k-d tree over triangle centroids: the best of
the k nearest centroids gives an upper bound d on the answer, and only
triangles whose centroid lies within d + (largest centroid-to-corner
radius) can beat it. The surviving candidates are scored exactly, so the
result equals the brute-force minimum. Exact distance ties go to the
smallest triangle index.
"""

import numpy as np
from scipy.spatial import cKDTree

from ..geometry.mesh import Mesh, face_normals

KNN_BOUND = 8


def _closest_on_segments(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return a + t[:, None] * ab


def _dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, y)


def closest_point_on_triangles(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """
    Row-wise closest point on triangle (a, b, c) to p, all (n, 3).

    Voronoi-region walk over vertices, edges and the face interior.
    Degenerate triangles fall back to their nearest edge.
    """
    p, a, b, c = (np.asarray(x, dtype=np.float64).reshape(-1, 3) for x in (p, a, b, c))

    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = _dot(ab, ap), _dot(ac, ap)
    bp = p - b
    d3, d4 = _dot(ab, bp), _dot(ac, bp)
    cp = p - c
    d5, d6 = _dot(ab, cp), _dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        on_ab = a + (d1 / (d1 - d3))[:, None] * ab
        on_ac = a + (d2 / (d2 - d6))[:, None] * ac
        on_bc = b + ((d4 - d3) / ((d4 - d3) + (d5 - d6)))[:, None] * (c - b)
        denom = 1.0 / (va + vb + vc)
        inside = a + (vb * denom)[:, None] * ab + (vc * denom)[:, None] * ac

    conditions = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
    ]
    choices = [a, b, on_ab, c, on_ac, on_bc]
    result = inside.copy()
    taken = np.zeros(len(p), dtype=bool)
    for cond, choice in zip(conditions, choices):
        pick = cond & ~taken
        result[pick] = choice[pick]
        taken |= pick

    bad = ~np.all(np.isfinite(result), axis=1)
    if bad.any():
        pb = p[bad]
        edges = [
            _closest_on_segments(pb, a[bad], b[bad]),
            _closest_on_segments(pb, b[bad], c[bad]),
            _closest_on_segments(pb, c[bad], a[bad]),
        ]
        dists = np.stack([np.linalg.norm(e - pb, axis=1) for e in edges], axis=1)
        best = np.argmin(dists, axis=1)
        result[bad] = np.stack(edges, axis=1)[np.arange(len(pb)), best]
    return result


class SurfaceIndex:
    """Nearest-surface-point queries for one target mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.corners = mesh.corners()
        self.normals, _ = face_normals(mesh)
        self.centroids = self.corners.mean(axis=1)
        self.radius = float(
            np.max(np.linalg.norm(self.corners - self.centroids[:, None, :], axis=2))
        )
        self._tree = cKDTree(self.centroids)

    def _score(self, p: np.ndarray, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        tri = self.corners[candidates]
        rep = np.broadcast_to(p, (len(candidates), 3))
        points = closest_point_on_triangles(rep, tri[:, 0], tri[:, 1], tri[:, 2])
        return points, np.linalg.norm(points - p, axis=1)

    def query(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        Closest surface points for a batch of queries.

        Returns:
            (closest (n, 3), triangle (n,), normal (n, 3), distance (n,))
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        m = len(self.centroids)
        k = min(KNN_BOUND, m)

        closest = np.empty_like(points)
        triangle = np.empty(len(points), dtype=np.int64)
        distance = np.empty(len(points))

        _, knn = self._tree.query(points, k=k)
        knn = np.asarray(knn).reshape(len(points), k)
        for n, p in enumerate(points):
            _, bound_d = self._score(p, knn[n])
            bound = float(bound_d.min())
            near = self._tree.query_ball_point(p, bound + self.radius + 1e-12)
            candidates = np.unique(np.concatenate([np.asarray(near, dtype=np.int64), knn[n]]))
            hits, dists = self._score(p, candidates)
            best = int(np.argmin(dists))
            closest[n] = hits[best]
            triangle[n] = candidates[best]
            distance[n] = dists[best]

        return closest, triangle, self.normals[triangle], distance


def closest_surface_point(target: Mesh, p) -> tuple[np.ndarray, int, np.ndarray]:
    """
    Exact nearest point on the target surface.

    Returns:
        (point, triangle index, unit face normal)
    """
    closest, triangle, normal, _ = SurfaceIndex(target).query(np.asarray(p).reshape(1, 3))
    return closest[0], int(triangle[0]), normal[0]
