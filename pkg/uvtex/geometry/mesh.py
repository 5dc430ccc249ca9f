"""
Fixed-topology triangle meshes with per-corner UVs, and OBJ I/O.

OBJ faces must reference texture coordinates (`f v/vt` or `f v/vt/vn`);
polygons are fan-triangulated. `vt` values are used as written: texel row r
of a side-S texture has its center at v = (r + 0.5) / S.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..common.errors import MeshError, ObjParseError
from ..common.log import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

UV_TOLERANCE = 1e-9


@dataclass
class Mesh:
    """
    Triangle mesh with per-corner UV coordinates.

    Attributes:
        vertices: (n, 3) positions in model units
        triangles: (m, 3) vertex indices
        uv_corners: (m, 3, 2) UV coordinate of each triangle corner, in [0, 1]^2
        normals: Optional (n, 3) unit vertex normals
    """

    vertices: np.ndarray
    triangles: np.ndarray
    uv_corners: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.uv_corners = np.asarray(self.uv_corners, dtype=np.float64).reshape(-1, 3, 2)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def validate(self) -> None:
        """Check the structural invariants; raise MeshError on violation."""
        if self.n_triangles == 0:
            raise MeshError("mesh has no triangles")
        if len(self.uv_corners) != self.n_triangles:
            raise MeshError(
                f"{len(self.uv_corners)} UV triples for {self.n_triangles} triangles"
            )
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices:
            raise MeshError("triangle index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("mesh has non-finite vertices")
        uv = self.uv_corners
        if uv.min() < -UV_TOLERANCE or uv.max() > 1.0 + UV_TOLERANCE:
            raise MeshError("UV coordinates outside [0, 1]^2")
        if self.normals is not None and self.normals.shape != self.vertices.shape:
            raise MeshError("normals do not match vertex count")

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        """Same topology and UVs, new positions (normals dropped)."""
        return replace(self, vertices=np.array(vertices, dtype=np.float64), normals=None)

    def corners(self) -> np.ndarray:
        """(m, 3, 3) vertex positions of each triangle corner."""
        return self.vertices[self.triangles]


def bbox_diagonal(points: np.ndarray) -> float:
    """Length of the diagonal of the axis-aligned bounding box."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def face_normals(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """
    Unit face normals and face areas.

    Degenerate faces get a zero normal.
    """
    corners = mesh.corners()
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    norm = np.linalg.norm(cross, axis=1)
    safe = np.where(norm > 0, norm, 1.0)
    return cross / safe[:, None] * (norm > 0)[:, None], 0.5 * norm


def vertex_normals(mesh: Mesh) -> np.ndarray:
    """Area-weighted unit vertex normals."""
    corners = mesh.corners()
    # unnormalized cross product is already area-weighted
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    accum = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(accum, mesh.triangles[:, k], cross)
    norm = np.linalg.norm(accum, axis=1)
    safe = np.where(norm > 0, norm, 1.0)
    return accum / safe[:, None]


def mesh_edges(mesh: Mesh) -> np.ndarray:
    """(e, 2) unique undirected edges, sorted lexicographically."""
    tri = mesh.triangles
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    return np.unique(edges, axis=0)


def _resolve_index(token: str, count: int, kind: str, lineno: int) -> int:
    try:
        index = int(token)
    except ValueError:
        raise ObjParseError(f"invalid {kind} index '{token}'", lineno)
    if index == 0:
        raise ObjParseError(f"{kind} index 0 (OBJ indices are 1-based)", lineno)
    # negative indices are relative to the elements read so far
    resolved = count + index if index < 0 else index - 1
    if resolved < 0:
        raise ObjParseError(f"{kind} index {index} out of range", lineno)
    return resolved


def load_obj(path: PathLike) -> Mesh:
    """
    Load a triangle mesh with UVs from an ASCII OBJ file.

    Args:
        path: OBJ file with `v`, `vt` and `f v/vt[/vn]` records

    Returns:
        Mesh with per-corner UVs in file order

    Raises:
        ObjParseError: malformed record, missing UVs or out-of-range index
    """
    positions: list[list[float]] = []
    uvs: list[list[float]] = []
    file_normals: list[list[float]] = []
    # (vertex, uv, normal) per corner, with the line that introduced it
    faces: list[tuple[list[tuple[int, int, Optional[int]]], int]] = []

    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == "v":
                    positions.append([float(x) for x in parts[1:4]])
                    if len(positions[-1]) != 3:
                        raise ValueError
                elif tag == "vt":
                    uvs.append([float(x) for x in parts[1:3]])
                    if len(uvs[-1]) != 2:
                        raise ValueError
                elif tag == "vn":
                    file_normals.append([float(x) for x in parts[1:4]])
                    if len(file_normals[-1]) != 3:
                        raise ValueError
            except ValueError:
                raise ObjParseError(f"malformed '{tag}' record", lineno)

            if tag != "f":
                continue
            if len(parts) < 4:
                raise ObjParseError("face with fewer than 3 corners", lineno)
            corners = []
            for token in parts[1:]:
                fields = token.split("/")
                if len(fields) < 2 or not fields[1]:
                    raise ObjParseError("mesh lacks UV parameterization", lineno)
                v = _resolve_index(fields[0], len(positions), "vertex", lineno)
                vt = _resolve_index(fields[1], len(uvs), "texture", lineno)
                vn = None
                if len(fields) > 2 and fields[2]:
                    vn = _resolve_index(fields[2], len(file_normals), "normal", lineno)
                corners.append((v, vt, vn))
            faces.append((corners, lineno))

    triangles, uv_corners, normal_refs = [], [], []
    for corners, lineno in faces:
        for v, vt, vn in corners:
            if v >= len(positions):
                raise ObjParseError(f"vertex index {v + 1} out of range", lineno)
            if vt >= len(uvs):
                raise ObjParseError(f"texture index {vt + 1} out of range", lineno)
            if vn is not None and vn >= len(file_normals):
                raise ObjParseError(f"normal index {vn + 1} out of range", lineno)
        # fan triangulation
        for k in range(1, len(corners) - 1):
            tri = (corners[0], corners[k], corners[k + 1])
            triangles.append([c[0] for c in tri])
            uv_corners.append([uvs[c[1]] for c in tri])
            normal_refs.append([c[2] for c in tri])

    if not triangles:
        raise ObjParseError("no faces found")

    normals = None
    if file_normals and all(n is not None for refs in normal_refs for n in refs):
        normals = np.zeros((len(positions), 3))
        for tri, refs in zip(triangles, normal_refs):
            for v, n in zip(tri, refs):
                normals[v] = file_normals[n]
        length = np.linalg.norm(normals, axis=1)
        normals = normals / np.where(length > 0, length, 1.0)[:, None]

    mesh = Mesh(
        vertices=np.array(positions, dtype=np.float64),
        triangles=np.array(triangles, dtype=np.int64),
        uv_corners=np.array(uv_corners, dtype=np.float64),
        normals=normals,
    )
    mesh.validate()

    overlaps = uv_overlap_count(mesh)
    if overlaps:
        logger.warning(f"[obj] {path}: UV charts overlap at {overlaps} sampled texels")
    return mesh


def save_obj(mesh: Mesh, path: PathLike) -> None:
    """Write a mesh as OBJ with full-precision coordinates and shared `vt` records."""
    flat_uv = mesh.uv_corners.reshape(-1, 2)
    unique_uv, inverse = np.unique(flat_uv, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1, 3)

    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for u, v in unique_uv:
        lines.append(f"vt {float(u)!r} {float(v)!r}")
    for tri, uv_idx in zip(mesh.triangles, inverse):
        lines.append(
            "f " + " ".join(f"{int(a) + 1}/{int(b) + 1}" for a, b in zip(tri, uv_idx))
        )

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def uv_overlap_count(mesh: Mesh, resolution: int = 256) -> int:
    """Number of sampled texel centers strictly inside more than one UV triangle."""
    from .raster import coverage_counts

    counts = coverage_counts(mesh.uv_corners * resolution, resolution, resolution)
    return int(np.count_nonzero(counts > 1))
