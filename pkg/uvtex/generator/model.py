"""
Linear eigen-texture generator with a fixed Z -> W mapper.

    T(w) = mu + B diag(sigma) w          (W space, B has orthonormal columns)
    w(z) = A2 tanh(A1 z) + b             (Z space, A1 and A2 orthogonal)

Textures are flattened row-major as (S * S * 3,) vectors. Values are never
clamped here.

Model container layout:

    b"TEXGEN1\\n" | uint32 LE header length | JSON header | float32 LE data

The header lists every array as {"name", "shape", "offset"} with offsets
relative to the start of the data block.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..common.errors import GeneratorError
from ..common.log import get_logger
from ..projection.texture import TextureMap

logger = get_logger(__name__)

PathLike = Union[str, Path]

MAGIC = b"TEXGEN1\n"
# singular values from Gram eigenvalues resolve only to about 1e-8 relative
RANK_TOLERANCE = 1e-6
GRAM_CHUNK = 1 << 16

_ARRAYS = ("mean", "basis", "sigma", "a1", "a2", "bias", "coverage")


@dataclass
class GeneratorModel:
    """
    Attributes:
        size: Texture side S
        mean: (S*S*3,) mean texture
        basis: (S*S*3, d_w) orthonormal directions
        sigma: (d_w,) positive, non-increasing scales
        a1: (d_z, d_z) orthogonal
        a2: (d_w, d_z) orthonormal rows or columns
        bias: (d_w,)
        coverage: (S, S) validity given to generated textures
        seed: Mapper seed
    """

    size: int
    mean: np.ndarray
    basis: np.ndarray
    sigma: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    bias: np.ndarray
    coverage: np.ndarray
    seed: int = 42

    @property
    def d_w(self) -> int:
        return self.basis.shape[1]

    @property
    def d_z(self) -> int:
        return self.a1.shape[0]

    @property
    def n_values(self) -> int:
        return self.size * self.size * 3

    def mean_texture(self) -> np.ndarray:
        return self.mean.reshape(self.size, self.size, 3)


def mapper_weights(d_z: int, d_w: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal A1 (d_z x d_z) and A2 (d_w x d_z) from a seeded Gaussian QR."""
    rng = np.random.default_rng(seed)

    def orthogonal(rows: int, cols: int) -> np.ndarray:
        tall = rows >= cols
        g = rng.standard_normal((rows, cols) if tall else (cols, rows))
        q, r = np.linalg.qr(g)
        q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
        return q if tall else q.T

    return orthogonal(d_z, d_z), orthogonal(d_w, d_z)


def _flatten_corpus(corpus) -> tuple[np.ndarray, float, Optional[np.ndarray]]:
    if isinstance(corpus, np.ndarray):
        data = corpus
        masks = None
    else:
        data = np.stack([t.rgb for t in corpus])
        masks = np.stack([t.valid for t in corpus])
    if data.ndim != 4 or data.shape[3] != 3 or data.shape[1] != data.shape[2]:
        raise GeneratorError(f"corpus must be (n, S, S, 3), got {data.shape}")
    if data.dtype == np.uint16:
        scale = 1.0 / 65535.0
    elif data.dtype == np.uint8:
        scale = 1.0 / 255.0
    else:
        scale = 1.0
    coverage = masks.all(axis=0) if masks is not None else None
    return data.reshape(len(data), -1), scale, coverage


def fit_pca(
    corpus,
    d_w: int,
    seed: int = 42,
    d_z: Optional[int] = None,
    coverage: Optional[np.ndarray] = None,
) -> GeneratorModel:
    """
    Fit the generator to a corpus by PCA.

    Singular directions come from the eigendecomposition of the n x n Gram
    matrix of the centered corpus, accumulated in float64 over texel
    chunks. Each direction's largest-magnitude entry is made positive.

    Args:
        corpus: TextureMaps, or an (n, S, S, 3) float/uint8/uint16 array
        d_w: Latent dimension (<= n - 1)
        seed: Mapper seed
        d_z: Z dimension; defaults to d_w
        coverage: (S, S) validity of generated textures; defaults to
            texels valid in every corpus member

    Raises:
        GeneratorError: too few textures or a rank-deficient corpus
    """
    data, scale, corpus_coverage = _flatten_corpus(corpus)
    n, dim = data.shape
    size = int(round(np.sqrt(dim / 3)))
    if d_w < 1:
        raise GeneratorError("d_w must be >= 1")
    if n < d_w + 1:
        raise GeneratorError(f"corpus of {n} textures supports at most d_w={n - 1}")
    d_z = d_w if d_z is None else d_z

    chunks = [slice(s, min(s + GRAM_CHUNK, dim)) for s in range(0, dim, GRAM_CHUNK)]
    mean = np.empty(dim)
    for cols in chunks:
        mean[cols] = data[:, cols].astype(np.float64).mean(axis=0) * scale

    gram = np.zeros((n, n))
    for cols in chunks:
        centered = data[:, cols].astype(np.float64) * scale - mean[cols]
        gram += centered @ centered.T

    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    singular = np.sqrt(np.clip(eigvals, 0.0, None))
    rank = int(np.sum(singular > RANK_TOLERANCE * singular[0])) if singular[0] > 0 else 0
    if rank < d_w:
        raise GeneratorError(f"corpus has rank {rank}; achievable d_w is at most {rank}")

    weights = eigvecs[:, :d_w] / singular[:d_w]
    basis = np.empty((dim, d_w))
    for cols in chunks:
        centered = data[:, cols].astype(np.float64) * scale - mean[cols]
        basis[cols] = centered.T @ weights

    peak = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[peak, np.arange(d_w)])
    basis *= np.where(signs == 0, 1.0, signs)

    sigma = singular[:d_w] / np.sqrt(n - 1)
    a1, a2 = mapper_weights(d_z, d_w, seed)
    if coverage is None:
        coverage = corpus_coverage if corpus_coverage is not None else np.ones((size, size), bool)

    logger.info(
        f"[generator] fit n={n} S={size} d_w={d_w} d_z={d_z} "
        f"explained={float(np.sum(eigvals[:d_w]) / max(np.sum(eigvals), 1e-300)):.4f}"
    )
    return GeneratorModel(
        size=size,
        mean=mean,
        basis=basis,
        sigma=sigma,
        a1=a1,
        a2=a2,
        bias=np.zeros(d_w),
        coverage=np.asarray(coverage, dtype=np.float64),
        seed=seed,
    )


# ============================================================================
# Generator maps and adjoints
# ============================================================================


def gen_flat(model: GeneratorModel, w: np.ndarray) -> np.ndarray:
    """mu + B diag(sigma) w as a flat vector."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (model.d_w,):
        raise GeneratorError(f"w must have {model.d_w} entries, got {w.size}")
    return model.mean + model.basis @ (model.sigma * w)


def gen_texture(model: GeneratorModel, w: np.ndarray) -> TextureMap:
    """Generated texture; validity is the model's coverage."""
    rgb = gen_flat(model, w).reshape(model.size, model.size, 3)
    return TextureMap(rgb=rgb, mask=model.coverage.copy())


def gen_vjp(model: GeneratorModel, w: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """diag(sigma) B^T cotangent; `w` is unused since the map is affine."""
    flat = np.asarray(cotangent, dtype=np.float64).reshape(-1)
    return model.sigma * (model.basis.T @ flat)


def project_texture_to_latent(model: GeneratorModel, texture) -> np.ndarray:
    """diag(sigma)^-1 B^T (T - mu): the W of the nearest manifold texture."""
    rgb = texture.rgb if isinstance(texture, TextureMap) else texture
    flat = np.asarray(rgb, dtype=np.float64).reshape(-1)
    return (model.basis.T @ (flat - model.mean)) / model.sigma


def map_z_to_w(model: GeneratorModel, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape != (model.d_z,):
        raise GeneratorError(f"z must have {model.d_z} entries, got {z.size}")
    return model.a2 @ np.tanh(model.a1 @ z) + model.bias


def map_vjp(model: GeneratorModel, z: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """Adjoint of map_z_to_w at z."""
    h = np.tanh(model.a1 @ np.asarray(z, dtype=np.float64).reshape(-1))
    return model.a1.T @ ((1.0 - h * h) * (model.a2.T @ np.asarray(cotangent, dtype=np.float64)))


# ============================================================================
# Container I/O
# ============================================================================


def save_model(model: GeneratorModel, path: PathLike) -> None:
    """Write the TEXGEN1 container."""
    entries, blobs, offset = [], [], 0
    for name in _ARRAYS:
        arr = np.ascontiguousarray(getattr(model, name), dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    header = {"arrays": entries, "seed": int(model.seed), "size": int(model.size)}
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def load_model(path: PathLike) -> GeneratorModel:
    """Read a TEXGEN1 container; arrays come back as float64."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise GeneratorError(f"{path} is not a TEXGEN1 model")
    pos = len(MAGIC)
    if len(raw) < pos + 4:
        raise GeneratorError(f"{path}: truncated header")
    (header_len,) = struct.unpack("<I", raw[pos : pos + 4])
    pos += 4
    try:
        header = json.loads(raw[pos : pos + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise GeneratorError(f"{path}: bad header ({e})")
    data = raw[pos + header_len :]

    arrays = {}
    for entry in header.get("arrays", []):
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + 4 * count
        if end > len(data):
            raise GeneratorError(f"{path}: array '{entry['name']}' is truncated")
        arrays[entry["name"]] = (
            np.frombuffer(data[start:end], dtype="<f4").reshape(shape).astype(np.float64)
        )
    missing = [name for name in _ARRAYS if name not in arrays]
    if missing:
        raise GeneratorError(f"{path}: missing arrays {missing}")
    return GeneratorModel(size=int(header["size"]), seed=int(header["seed"]), **arrays)
