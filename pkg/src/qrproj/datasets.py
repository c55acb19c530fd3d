"""Image dataset ingestion: MNIST IDX, CIFAR-100 binary, synthetic low-rank sets.

Every loader produces unit-norm float64 row vectors whose length is a
power of two.  MNIST digits (28x28) get a 2-pixel zero border to reach
32x32; CIFAR-100 images are already 32x32 and are reduced to grayscale
with the ITU-R 601 luminance weights.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import linalg

IDX_IMAGE_MAGIC = 0x00000803
CIFAR100_RECORD = 3074  # coarse label, fine label, 3 * 1024 pixel bytes
LUMA = (0.299, 0.587, 0.114)


class DatasetParseError(ValueError):
    """Malformed input file; ``offset`` is the byte position of the problem."""

    def __init__(self, path, offset, msg):
        super().__init__(f"{path}: byte {offset}: {msg}")
        self.path = path
        self.offset = offset


@dataclass(frozen=True, eq=False)
class ImageDataset:
    name: str
    vectors: np.ndarray
    source_dims: tuple

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("dataset must hold at least one vector")
        if not linalg.is_power_of_two(v.shape[1]):
            raise ValueError(f"vector length {v.shape[1]} is not a power of two")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("dataset vectors must be unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def count(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


def _normalize_rows(X, path):
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"{path}: image {zero[0]} is all zero and cannot be normalized")
    return X / norms[:, None]


def _pick(total, limit, selection, seed):
    limit = total if limit is None else int(limit)
    if not 1 <= limit <= total:
        raise ValueError(f"limit must lie in 1..{total}, got {limit}")
    if selection == "first":
        return np.arange(limit)
    if selection == "random":
        return np.sort(np.random.default_rng(seed).choice(total, size=limit, replace=False))
    raise ValueError(f"unknown selection {selection!r}")


def pad_to_32(images):
    """Embed (count, 28, 28) images in a 2-pixel zero border."""
    count, h, w = images.shape
    out = np.zeros((count, 32, 32), dtype=float)
    top, left = (32 - h) // 2, (32 - w) // 2
    out[:, top:top + h, left:left + w] = images
    return out


def read_idx_images(path):
    """Raw uint8 array (count, rows, cols) from an IDX3 image file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise DatasetParseError(path, len(raw), "file shorter than the 16-byte IDX header")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise DatasetParseError(path, 0, f"bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    need = 16 + count * rows * cols
    if len(raw) < need:
        raise DatasetParseError(path, len(raw), f"truncated: header promises {need} bytes")
    return np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16).reshape(count, rows, cols)


def write_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols))
        fh.write(images.tobytes())


def load_mnist(images_path, limit=None, selection="first", seed=None):
    """Unit 1024-vectors from an MNIST IDX image file.

    Args:
        images_path: path to an ``*-images-idx3-ubyte`` file.
        limit: number of images to keep (default: all).
        selection: ``"first"`` or ``"random"`` (seeded by ``seed``).
    """
    imgs = read_idx_images(images_path)
    if imgs.shape[1:] != (28, 28):
        raise DatasetParseError(images_path, 8, f"expected 28x28 images, header says {imgs.shape[1:]}")
    pick = _pick(imgs.shape[0], limit, selection, seed)
    X = pad_to_32(imgs[pick].astype(float)).reshape(len(pick), 1024)
    return ImageDataset("mnist", _normalize_rows(X, images_path), (28, 28))


def load_cifar100(path, limit=None, selection="first", seed=None):
    """Unit 1024-vectors (grayscale 32x32) from a CIFAR-100 binary batch."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) == 0 or len(raw) % CIFAR100_RECORD:
        whole = len(raw) // CIFAR100_RECORD
        raise DatasetParseError(path, whole * CIFAR100_RECORD,
                                f"size {len(raw)} is not a positive multiple of {CIFAR100_RECORD}-byte records")
    recs = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR100_RECORD)
    pick = _pick(recs.shape[0], limit, selection, seed)
    rgb = recs[pick, 2:].reshape(len(pick), 3, 1024).astype(float)
    gray = np.tensordot(LUMA, rgb, axes=([0], [1]))
    return ImageDataset("cifar100", _normalize_rows(gray, path), (32, 32))


def synthesize_dataset(N, count, rank, seed=None, noise=0.0):
    """``count`` unit vectors from a random ``rank``-dimensional subspace of R^N."""
    if not 1 <= rank <= min(count, N):
        raise ValueError(f"rank must lie in 1..{min(count, N)}, got {rank}")
    rng = np.random.default_rng(seed)
    basis = linalg.random_orthonormal(N, rank, rng.integers(2**63))
    X = rng.standard_normal((count, rank)) @ basis.T
    if noise:
        X += noise * rng.standard_normal(X.shape)
    return ImageDataset(f"synthetic-r{rank}", _normalize_rows(X, "synthetic"), (N,))


def write_vectors(ds, fh):
    """Portable dump: text line ``name N count`` then little-endian float64 rows."""
    fh.write(f"{ds.name} {ds.dim} {ds.count}\n".encode())
    fh.write(np.ascontiguousarray(ds.vectors, dtype="<f8").tobytes())


def read_vectors(fh, path="<stream>"):
    line = fh.readline()
    parts = line.decode(errors="replace").split()
    if len(parts) != 3:
        raise DatasetParseError(path, 0, "header must be 'name N count'")
    name, N, count = parts[0], int(parts[1]), int(parts[2])
    raw = fh.read(8 * N * count)
    if len(raw) != 8 * N * count:
        raise DatasetParseError(path, len(line) + len(raw), "truncated vector payload")
    X = np.frombuffer(raw, dtype="<f8").reshape(count, N)
    return ImageDataset(name, X, (N,))
