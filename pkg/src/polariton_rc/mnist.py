"""MNIST ingestion: IDX parsing, block-average downsampling, seeded splits.

Images are returned as float64 arrays in [0, 1] (byte / 255). A batch of
digits is a ``(count, r, r)`` array rather than a list of objects.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, LengthError, ParameterError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SUPPORTED_RESOLUTIONS = (7, 4)


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_header(buf: bytes, n_dims: int, magic: int, path) -> tuple[int, ...]:
    size = 4 * (1 + n_dims)
    if len(buf) < size:
        raise LengthError(f"{path}: header truncated ({len(buf)} bytes)")
    found, *dims = struct.unpack(">" + "I" * (1 + n_dims), buf[:size])
    if found != magic:
        raise FormatError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    return tuple(dims)


def load_idx_images(path) -> np.ndarray:
    """Read an IDX3 image file (optionally gzip'd) into a ``(count, rows, cols)`` array in [0, 1]."""
    with _open(path) as f:
        buf = f.read()
    count, rows, cols = _read_header(buf, 3, IMAGE_MAGIC, path)
    n = count * rows * cols
    payload = buf[16:]
    if len(payload) < n:
        raise LengthError(f"{path}: expected {n} pixel bytes, found {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8, count=n)
    return pixels.reshape(count, rows, cols).astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    with _open(path) as f:
        buf = f.read()
    (count,) = _read_header(buf, 1, LABEL_MAGIC, path)
    payload = buf[8:]
    if len(payload) < count:
        raise LengthError(f"{path}: expected {count} label bytes, found {len(payload)}")
    labels = np.frombuffer(payload, dtype=np.uint8, count=count).astype(np.int64)
    if count and labels.max() > 9:
        raise DataError(f"{path}: label {labels.max()} outside 0..9")
    return labels


def write_idx_images(path, images) -> None:
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    _write(path, struct.pack(">IIII", IMAGE_MAGIC, count, rows, cols) + images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    _write(path, struct.pack(">II", LABEL_MAGIC, len(labels)) + labels.tobytes())


def _write(path, data: bytes) -> None:
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps the archive byte-reproducible
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
            f.write(data)
    else:
        path.write_bytes(data)


def area_weights(n: int, r: int) -> np.ndarray:
    """``(r, n)`` matrix averaging n source pixels into r bins by fractional overlap.

    When r divides n this is the plain block mean.
    """
    edges = np.arange(r + 1) * (n / r)
    left = np.arange(n)
    lo = np.maximum(edges[:-1, None], left[None, :])
    hi = np.minimum(edges[1:, None], left[None, :] + 1)
    w = np.clip(hi - lo, 0.0, None)
    return w / w.sum(axis=1, keepdims=True)


def downsample(img, r: int, crop: int = 0) -> np.ndarray:
    """Reduce 28x28 digit(s) to r x r by averaging source blocks.

    ``crop`` pixels are first dropped from every border; MNIST strokes live in
    the central 20x20 box, so a small crop keeps the coarse grid on the ink.
    Works on a single image or a ``(count, 28, 28)`` stack.
    """
    if r not in SUPPORTED_RESOLUTIONS:
        raise ParameterError(f"unsupported resolution {r}; choose from {SUPPORTED_RESOLUTIONS}")
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-2:] != (28, 28):
        raise ParameterError(f"expected 28x28 input, got {img.shape[-2:]}")
    if not 0 <= crop < 14 - r // 2:
        raise ParameterError(f"crop {crop} leaves too few pixels for r={r}")
    if crop:
        img = img[..., crop:28 - crop, crop:28 - crop]
    w = area_weights(img.shape[-1], r)
    return np.einsum("ij,...jk,lk->...il", w, img, w)


@dataclass(frozen=True)
class LabeledDataset:
    images: np.ndarray  # (count, r, r)
    labels: np.ndarray  # (count,)

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise DataError(f"{len(self.images)} images but {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() > 9):
            raise DataError("labels must lie in 0..9")

    def __len__(self):
        return len(self.labels)

    @property
    def resolution(self) -> int:
        return self.images.shape[-1]

    def subset(self, index) -> "LabeledDataset":
        return LabeledDataset(self.images[index], self.labels[index])


def load_dataset(images_path, labels_path) -> LabeledDataset:
    return LabeledDataset(load_idx_images(images_path), load_idx_labels(labels_path))


def split_indices(size: int, seed: int, n_train: int, n_test: int) -> tuple[np.ndarray, np.ndarray]:
    if n_train < 0 or n_test < 0:
        raise ParameterError("split sizes must be nonnegative")
    if n_train + n_test > size:
        raise ParameterError(f"n_train + n_test = {n_train + n_test} exceeds dataset size {size}")
    perm = np.random.default_rng(seed).permutation(size)
    return perm[:n_train], perm[n_train:n_train + n_test]


def split_shuffle(ds: LabeledDataset, seed: int, n_train: int, n_test: int):
    """Disjoint, seeded, shuffled train/test subsets of ``ds``."""
    tr, te = split_indices(len(ds), seed, n_train, n_test)
    return ds.subset(tr), ds.subset(te)
