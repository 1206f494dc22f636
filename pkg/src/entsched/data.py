"""Datasets: Gaussian-blob synthesis, IDX (MNIST container) I/O, non-IID sharding."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


class IdxFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError(f"features {self.features.shape} do not match {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels outside [0, {self.num_classes})")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite feature values")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: Sequence[int]) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes, self.split)


def _class_means(classes: int, dim: int, gen: np.random.Generator) -> np.ndarray:
    if dim >= classes:
        q, _ = np.linalg.qr(gen.standard_normal((dim, classes)))
        return q.T
    # fewer dimensions than classes: evenly spaced on a random great circle
    basis, _ = np.linalg.qr(gen.standard_normal((dim, 2)))
    angles = 2 * np.pi * np.arange(classes) / classes
    return np.cos(angles)[:, None] * basis[:, 0] + np.sin(angles)[:, None] * basis[:, 1]


def make_synthetic_dataset(
    classes: int, dim: int, per_class: int, spread: float, seed: int, anisotropy: float = 1.0
) -> tuple[Dataset, Dataset]:
    """Gaussian blobs with unit-norm class means; per-class 80/20 train/test split.

    Noise is axis-aligned with standard deviation ``spread * s_d``, where the
    per-dimension factors ``s_d`` are log-spaced over
    ``[anisotropy ** -0.5, anisotropy ** 0.5]`` in a seeded order
    (``anisotropy = 1`` gives isotropic blobs). Unequal noise makes the
    nearest-mean rule suboptimal, so accuracy has to be earned over many steps.
    """
    if anisotropy < 1.0:
        raise ValueError(f"anisotropy must be >= 1, got {anisotropy}")
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if per_class < 1:
        raise ValueError(f"per_class must be positive, got {per_class}")
    gen = rng.stream(seed, rng.DATA)
    means = _class_means(classes, dim, gen)
    scales = gen.permutation(np.logspace(-0.5, 0.5, dim, base=anisotropy)) if dim > 1 else np.ones(1)
    n_train = int(round(0.8 * per_class))
    train_x, train_y, test_x, test_y = [], [], [], []
    for c in range(classes):
        x = means[c] + spread * scales * gen.standard_normal((per_class, dim))
        train_x.append(x[:n_train])
        test_x.append(x[n_train:])
        train_y.append(np.full(n_train, c))
        test_y.append(np.full(per_class - n_train, c))
    train = Dataset(np.concatenate(train_x), np.concatenate(train_y).astype(np.int64), classes, "train")
    test = Dataset(np.concatenate(test_x), np.concatenate(test_y).astype(np.int64), classes, "test")
    return train, test


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_idx(blob: bytes, magic: int, ndim: int, what: str) -> np.ndarray:
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise IdxFormatError(f"{what}: truncated header")
    (found,) = struct.unpack(">I", blob[:4])
    if found != magic:
        raise IdxFormatError(f"{what}: bad magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", blob[4:header])
    size = int(np.prod(dims))
    if len(blob) - header < size:
        raise IdxFormatError(f"{what}: truncated payload ({len(blob) - header} of {size} bytes)")
    return np.frombuffer(blob, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx_dataset(images_path, labels_path, num_classes: int = 10, split: str = "train") -> Dataset:
    """Load an IDX image/label pair (optionally gzipped); pixels scaled to [0, 1]."""
    images = _parse_idx(_read_bytes(images_path), IDX_IMAGES, 3, "images")
    labels = _parse_idx(_read_bytes(labels_path), IDX_LABELS, 1, "labels")
    if len(images) != len(labels):
        raise IdxFormatError(f"count mismatch: {len(images)} images, {len(labels)} labels")
    features = images.reshape(len(images), -1).astype(np.float64) / 255.0
    return Dataset(features, labels.astype(np.int64), num_classes, split)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">4I", IDX_IMAGES, *images.shape) + images.tobytes())


def write_idx_labels(path, labels: Sequence[int]) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">2I", IDX_LABELS, len(labels)) + labels.tobytes())


def partition_indices(train: Dataset, n: int, shards_per_node: int, seed: int) -> list[np.ndarray]:
    """Label-sorted shards dealt to nodes.

    Samples are stably sorted by label and cut into ``n * shards_per_node``
    contiguous shards (sizes differ by at most one); a seeded permutation deals
    ``shards_per_node`` shards to each node. Returns sorted index arrays.
    """
    n_shards = n * shards_per_node
    if n < 1 or shards_per_node < 1:
        raise ValueError("need at least one node and one shard per node")
    if len(train) < n_shards:
        raise ValueError(f"{len(train)} samples cannot fill {n_shards} shards")
    shards = np.array_split(np.argsort(train.labels, kind="stable"), n_shards)
    perm = rng.stream(seed, rng.PARTITION).permutation(n_shards)
    return [
        np.sort(np.concatenate([shards[s] for s in perm[i * shards_per_node:(i + 1) * shards_per_node]]))
        for i in range(n)
    ]


def partition_noniid(train: Dataset, n: int, shards_per_node: int, seed: int) -> list[Dataset]:
    return [train.subset(idx) for idx in partition_indices(train, n, shards_per_node, seed)]
