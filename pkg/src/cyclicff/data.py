"""Dataset loading, label fusion (positive / negative / neutral), splits.

Fusion follows the two conventions used in the experiments: images overlay
the one-hot label onto the first n_classes pixels; precomputed text
embeddings append the label vector.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

MNIST_IMAGE_MAGIC = 2051
MNIST_LABEL_MAGIC = 2049

EMBEDDING_MAGIC = b"CNNE"
EMBEDDING_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n_samples, dim) float64
    labels: np.ndarray    # (n_samples,) int
    n_classes: int
    name: str = ""

    def __post_init__(self):
        if len(self.labels) != len(self.features):
            raise ValueError("Dataset: feature/label count mismatch")
        if len(self.labels) and int(self.labels.max()) >= self.n_classes:
            raise ValueError("Dataset: label out of range")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("Dataset: non-finite features")

    @property
    def n_samples(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx],
                       self.n_classes, self.name)


@dataclass(frozen=True)
class FusionMode:
    mode: str = "concat"  # "concat" or "overlay"
    overlay_width: int | None = None

    def __post_init__(self):
        if self.mode not in ("concat", "overlay"):
            raise ValueError(f"unknown fusion mode {self.mode!r}")

    def fused_dim(self, dim: int, n_classes: int) -> int:
        return dim if self.mode == "overlay" else dim + n_classes


@dataclass(frozen=True)
class FusedBatch:
    h_pos: np.ndarray
    h_neg: np.ndarray
    h_neu: np.ndarray
    true_labels: np.ndarray


def _fuse(features: np.ndarray, label_vecs: np.ndarray,
          mode: FusionMode) -> np.ndarray:
    if mode.mode == "concat":
        return np.concatenate([features, label_vecs], axis=1)
    out = features.copy()
    out[:, : label_vecs.shape[1]] = label_vecs
    return out


def fuse_inputs(features: np.ndarray, labels: np.ndarray, n_classes: int,
                mode: FusionMode, rng: np.random.Generator) -> FusedBatch:
    """Build the positive / negative / neutral streams for one batch.

    Negative labels are drawn uniformly from the n_classes - 1 false labels,
    fresh on every call.
    """
    if n_classes < 2:
        raise ValueError("fuse_inputs: need at least 2 classes")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    width = mode.overlay_width or n_classes
    if width != n_classes:
        raise ValueError("fuse_inputs: overlay width must equal n_classes")
    if mode.mode == "overlay" and features.shape[1] < n_classes:
        raise ValueError("fuse_inputs: overlay needs dim >= n_classes")

    batch = len(labels)
    eye = np.eye(n_classes, dtype=np.float64)
    pos_vecs = eye[labels]
    # Shift by 1..n_classes-1 modulo n_classes: never the true label.
    offsets = rng.integers(1, n_classes, size=batch)
    neg_labels = (labels + offsets) % n_classes
    neg_vecs = eye[neg_labels]
    neu_vecs = np.full((batch, n_classes), 1.0 / n_classes)

    return FusedBatch(
        h_pos=_fuse(features, pos_vecs, mode),
        h_neg=_fuse(features, neg_vecs, mode),
        h_neu=_fuse(features, neu_vecs, mode),
        true_labels=labels,
    )


def neutral_fusion(features: np.ndarray, n_classes: int,
                   mode: FusionMode) -> np.ndarray:
    """Neutral stream only; used at inference time."""
    features = np.asarray(features, dtype=np.float64)
    neu = np.full((len(features), n_classes), 1.0 / n_classes)
    return _fuse(features, neu, mode)


def _open_maybe_gzip(path):
    with open(path, "rb") as f:
        head = f.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def load_mnist_idx(images_path, labels_path) -> Dataset:
    """Load the big-endian IDX image/label pair; pixels scaled to [0, 1]."""
    with _open_maybe_gzip(images_path) as f:
        header = f.read(16)
        if len(header) < 16:
            raise ValueError("IDX images: truncated header")
        magic, count, rows, cols = struct.unpack(">iiii", header)
        if magic != MNIST_IMAGE_MAGIC:
            raise ValueError(f"IDX images: bad magic {magic}")
        raw = f.read(count * rows * cols)
        if len(raw) != count * rows * cols:
            raise ValueError("IDX images: truncated payload")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)

    with _open_maybe_gzip(labels_path) as f:
        header = f.read(8)
        if len(header) < 8:
            raise ValueError("IDX labels: truncated header")
        magic, label_count = struct.unpack(">ii", header)
        if magic != MNIST_LABEL_MAGIC:
            raise ValueError(f"IDX labels: bad magic {magic}")
        raw = f.read(label_count)
        if len(raw) != label_count:
            raise ValueError("IDX labels: truncated payload")
        labels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)

    if count != label_count:
        raise ValueError(
            f"IDX: {count} images but {label_count} labels")
    return Dataset(images.astype(np.float64) / 255.0, labels,
                   n_classes=10, name="mnist")


def load_embeddings(path) -> Dataset:
    """Load the little-endian CNNE embedding export.

    Layout: magic "CNNE", u32 version, u32 n_samples, u32 dim, u32 n_classes,
    then n_samples*dim float32 features, then n_samples uint16 labels.
    """
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != EMBEDDING_MAGIC:
            raise ValueError(f"embeddings: bad magic {magic!r}")
        version, n, dim, n_classes = struct.unpack("<IIII", f.read(16))
        if version != EMBEDDING_VERSION:
            raise ValueError(f"embeddings: unsupported version {version}")
        feat_raw = f.read(n * dim * 4)
        if len(feat_raw) != n * dim * 4:
            raise ValueError("embeddings: truncated feature payload")
        label_raw = f.read(n * 2)
        if len(label_raw) != n * 2:
            raise ValueError("embeddings: truncated label payload")
        features = np.frombuffer(feat_raw, dtype="<f4").astype(np.float64)
        labels = np.frombuffer(label_raw, dtype="<u2").astype(np.int64)
    return Dataset(features.reshape(n, dim), labels, n_classes, name="embeddings")


def save_embeddings(d: Dataset, path) -> None:
    with open(path, "wb") as f:
        f.write(EMBEDDING_MAGIC)
        f.write(struct.pack("<IIII", EMBEDDING_VERSION, d.n_samples,
                            d.dim, d.n_classes))
        f.write(d.features.astype("<f4").tobytes())
        f.write(d.labels.astype("<u2").tobytes())


def synth_blobs(n_per_class: int, dim: int, n_classes: int,
                separation: float, rng: np.random.Generator) -> Dataset:
    """Gaussian blobs at separation * e_c along the first n_classes axes."""
    if separation < 0:
        raise ValueError("synth_blobs: separation must be >= 0")
    if n_classes > dim:
        raise ValueError("synth_blobs: need n_classes <= dim")
    features = []
    labels = []
    for c in range(n_classes):
        center = np.zeros(dim)
        center[c] = separation
        features.append(rng.standard_normal((n_per_class, dim)) + center)
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    return Dataset(np.concatenate(features), np.concatenate(labels),
                   n_classes, name="synth")


def split(d: Dataset, val_fraction: float,
          rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Uniform random train/validation split (disjoint indices)."""
    if not (0.0 <= val_fraction < 1.0):
        raise ValueError("split: val_fraction must be in [0, 1)")
    perm = rng.permutation(d.n_samples)
    n_val = int(round(d.n_samples * val_fraction))
    return d.subset(perm[n_val:]), d.subset(perm[:n_val])


def iter_batches(d: Dataset, batch_size: int, rng: np.random.Generator):
    """One epoch of shuffled batches; the last batch may be smaller."""
    if batch_size < 1:
        raise ValueError("iter_batches: batch_size must be >= 1")
    perm = rng.permutation(d.n_samples)
    for start in range(0, d.n_samples, batch_size):
        idx = perm[start:start + batch_size]
        yield d.features[idx], d.labels[idx]


def split_and_batch(d: Dataset, val_fraction: float, batch_size: int,
                    rng: np.random.Generator):
    """Split once, then return (train, val, epoch_batches) where
    epoch_batches() yields a freshly reshuffled epoch each call."""
    train, val = split(d, val_fraction, rng)

    def epoch_batches():
        return iter_batches(train, batch_size, rng)

    return train, val, epoch_batches
