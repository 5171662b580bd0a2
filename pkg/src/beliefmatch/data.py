"""Synthetic dataset generators, file loaders, splits, and OOD sources.

All generators are pure functions of their seed. Feature matrices are float64
with one row per sample; labels are int64 class indices in {0..K-1}.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    """Base class for IDX file problems."""


class IdxFormatError(IdxError):
    """Magic number does not identify an IDX image/label file."""


class IdxTruncatedError(IdxError):
    """IDX file ends before the declared payload."""


class IdxCountMismatchError(IdxError):
    """Image and label files declare different sample counts."""


@dataclass(frozen=True)
class LabeledDataset:
    """A labeled classification dataset: inputs (n, d), labels (n,)."""

    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("inputs must be (n, d), labels (n,)")
        if len(self.inputs) != len(self.labels) or len(self.labels) < 1:
            raise ValueError("inputs and labels must have equal length >= 1")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.inputs[idx], self.labels[idx], self.n_classes)


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for a train/val/test split plus the shuffle seed."""

    train_frac: float
    val_frac: float
    test_frac: float
    seed: int

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if not all(0.0 < f < 1.0 for f in fracs):
            raise ValueError("split fractions must lie in (0, 1)")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise ValueError("split fractions must sum to 1")


def gen_blobs(n_classes, n_per_class, centers=None, noise_sd=1.0, seed=0) -> LabeledDataset:
    """Isotropic Gaussian clusters, one per class, n_per_class points each."""
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if centers is None:
        angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
        centers = 4.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.shape[0] != n_classes:
        raise ValueError("one center per class required")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for k in range(n_classes):
        pts = centers[k] + noise_sd * rng.standard_normal((n_per_class, centers.shape[1]))
        xs.append(pts)
        ys.append(np.full(n_per_class, k, dtype=np.int64))
    return LabeledDataset(np.concatenate(xs), np.concatenate(ys), n_classes)


def gen_two_moons(n, noise_sd=0.1, seed=0) -> LabeledDataset:
    """Two interleaved half-circles with Gaussian noise; K = 2.

    Class 0 lies on the upper unit half-circle centered at the origin,
    class 1 on a lower half-circle shifted to interleave with it.
    """
    if n < 2:
        raise ValueError("need at least two points")
    n0 = (n + 1) // 2
    n1 = n - n0
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    x0 = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    x1 = np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    x = np.concatenate([x0, x1])
    rng = np.random.default_rng(seed)
    x = x + noise_sd * rng.standard_normal(x.shape)
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return LabeledDataset(x, y, 2)


def gen_ood_ring(n, radius_range=(3.0, 4.0), seed=0) -> np.ndarray:
    """Uniform samples on an annulus around the origin (unlabeled inputs)."""
    r_lo, r_hi = radius_range
    if not 0.0 < r_lo < r_hi:
        raise ValueError("radius range must satisfy 0 < lo < hi")
    rng = np.random.default_rng(seed)
    # Area-uniform radius, then a uniform angle.
    r = np.sqrt(rng.uniform(r_lo**2, r_hi**2, size=n))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def _read_exact(f, n: int, path: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise IdxTruncatedError(f"{path}: expected {n} more bytes, got {len(buf)}")
    return buf


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load an IDX image/label file pair (big-endian, MNIST layout).

    Pixels are scaled to [0, 1]; images are flattened to one row per sample.
    """
    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, str(images_path)))
        if magic != IDX_IMAGES_MAGIC:
            raise IdxFormatError(f"{images_path}: bad magic 0x{magic:08x}")
        payload = _read_exact(f, count * rows * cols, str(images_path))
    images = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)

    with open(labels_path, "rb") as f:
        magic, label_count = struct.unpack(">II", _read_exact(f, 8, str(labels_path)))
        if magic != IDX_LABELS_MAGIC:
            raise IdxFormatError(f"{labels_path}: bad magic 0x{magic:08x}")
        label_payload = _read_exact(f, label_count, str(labels_path))
    labels = np.frombuffer(label_payload, dtype=np.uint8)

    if count != label_count:
        raise IdxCountMismatchError(f"{count} images but {label_count} labels")
    n_classes = int(labels.max()) + 1 if len(labels) else 0
    return LabeledDataset(
        images.astype(np.float64) / 255.0,
        labels.astype(np.int64),
        max(n_classes, 2),
    )


def load_csv(path, n_classes=None) -> LabeledDataset:
    """Load a CSV dataset: header row, feature columns, then the label column."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    labels = arr[:, -1].astype(np.int64)
    if np.any(arr[:, -1] != labels):
        raise ValueError(f"{path}: last column ({header[-1]}) must hold integer labels")
    k = n_classes if n_classes is not None else int(labels.max()) + 1
    return LabeledDataset(arr[:, :-1], labels, max(k, 2))


def save_csv(dataset: LabeledDataset, path) -> None:
    """Write a dataset in the CSV layout accepted by load_csv."""
    d = dataset.inputs.shape[1]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"x{i}" for i in range(d)] + ["label"])
        for row, lab in zip(dataset.inputs, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def split(dataset: LabeledDataset, spec: SplitSpec):
    """Disjoint, exhaustive (train, val, test) split via a seeded shuffle."""
    n = len(dataset)
    if n < 3:
        raise ValueError("need at least three samples to split")
    n_train = int(round(spec.train_frac * n))
    n_val = int(round(spec.val_frac * n))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"degenerate split sizes ({n_train}, {n_val}, {n_test})")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train : n_train + n_val]),
        dataset.subset(perm[n_train + n_val :]),
    )


def standardize(train: LabeledDataset, *others: LabeledDataset):
    """Per-feature standardization using train statistics only.

    Returns ((train', others'...), mean, sd). The sd has a 1e-8 floor so a
    constant feature maps to zeros instead of dividing by zero.
    """
    mu = train.inputs.mean(axis=0)
    sd = np.maximum(train.inputs.std(axis=0), 1e-8)
    out = tuple(
        LabeledDataset((d.inputs - mu) / sd, d.labels, d.n_classes)
        for d in (train, *others)
    )
    return out, mu, sd


def standardize_features(x: np.ndarray, mu: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """Apply precomputed standardization statistics to a raw feature matrix."""
    return (np.asarray(x, dtype=np.float64) - mu) / sd
