"""Synthetic classification data and device partitioning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray  # (m, d)
    labels: np.ndarray  # (m,) ints in [0, n_classes)
    n_classes: int
    seed: Optional[int] = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DomainError("features must be (m, d) and labels (m,)")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DomainError("labels must lie in [0, n_classes)")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.n_classes, self.seed)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.n_classes == other.n_classes
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class Shard:
    device: int
    indices: np.ndarray
    data: Dataset

    @property
    def size(self) -> int:
        return len(self.indices)


def make_synthetic_dataset(n_classes: int, dim: int, per_class: int, separation: float,
                           seed: int) -> Dataset:
    """Isotropic unit-variance Gaussian clusters.

    Class ``c`` is centred at ``separation`` along axis ``c mod dim``
    (negated for the second wrap), so with ``dim >= n_classes`` every
    pair of means is ``separation * sqrt(2)`` apart.
    """
    if n_classes < 2 or per_class < 1 or dim < 1:
        raise DomainError("need n_classes >= 2, per_class >= 1, dim >= 1")
    rng = np.random.default_rng(seed)
    means = np.zeros((n_classes, dim))
    for c in range(n_classes):
        sign = 1.0 if (c // dim) % 2 == 0 else -1.0
        means[c, c % dim] = sign * separation * (1 + c // (2 * dim))
    labels = np.repeat(np.arange(n_classes), per_class)
    features = means[labels] + rng.standard_normal((labels.size, dim))
    order = rng.permutation(labels.size)
    return Dataset(features[order], labels[order], n_classes, seed)


def train_validation_split(data: Dataset, fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    rng = np.random.default_rng([seed, 7919])
    order = rng.permutation(len(data))
    n_val = int(round(fraction * len(data)))
    return data.subset(np.sort(order[n_val:])), data.subset(np.sort(order[:n_val]))


def _label_skew_classes(n_devices: int, n_classes: int, per_device: int,
                        rng: np.random.Generator) -> list[list[int]]:
    """Random class subsets, least-used classes first so every class is covered."""
    uses = np.zeros(n_classes, dtype=int)
    chosen = []
    for _ in range(n_devices):
        jitter = rng.random(n_classes)
        order = np.lexsort((jitter, uses))
        pick = sorted(int(c) for c in order[:per_device])
        uses[pick] += 1
        chosen.append(pick)
    return chosen


def partition(data: Dataset, n_devices: int, mode: str = "iid",
              classes_per_device: Optional[int] = None, seed: int = 0) -> list[Shard]:
    """Split ``data`` into disjoint, covering device shards.

    ``mode="iid"``: random near-equal split. ``mode="label_skew"``: each
    device holds examples of exactly ``classes_per_device`` classes;
    every class is split evenly among the devices that hold it.
    """
    if n_devices < 1 or n_devices > len(data):
        raise DomainError(f"need 1 <= K <= {len(data)} devices, got {n_devices}")
    rng = np.random.default_rng([seed, 104729])
    if mode == "iid":
        order = rng.permutation(len(data))
        parts = np.array_split(order, n_devices)
    elif mode == "label_skew":
        c = data.n_classes
        if classes_per_device is None or not 1 <= classes_per_device <= c:
            raise DomainError(f"classes_per_device must be in [1, {c}], got {classes_per_device}")
        if n_devices * classes_per_device < c:
            raise DomainError("too few device-class slots to cover every class")
        owned = _label_skew_classes(n_devices, c, classes_per_device, rng)
        buckets: list[list[np.ndarray]] = [[] for _ in range(n_devices)]
        for cls in range(c):
            holders = [k for k in range(n_devices) if cls in owned[k]]
            idx = rng.permutation(np.flatnonzero(data.labels == cls))
            for k, piece in zip(holders, np.array_split(idx, len(holders))):
                buckets[k].append(piece)
        parts = [np.concatenate(b) if b else np.array([], dtype=int) for b in buckets]
    else:
        raise DomainError(f"unknown partition mode {mode!r}")
    shards = []
    for k, idx in enumerate(parts):
        idx = np.sort(idx.astype(int))
        shards.append(Shard(k, idx, data.subset(idx)))
    return shards
