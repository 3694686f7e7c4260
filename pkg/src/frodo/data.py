"""Classification data for the federated MLP study.

MNIST is read from IDX files when a directory is available (argument or the
``FRODO_MNIST_DIR`` environment variable); otherwise a Gaussian-blob problem of
the same shape is generated.
"""
from __future__ import annotations

import gzip
import os
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "read_idx",
    "load_mnist",
    "find_mnist_dir",
    "synthetic_blobs",
    "load_dataset",
    "stratified_split",
    "MNIST_ENV_VAR",
]

MNIST_ENV_VAR = "FRODO_MNIST_DIR"

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
_UBYTE = 0x08


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Read an unsigned-byte IDX file (optionally gzipped) into a uint8 array.

    The header is a big-endian magic number ``0x000008DD`` (``DD`` = number of
    dimensions) followed by one big-endian uint32 per dimension.
    """
    with _open(path) as fh:
        header = fh.read(4)
        if len(header) != 4:
            raise ValueError(f"{path}: truncated IDX header")
        (magic,) = struct.unpack(">I", header)
        if magic >> 16 != 0 or (magic >> 8) & 0xFF != _UBYTE:
            raise ValueError(f"{path}: bad IDX magic 0x{magic:08x}")
        ndim = magic & 0xFF
        if ndim == 0:
            raise ValueError(f"{path}: IDX file declares zero dimensions")
        shape = struct.unpack(f">{ndim}I", fh.read(4 * ndim))
        payload = fh.read()
    expected = int(np.prod(shape))
    if len(payload) < expected:
        raise ValueError(f"{path}: expected {expected} bytes of data, found {len(payload)}")
    return np.frombuffer(payload[:expected], dtype=np.uint8).reshape(shape)


def _locate(directory: Path, stem: str):
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        candidate = directory / name
        if candidate.exists():
            return candidate
    return None


def find_mnist_dir(directory=None):
    """Return a directory holding MNIST training IDX files, or None."""
    directory = directory or os.environ.get(MNIST_ENV_VAR)
    if not directory:
        return None
    directory = Path(directory)
    if _locate(directory, "train-images-idx3-ubyte") and _locate(directory, "train-labels-idx1-ubyte"):
        return directory
    return None


def load_mnist(directory, limit=None):
    """Load MNIST training images as ``(N, 784)`` floats in [0, 1] and int labels."""
    directory = Path(directory)
    images_path = _locate(directory, "train-images-idx3-ubyte")
    labels_path = _locate(directory, "train-labels-idx1-ubyte")
    if images_path is None or labels_path is None:
        raise FileNotFoundError(f"no MNIST training IDX files under {directory}")
    with _open(images_path) as fh:
        (magic,) = struct.unpack(">I", fh.read(4))
    if magic != IMAGES_MAGIC:
        raise ValueError(f"{images_path}: expected image magic 0x{IMAGES_MAGIC:08x}, got 0x{magic:08x}")
    with _open(labels_path) as fh:
        (magic,) = struct.unpack(">I", fh.read(4))
    if magic != LABELS_MAGIC:
        raise ValueError(f"{labels_path}: expected label magic 0x{LABELS_MAGIC:08x}, got 0x{magic:08x}")
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return features, labels.astype(np.int64)


def synthetic_blobs(n_samples, n_features, n_classes, rng, spread=1.0, center_scale=1.0):
    """Isotropic Gaussian clusters, ``n_samples // n_classes`` per class.

    Class centers are drawn from ``N(0, center_scale**2 / n_features)`` per
    coordinate so that center separation stays O(center_scale) whatever the
    dimension; samples add ``N(0, spread**2 / n_features)`` noise.
    """
    per_class = n_samples // n_classes
    if per_class < 1:
        raise ValueError(f"need at least one sample per class, got {n_samples} for {n_classes} classes")
    scale = 1.0 / np.sqrt(n_features)
    centers = rng.normal(0.0, center_scale * scale, size=(n_classes, n_features))
    labels = np.repeat(np.arange(n_classes), per_class)
    features = centers[labels] + rng.normal(0.0, spread * scale, size=(labels.size, n_features))
    order = rng.permutation(labels.size)
    return features[order], labels[order]


def load_dataset(source, n_samples, rng, *, mnist_dir=None, n_features=784, n_classes=10,
                 spread=1.0, center_scale=1.0):
    """Return ``(features, labels, note)``; ``note`` names the data actually used.

    ``source`` is ``"mnist"`` (error if absent), ``"synthetic"``, or ``"auto"``
    (MNIST when found, else synthetic).
    """
    if source not in ("auto", "mnist", "synthetic"):
        raise ValueError(f"unknown data source {source!r}")
    directory = find_mnist_dir(mnist_dir) if source != "synthetic" else None
    if source == "mnist" and directory is None:
        raise FileNotFoundError(f"MNIST requested but no IDX files found (set {MNIST_ENV_VAR})")
    if directory is not None:
        features, labels = load_mnist(directory)
        pick = np.sort(rng.choice(labels.size, size=min(n_samples, labels.size), replace=False))
        return features[pick], labels[pick], f"mnist:{directory}"
    features, labels = synthetic_blobs(n_samples, n_features, n_classes, rng,
                                       spread=spread, center_scale=center_scale)
    note = (f"synthetic:blobs(n={labels.size},features={n_features},classes={n_classes},"
            f"spread={spread},center_scale={center_scale})")
    return features, labels, note


def stratified_split(labels, num_parts, rng):
    """Split sample indices into ``num_parts`` class-balanced, disjoint parts.

    Each class is shuffled and dealt into equal chunks; leftovers that would
    unbalance the parts are dropped.
    """
    labels = np.asarray(labels)
    parts = [[] for _ in range(num_parts)]
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        share = idx.size // num_parts
        for p in range(num_parts):
            parts[p].append(idx[p * share:(p + 1) * share])
    return [np.sort(np.concatenate(p)) for p in parts]
