"""Loaders and writers for the two on-disk image formats.

IDX: big-endian magic (2 zero bytes, type code, ndim), ndim uint32 dims,
then the raw payload. Images are unsigned bytes shaped (n, rows, cols),
labels unsigned bytes shaped (n,).

CIFAR-10 binary: a sequence of 3073-byte records, each one label byte
followed by a 32x32 RGB image in channel-planar order.

Pixels are returned scaled to [0, 1] float32; labels as int64.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InputDomainError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD_BYTES = 3073


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # float32 in [0, 1], shape (n, channels, h, w)
    labels: np.ndarray  # int64, shape (n,)

    def __post_init__(self) -> None:
        if self.images.shape[0] != self.labels.shape[0]:
            raise FormatError(
                f"image count {self.images.shape[0]} does not match "
                f"label count {self.labels.shape[0]}"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, n: int) -> "Dataset":
        if n < 1:
            raise InputDomainError("subset size must be at least 1")
        return Dataset(images=self.images[:n], labels=self.labels[:n])


def _read(path: str) -> bytes:
    # Access problems surface as plain OSError; FormatError is reserved
    # for files whose content does not parse.
    with open(path, "rb") as fh:
        return fh.read()


def load_idx_images(path: str) -> np.ndarray:
    blob = _read(path)
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated IDX header at byte {len(blob)}")
    magic, n, rows, cols = struct.unpack(">IIII", blob[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(
            f"{path}: bad IDX image magic 0x{magic:08x} at byte 0 "
            f"(expected 0x{IDX_IMAGES_MAGIC:08x})"
        )
    expected = 16 + n * rows * cols
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload ends at byte {len(blob)}, expected {expected}"
        )
    return np.frombuffer(blob, dtype=np.uint8, offset=16).reshape(n, rows, cols).copy()


def load_idx_labels(path: str) -> np.ndarray:
    blob = _read(path)
    if len(blob) < 8:
        raise FormatError(f"{path}: truncated IDX header at byte {len(blob)}")
    magic, n = struct.unpack(">II", blob[:8])
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(
            f"{path}: bad IDX label magic 0x{magic:08x} at byte 0 "
            f"(expected 0x{IDX_LABELS_MAGIC:08x})"
        )
    if len(blob) != 8 + n:
        raise FormatError(f"{path}: payload ends at byte {len(blob)}, expected {8 + n}")
    return np.frombuffer(blob, dtype=np.uint8, offset=8).astype(np.int64)


def write_idx_images(path: str, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes(order="C"))


def write_idx_labels(path: str, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes(order="C"))


def load_idx_dataset(images_path: str, labels_path: str, pad_to: int | None = None) -> Dataset:
    """Greyscale IDX pair as a Dataset; optionally zero-pad to pad_to square.

    Padding centers the image, the usual preparation for a 28x28 set
    feeding a network with a 32x32 input window.
    """
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{images_path} holds {images.shape[0]} images but "
            f"{labels_path} holds {labels.shape[0]} labels"
        )
    if pad_to is not None:
        n, rows, cols = images.shape
        if rows > pad_to or cols > pad_to:
            raise FormatError(f"cannot pad {rows}x{cols} images down to {pad_to}")
        top = (pad_to - rows) // 2
        left = (pad_to - cols) // 2
        padded = np.zeros((n, pad_to, pad_to), dtype=np.uint8)
        padded[:, top : top + rows, left : left + cols] = images
        images = padded
    x = (images.astype(np.float32) / 255.0)[:, None, :, :]
    return Dataset(images=x, labels=labels)


def load_cifar10_batch(path: str) -> Dataset:
    blob = _read(path)
    if len(blob) == 0 or len(blob) % CIFAR_RECORD_BYTES != 0:
        raise FormatError(
            f"{path}: size {len(blob)} is not a multiple of the "
            f"{CIFAR_RECORD_BYTES}-byte record (offset of first bad record: "
            f"{(len(blob) // CIFAR_RECORD_BYTES) * CIFAR_RECORD_BYTES})"
        )
    records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    if labels.max(initial=0) > 9:
        bad = int(np.argmax(records[:, 0] > 9))
        raise FormatError(
            f"{path}: label {records[bad, 0]} out of range at byte "
            f"{bad * CIFAR_RECORD_BYTES}"
        )
    images = records[:, 1:].reshape(-1, 3, 32, 32).astype(np.float32) / 255.0
    return Dataset(images=images, labels=labels)


def write_cifar10_batch(path: str, images: np.ndarray, labels: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8).reshape(-1, 3 * 32 * 32)
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1, 1)
    with open(path, "wb") as fh:
        fh.write(np.hstack([labels, images]).tobytes(order="C"))


def load_dataset(kind: str, directory: str, split: str = "test") -> Dataset:
    """Convenience entry: kind is "idx" (28x28 padded to 32) or "cifar10"."""
    if kind == "idx":
        prefix = "train" if split == "train" else "t10k"
        return load_idx_dataset(
            os.path.join(directory, f"{prefix}-images-idx3-ubyte"),
            os.path.join(directory, f"{prefix}-labels-idx1-ubyte"),
            pad_to=32,
        )
    if kind == "cifar10":
        name = "data_batch_1.bin" if split == "train" else "test_batch.bin"
        return load_cifar10_batch(os.path.join(directory, name))
    raise FormatError(f"unknown dataset kind {kind!r} (use idx or cifar10)")
