"""Binary dataset loaders: IDX pairs and 3073-byte color records."""

import os
import struct

import numpy as np
import pytest

from imacsim.datasets import (
    CIFAR_RECORD_BYTES,
    load_cifar10_batch,
    load_dataset,
    load_idx_dataset,
    load_idx_images,
    load_idx_labels,
    write_cifar10_batch,
    write_idx_images,
    write_idx_labels,
)
from imacsim.errors import FormatError, InputDomainError


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(7, 28, 28), dtype=np.uint8)
    labels = rng.integers(0, 10, size=7, dtype=np.uint8)
    ip = str(tmp_path / "imgs")
    lp = str(tmp_path / "labs")
    write_idx_images(ip, images)
    write_idx_labels(lp, labels)
    assert np.array_equal(load_idx_images(ip), images)
    assert np.array_equal(load_idx_labels(lp), labels)


def test_idx_header_encodes_dimensions(tmp_path):
    ip = str(tmp_path / "imgs")
    write_idx_images(ip, np.zeros((5, 28, 28), dtype=np.uint8))
    with open(ip, "rb") as fh:
        magic, n, rows, cols = struct.unpack(">IIII", fh.read(16))
    assert magic == 0x00000803
    assert (n, rows, cols) == (5, 28, 28)


def test_idx_bad_magic(tmp_path):
    path = str(tmp_path / "bad")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000804, 1, 28, 28) + b"\x00" * 784)
    with pytest.raises(FormatError):
        load_idx_images(path)


def test_idx_truncation(tmp_path):
    ip = str(tmp_path / "imgs")
    write_idx_images(ip, np.zeros((3, 28, 28), dtype=np.uint8))
    blob = open(ip, "rb").read()
    cut = str(tmp_path / "cut")
    with open(cut, "wb") as fh:
        fh.write(blob[:-100])
    with pytest.raises(FormatError):
        load_idx_images(cut)


def test_idx_label_count_mismatch(tmp_path):
    ip, lp = str(tmp_path / "i"), str(tmp_path / "l")
    write_idx_images(ip, np.zeros((3, 28, 28), dtype=np.uint8))
    write_idx_labels(lp, np.zeros(4, dtype=np.uint8))
    with pytest.raises(FormatError):
        load_idx_dataset(ip, lp)


def test_idx_padding_centers_image(tmp_path):
    ip, lp = str(tmp_path / "i"), str(tmp_path / "l")
    img = np.full((1, 28, 28), 255, dtype=np.uint8)
    write_idx_images(ip, img)
    write_idx_labels(lp, np.array([3], dtype=np.uint8))
    ds = load_idx_dataset(ip, lp, pad_to=32)
    assert ds.images.shape == (1, 1, 32, 32)
    assert ds.images[0, 0, 0, :].max() == 0.0  # padding ring stays blank
    assert ds.images[0, 0, 2:30, 2:30].min() == 1.0
    assert ds.labels.tolist() == [3]


def test_cifar_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, size=(4, 3, 32, 32), dtype=np.uint8)
    labels = rng.integers(0, 10, size=4, dtype=np.uint8)
    path = str(tmp_path / "test_batch.bin")
    write_cifar10_batch(path, images, labels)
    assert os.path.getsize(path) == 4 * CIFAR_RECORD_BYTES
    ds = load_cifar10_batch(path)
    assert ds.images.shape == (4, 3, 32, 32)
    assert np.array_equal((ds.images * 255).round().astype(np.uint8), images)
    assert np.array_equal(ds.labels, labels)


def test_cifar_rejects_ragged_file(tmp_path):
    path = str(tmp_path / "test_batch.bin")
    with open(path, "wb") as fh:
        fh.write(b"\x00" * (CIFAR_RECORD_BYTES + 1))
    with pytest.raises(FormatError):
        load_cifar10_batch(path)


def test_cifar_rejects_out_of_range_label(tmp_path):
    path = str(tmp_path / "test_batch.bin")
    rec = bytearray(CIFAR_RECORD_BYTES)
    rec[0] = 11
    with open(path, "wb") as fh:
        fh.write(bytes(rec))
    with pytest.raises(FormatError, match="label"):
        load_cifar10_batch(path)


def test_load_dataset_dispatch(digits_dir, cifar_dir):
    d = load_dataset("idx", digits_dir, "test")
    assert d.images.shape[1:] == (1, 32, 32)
    assert d.images.min() >= 0.0 and d.images.max() <= 1.0
    c = load_dataset("cifar10", cifar_dir, "test")
    assert c.images.shape[1:] == (3, 32, 32)
    with pytest.raises(FormatError):
        load_dataset("tiff", digits_dir)


def test_load_dataset_missing_directory(tmp_path):
    with pytest.raises(OSError):
        load_dataset("idx", str(tmp_path / "nowhere"))


def test_subset():
    from imacsim.datasets import Dataset

    ds = Dataset(images=np.zeros((10, 1, 32, 32), dtype=np.float32),
                 labels=np.arange(10))
    sub = ds.subset(4)
    assert len(sub) == 4
    assert sub.labels.tolist() == [0, 1, 2, 3]
    with pytest.raises(InputDomainError):
        ds.subset(0)
