"""Synthetic dataset generator sanity checks."""

import os

import numpy as np

from imacsim.synth import color_dataset, digit_dataset


def test_digit_dataset_shapes_and_range():
    images, labels = digit_dataset(50, seed=0, split="test")
    assert images.shape == (50, 28, 28)
    assert images.dtype == np.uint8
    assert labels.shape == (50,)
    assert set(np.unique(labels)) <= set(range(10))
    assert images.max() > 128  # ink actually rendered


def test_digit_dataset_deterministic_and_split_separated():
    a_img, a_lab = digit_dataset(20, seed=0, split="test")
    b_img, b_lab = digit_dataset(20, seed=0, split="test")
    t_img, _ = digit_dataset(20, seed=0, split="train")
    assert np.array_equal(a_img, b_img)
    assert np.array_equal(a_lab, b_lab)
    assert not np.array_equal(a_img, t_img)


def test_digit_dataset_prefix_stable():
    # sample i depends only on (seed, split, i), so prefixes agree
    small_img, small_lab = digit_dataset(10, seed=0, split="test")
    big_img, big_lab = digit_dataset(30, seed=0, split="test")
    assert np.array_equal(big_img[:10], small_img)
    assert np.array_equal(big_lab[:10], small_lab)


def test_all_classes_present():
    _, labels = digit_dataset(200, seed=0, split="test")
    assert set(np.unique(labels)) == set(range(10))


def test_color_dataset_shapes():
    images, labels = color_dataset(12, seed=0, split="test")
    assert images.shape == (12, 3, 32, 32)
    assert images.dtype == np.uint8
    assert set(np.unique(labels)) <= set(range(10))


def test_written_files_have_standard_names(digits_dir, cifar_dir):
    names = set(os.listdir(digits_dir))
    assert {
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    } <= names
    assert "test_batch.bin" in os.listdir(cifar_dir)
