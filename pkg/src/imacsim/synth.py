"""Deterministic synthetic image datasets for self-contained experiments.

Digit images are rendered from vector stroke glyphs with per-sample
affine jitter, endpoint wobble, stroke-width and brightness variation,
and pixel noise, then stored in the same binary formats the loaders
read. Sample i of a split always comes from stream (seed, tag, i), so
files are byte-identical across runs and machines regardless of batch
sizing. The color set is ten procedural texture classes, enough to
exercise a conv stack without any claim of photographic realism.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .datasets import write_cifar10_batch, write_idx_images, write_idx_labels
from .errors import InputDomainError
from .variation import rng_stream

_DIGIT_TAG = 0xD161
_COLOR_TAG = 0xC1FA
_TRAIN = 0
_TEST = 1


def _circle(cx: float, cy: float, r: float, n: int = 10) -> list[tuple[float, float]]:
    pts = []
    for i in range(n + 1):
        t = 2.0 * math.pi * i / n
        pts.append((cx + r * math.sin(t), cy - r * math.cos(t)))
    return pts


# Stroke glyphs in a unit box, x right, y down, loosely handwriting-shaped.
GLYPHS: dict[int, list[list[tuple[float, float]]]] = {
    0: [_circle(0.5, 0.5, 0.30)],
    1: [[(0.36, 0.28), (0.54, 0.14), (0.54, 0.86)]],
    2: [[(0.28, 0.30), (0.34, 0.16), (0.58, 0.12), (0.70, 0.26), (0.62, 0.45), (0.30, 0.84)],
        [(0.30, 0.84), (0.74, 0.84)]],
    3: [[(0.30, 0.16), (0.58, 0.12), (0.68, 0.28), (0.50, 0.46)],
        [(0.50, 0.46), (0.70, 0.60), (0.62, 0.82), (0.32, 0.84)]],
    4: [[(0.60, 0.12), (0.26, 0.58), (0.76, 0.58)], [(0.62, 0.34), (0.62, 0.88)]],
    5: [[(0.68, 0.14), (0.34, 0.14), (0.31, 0.46)],
        [(0.31, 0.46), (0.58, 0.42), (0.70, 0.60), (0.58, 0.82), (0.30, 0.80)]],
    6: [[(0.62, 0.12), (0.40, 0.38), (0.31, 0.62)],
        [(0.31, 0.62), (0.36, 0.82), (0.58, 0.86), (0.69, 0.68), (0.58, 0.53), (0.34, 0.57)]],
    7: [[(0.26, 0.16), (0.74, 0.14), (0.44, 0.86)]],
    8: [_circle(0.5, 0.31, 0.17), _circle(0.5, 0.66, 0.21)],
    9: [_circle(0.53, 0.34, 0.18), [(0.71, 0.34), (0.66, 0.62), (0.52, 0.86)]],
}


def _segments(digit: int) -> np.ndarray:
    """Glyph strokes flattened to an (n_segments, 4) endpoint array."""
    segs = []
    for stroke in GLYPHS[digit]:
        for a, b in zip(stroke[:-1], stroke[1:]):
            segs.append((a[0], a[1], b[0], b[1]))
    return np.array(segs, dtype=np.float64)


def render_digit(digit: int, rng: np.random.Generator, size: int = 28) -> np.ndarray:
    """One jittered grayscale glyph image, uint8 (size, size)."""
    if digit not in GLYPHS:
        raise InputDomainError(f"digit {digit} has no glyph")
    segs = _segments(digit).reshape(-1, 2, 2)

    theta = rng.uniform(-0.21, 0.21)
    scale = rng.uniform(0.82, 1.08)
    aspect = rng.uniform(0.9, 1.1)
    shift = rng.uniform(-0.07, 0.07, size=2)
    wobble = rng.normal(0.0, 0.013, size=segs.shape)
    width = rng.uniform(0.042, 0.062)
    ink = rng.uniform(0.78, 1.0)

    pts = segs + wobble - 0.5
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    pts = pts @ rot.T
    pts[..., 0] *= scale * aspect
    pts[..., 1] *= scale
    pts = pts + 0.5 + shift

    # point-to-segment distance field over the pixel grid
    ax, ay = pts[:, 0, 0], pts[:, 0, 1]
    bx, by = pts[:, 1, 0], pts[:, 1, 1]
    g = (np.arange(size) + 0.5) / size
    px, py = np.meshgrid(g, g)
    px = px.reshape(-1, 1)
    py = py.reshape(-1, 1)
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    den = np.where(den < 1e-12, 1e-12, den)
    t = ((px - ax) * dx + (py - ay) * dy) / den
    t = np.clip(t, 0.0, 1.0)
    qx = ax + t * dx
    qy = ay + t * dy
    d = np.sqrt((px - qx) ** 2 + (py - qy) ** 2).min(axis=1).reshape(size, size)

    img = ink / (1.0 + np.exp((d - width) / 0.012))
    img += rng.normal(0.0, 0.035, size=img.shape)
    n_specks = rng.integers(0, 4)
    for _ in range(n_specks):
        sx, sy = rng.integers(0, size, size=2)
        img[sy, sx] = min(1.0, img[sy, sx] + rng.uniform(0.3, 0.8))
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def digit_dataset(n: int, seed: int = 0, split: str = "test") -> tuple[np.ndarray, np.ndarray]:
    """n stroke-digit images plus labels; sample i is independent of n."""
    if n < 1:
        raise InputDomainError("dataset size must be at least 1")
    tag = _TRAIN if split == "train" else _TEST
    images = np.empty((n, 28, 28), dtype=np.uint8)
    labels = np.empty(n, dtype=np.uint8)
    for i in range(n):
        rng = rng_stream(seed, _DIGIT_TAG, tag, i)
        digit = int(rng.integers(0, 10))
        labels[i] = digit
        images[i] = render_digit(digit, rng)
    return images, labels


def _texture(label: int, rng: np.random.Generator, size: int = 32) -> np.ndarray:
    """One 10-class procedural color texture, uint8 (3, size, size)."""
    g = np.arange(size) / size
    xx, yy = np.meshgrid(g, g)
    kind = label % 5
    freq = 2.0 + label + rng.uniform(-0.4, 0.4)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    angle = rng.uniform(0.0, math.pi)
    u = xx * math.cos(angle) + yy * math.sin(angle)
    if kind == 0:
        base = 0.5 + 0.5 * np.sin(2.0 * math.pi * freq * u + phase)
    elif kind == 1:
        base = ((xx * freq).astype(int) + (yy * freq).astype(int)) % 2
        base = base.astype(np.float64)
    elif kind == 2:
        r = np.sqrt((xx - 0.5) ** 2 + (yy - 0.5) ** 2)
        base = 0.5 + 0.5 * np.cos(2.0 * math.pi * freq * r + phase)
    elif kind == 3:
        base = np.zeros_like(xx)
        for _ in range(4 + label):
            cx, cy = rng.uniform(0.1, 0.9, size=2)
            s = rng.uniform(0.02, 0.08)
            base += np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * s * s))
        base = np.clip(base, 0.0, 1.0)
    else:
        base = (u - u.min()) / max(float(np.ptp(u)), 1e-9)
    hue = (label / 10.0 + rng.uniform(-0.03, 0.03)) % 1.0
    channels = []
    for c in range(3):
        w = 0.5 + 0.5 * math.cos(2.0 * math.pi * (hue + c / 3.0))
        chan = 0.15 + 0.7 * base * w + rng.normal(0.0, 0.04, size=base.shape)
        channels.append(np.clip(chan, 0.0, 1.0))
    return (np.stack(channels) * 255.0 + 0.5).astype(np.uint8)


def color_dataset(n: int, seed: int = 0, split: str = "test") -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise InputDomainError("dataset size must be at least 1")
    tag = _TRAIN if split == "train" else _TEST
    images = np.empty((n, 3, 32, 32), dtype=np.uint8)
    labels = np.empty(n, dtype=np.uint8)
    for i in range(n):
        rng = rng_stream(seed, _COLOR_TAG, tag, i)
        label = int(rng.integers(0, 10))
        labels[i] = label
        images[i] = _texture(label, rng)
    return images, labels


def write_digit_files(directory: str, n_train: int, n_test: int, seed: int = 0) -> None:
    """Standard-named image/label pairs for both splits under directory."""
    os.makedirs(directory, exist_ok=True)
    for split, prefix, n in (("train", "train", n_train), ("test", "t10k", n_test)):
        if n < 1:
            continue
        images, labels = digit_dataset(n, seed, split)
        write_idx_images(os.path.join(directory, f"{prefix}-images-idx3-ubyte"), images)
        write_idx_labels(os.path.join(directory, f"{prefix}-labels-idx1-ubyte"), labels)


def write_color_files(directory: str, n_test: int, seed: int = 0) -> None:
    os.makedirs(directory, exist_ok=True)
    images, labels = color_dataset(n_test, seed, "test")
    write_cifar10_batch(os.path.join(directory, "test_batch.bin"), images, labels)
