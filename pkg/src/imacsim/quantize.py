"""Symmetric linear quantization to sign-magnitude integers.

Bit widths count the sign: bits = 5 means one sign bit plus four
magnitude bits, hence codes in [-15, 15]. That is the native word of the
storage array (four magnitude cells and a sign cell per weight) and the
grid all reported accuracies use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError


@dataclass(frozen=True)
class QuantScheme:
    """Network-wide precision choice, sign bit included in each width."""

    weight_bits: int = 5
    activation_bits: int = 5

    def __post_init__(self) -> None:
        if self.weight_bits < 2 or self.activation_bits < 2:
            raise InputDomainError("bit widths must be at least 2 (sign plus magnitude)")
        if self.weight_bits > 5 or self.activation_bits > 5:
            raise InputDomainError("the array stores at most 4 magnitude bits per word")

    @property
    def weight_mag_max(self) -> int:
        return (1 << (self.weight_bits - 1)) - 1

    @property
    def activation_mag_max(self) -> int:
        return (1 << (self.activation_bits - 1)) - 1


def quantize_linear(x: np.ndarray, bits: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Quantize a float tensor onto the symmetric grid of the given width.

    scale = max|x| / (2^(bits-1) - 1); an all-zero tensor keeps scale 1
    so dequantization stays well defined. Returns (sign, magnitude,
    scale) with sign in {+1, -1} (int8) and magnitude unsigned (uint8).
    """
    if bits < 2:
        raise InputDomainError("bits must be at least 2")
    x = np.asarray(x, dtype=np.float64)
    mag_max = (1 << (bits - 1)) - 1
    amax = float(np.max(np.abs(x))) if x.size else 0.0
    scale = amax / mag_max if amax > 0.0 else 1.0
    if scale <= 0.0 or not np.isfinite(scale):
        scale = 1.0  # subnormal amax underflows the division
    q = np.rint(x / scale)
    q = np.clip(q, -mag_max, mag_max)
    sign = np.where(q < 0, -1, 1).astype(np.int8)
    mag = np.abs(q).astype(np.uint8)
    return sign, mag, scale


def dequantize(sign: np.ndarray, mag: np.ndarray, scale: float) -> np.ndarray:
    return sign.astype(np.float64) * mag.astype(np.float64) * scale
