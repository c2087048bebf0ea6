"""Bitcell-level behavior: wordline drive, staggered discharge, charge share.

The multiply happens in two steps. A 4-bit digital input is turned into a
wordline pulse whose amplitude is linear in the input. Four bitlines, one
per weight magnitude bit, discharge toward per-bit endpoints sized in the
ratio 8:4:2:1, but only where the stored bit is one. Shorting the four
bitlines together then averages their charge, leaving a voltage that is
affine in the product vin * w.

The raw charge-shared voltage spans [mean(blb_targets), v_dd]. A one-time
affine recalibration (fixed at construction from the two full-scale
endpoints, never fitted per sample) maps that span onto the product-node
convention [v_product_min, v_dd] used by everything downstream, making the
pipeline exactly linear in vin * w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError
from .params import DeviceParams

# Wordline pulse length in bitline time constants. The most significant
# bitline needs 8 tau to reach its endpoint; shorter pulses would leave
# the 8:4:2:1 discharge ratio unrealized.
WL_DURATION_TAU = 8.0

STAGES = ("bitline", "charge_share", "sample", "accumulate")


@dataclass(frozen=True)
class WordlineDrive:
    """Amplitude (mV) and duration (tau) of one functional-read pulse."""

    amplitude_mv: float
    duration_tau: float = WL_DURATION_TAU


@dataclass(frozen=True)
class AnalogSample:
    """A voltage tagged with the pipeline stage that produced it."""

    voltage_mv: float
    stage: str = "charge_share"

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise InputDomainError(f"unknown analog stage {self.stage!r}")


def _check_vin(vin: int) -> None:
    if not isinstance(vin, (int, np.integer)) or isinstance(vin, bool):
        raise InputDomainError("vin must be an integer")
    if not 0 <= vin <= 15:
        raise InputDomainError(f"vin {vin} outside the 4-bit range [0, 15]")


def _check_w(w: int) -> None:
    if not isinstance(w, (int, np.integer)) or isinstance(w, bool):
        raise InputDomainError("w must be an integer")
    if not 0 <= w <= 15:
        raise InputDomainError(f"w {w} outside the 4-bit range [0, 15]")


def dac_map(vin: int, params: DeviceParams) -> WordlineDrive:
    """Wordline DAC: amplitude = v_wl_min + vin * span / 15."""
    _check_vin(vin)
    amplitude = params.v_wl_min + vin * params.wl_span / 15.0
    return WordlineDrive(amplitude_mv=amplitude)


def discharge_rate(amplitude_mv: float, params: DeviceParams) -> float:
    """Fraction of the per-bit discharge depth realized at this amplitude.

    Normalized against the DAC endpoints: v_wl_min gives 0 (access device
    barely on), v_wl_max gives 1 (endpoint reached within the pulse).
    """
    rate = (amplitude_mv - params.v_wl_min) / params.wl_span
    if rate < 0.0 or rate > 1.0:
        raise InputDomainError(
            f"amplitude {amplitude_mv} mV outside the DAC range "
            f"[{params.v_wl_min}, {params.v_wl_max}] mV"
        )
    return rate


def ideal_product_voltage(vin: int, w: int, params: DeviceParams) -> AnalogSample:
    """Product-node voltage of an ideal multiplier: v_dd - slope * vin * w."""
    _check_vin(vin)
    _check_w(w)
    voltage = params.v_dd - params.product_slope_mv * (vin * w)
    return AnalogSample(voltage_mv=voltage, stage="charge_share")


def bitline_voltages(vin: int, w_bits: tuple[int, int, int, int], params: DeviceParams) -> np.ndarray:
    """Per-bitline voltages after the staggered discharge, MSB first.

    Bitline i (weight bit one) discharges from v_dd toward blb_targets[i]
    in proportion to the wordline discharge rate; bitlines holding a zero
    stay precharged at v_dd.
    """
    _check_vin(vin)
    if len(w_bits) != 4 or any(b not in (0, 1) for b in w_bits):
        raise InputDomainError("w_bits must be four 0/1 values, MSB first")
    rate = discharge_rate(dac_map(vin, params).amplitude_mv, params)
    targets = np.asarray(params.blb_targets, dtype=np.float64)
    depths = (params.v_dd - targets) * np.asarray(w_bits, dtype=np.float64)
    return params.v_dd - rate * depths


def charge_share_raw(vin: int, w_bits: tuple[int, int, int, int], params: DeviceParams) -> float:
    """Uncalibrated charge-share result: plain mean of the four bitlines.

    Equal bitline capacitances make the shared voltage the arithmetic
    mean regardless of c_bitline's absolute value.
    """
    return float(bitline_voltages(vin, w_bits, params).mean())


def charge_share_gain(params: DeviceParams) -> float:
    """Gain of the fixed recalibration from raw span to product span.

    Both maps leave v_dd fixed (zero product); the gain aligns the raw
    full-scale endpoint mean(blb_targets) with v_product_min.
    """
    raw_full = float(np.mean(params.blb_targets))
    return (params.v_dd - params.v_product_min) / (params.v_dd - raw_full)


def staggered_discharge_product(
    vin: int, w_bits: tuple[int, int, int, int], params: DeviceParams
) -> AnalogSample:
    """Calibrated product voltage from the staggered multi-bitline read.

    Equals ideal_product_voltage(vin, w) for every operand pair because
    the per-bit depths are binary-weighted and the wordline rate is
    linear in vin, so the raw mean is already affine in vin * w.
    """
    raw = charge_share_raw(vin, w_bits, params)
    voltage = params.v_dd - charge_share_gain(params) * (params.v_dd - raw)
    return AnalogSample(voltage_mv=voltage, stage="charge_share")


def weight_to_bits(w: int) -> tuple[int, int, int, int]:
    """Split a 4-bit magnitude into its bits, MSB first."""
    _check_w(w)
    return ((w >> 3) & 1, (w >> 2) & 1, (w >> 1) & 1, w & 1)
