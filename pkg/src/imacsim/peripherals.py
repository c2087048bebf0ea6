"""Sample/hold accumulator, design-constraint checker, SAR ADC, decoder.

Accumulation model: each cycle dumps the sampled product-node charge onto
the accumulation capacitor through a source follower, raising it by
(c_sample / c_acc) * (v_sample - v_th_m9). The follower conducts only
while the sample node sits above its threshold, and the accumulated
voltage must in turn stay below that threshold so later cycles still
conduct. Both conditions are enforced here at runtime and audited for a
parameter set by check_constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConstraintError, InputDomainError
from .params import FULL_SCALE_PRODUCT, AdcConfig, DeviceParams


@dataclass
class AccumulatorState:
    """Mutable accumulation-capacitor state: voltage plus cycle count."""

    params: DeviceParams
    v_acc: float = 0.0
    count: int = 0

    def reset(self) -> None:
        # Explicit discharge between conversions; nothing is carried over.
        self.v_acc = 0.0
        self.count = 0


def accumulate(state: AccumulatorState, v_sample_mv: float) -> float:
    """Run one sample-and-dump cycle; returns the new accumulated voltage."""
    p = state.params
    if state.count >= p.n_acc:
        raise CapacityError(
            f"accumulator already holds {state.count} cycles (limit {p.n_acc})"
        )
    if v_sample_mv < p.v_th_m9:
        raise ConstraintError(
            f"sample voltage {v_sample_mv:.3f} mV below follower threshold "
            f"{p.v_th_m9:.3f} mV; the charge dump would not conduct"
        )
    if v_sample_mv > p.v_dd:
        raise ConstraintError(f"sample voltage {v_sample_mv:.3f} mV above v_dd")
    new_v = state.v_acc + p.acc_gain * (v_sample_mv - p.v_th_m9)
    if new_v > p.v_th_m9:
        raise ConstraintError(
            f"accumulated voltage {new_v:.3f} mV would exceed the follower "
            f"threshold {p.v_th_m9:.3f} mV and stall later cycles"
        )
    state.v_acc = new_v
    state.count += 1
    return state.v_acc


@dataclass(frozen=True)
class ConstraintReport:
    """Result of auditing a parameter set against the two design rules."""

    sample_floor_ok: bool
    sample_floor_slack_mv: float
    headroom_ok: bool
    headroom_slack_mv: float
    worst_case_v_acc_mv: float

    @property
    def ok(self) -> bool:
        return self.sample_floor_ok and self.headroom_ok


def check_constraints(params: DeviceParams) -> ConstraintReport:
    """Audit a parameter set without running anything.

    Rule 1: the lowest reachable product voltage must keep the follower
    conducting, v_product_min >= v_th_m9.
    Rule 2: n_acc worst-case cycles must not push the accumulator past
    the follower threshold, n_acc * delta_v_max <= v_th_m9. Boundary
    equality passes: the final cycle may land exactly on the threshold.
    """
    floor_slack = params.v_product_min - params.v_th_m9
    worst = params.n_acc * params.delta_v_max
    headroom_slack = params.v_th_m9 - worst
    return ConstraintReport(
        sample_floor_ok=floor_slack >= 0.0,
        sample_floor_slack_mv=floor_slack,
        headroom_ok=headroom_slack >= 0.0,
        headroom_slack_mv=headroom_slack,
        worst_case_v_acc_mv=worst,
    )


def sar_adc(v_in_mv: float, cfg: AdcConfig) -> int:
    """Bit-by-bit successive approximation against exact level thresholds.

    Keeps a trial bit whenever v_in >= v_lo + trial * lsb, which realizes
    floor((v_in - v_lo) / lsb) clipped into [0, 2^bits - 1]: anything at
    or below v_lo reads 0, anything at or above v_hi saturates to full
    code. Saturation is one-sided truncation, not an error.
    """
    if math.isnan(v_in_mv):
        raise InputDomainError("adc input is NaN")
    code = 0
    for bit in reversed(range(cfg.bits)):
        trial = code | (1 << bit)
        if v_in_mv >= cfg.v_lo + trial * cfg.lsb:
            code = trial
    return code


def sar_adc_array(v_in_mv: np.ndarray, cfg: AdcConfig) -> np.ndarray:
    """Vectorized SAR loop; same thresholds, same codes, any shape."""
    v = np.asarray(v_in_mv, dtype=np.float64)
    code = np.zeros(v.shape, dtype=np.int64)
    for bit in reversed(range(cfg.bits)):
        trial = code | (1 << bit)
        keep = v >= cfg.v_lo + trial * cfg.lsb
        code = np.where(keep, trial, code)
    return code


def adc_code_table(cfg: AdcConfig) -> list[dict[str, float | int]]:
    """The full code -> voltage-bin table, one row per code."""
    rows = []
    for code in range(cfg.levels):
        lo = cfg.v_lo + code * cfg.lsb
        hi = cfg.v_lo + (code + 1) * cfg.lsb
        rows.append(
            {
                "code": code,
                "v_low_mv": lo,
                "v_high_mv": hi,
                "v_center_mv": 0.5 * (lo + hi),
            }
        )
    return rows


def decode_table(cfg: AdcConfig, params: DeviceParams, n_used: int | None = None) -> np.ndarray:
    """Per-code estimates of the summed product, in integer product units.

    A capacitor that saw n_used cycles ends at
        v_acc = n_used * delta_v_max - acc_slope * sum(products),
    so each ADC code pins sum(products) to an interval. The estimate for
    a code is the midpoint of the integers reachable inside that
    interval, clipped to [0, n_used * 225]. Midpoints over integers keep
    the absolute decode error at or below half the bin width in product
    units, with no float-boundary surprises.
    """
    n = params.n_acc if n_used is None else n_used
    if n < 0:
        raise InputDomainError("n_used cannot be negative")
    if n == 0:
        return np.zeros(cfg.levels, dtype=np.int64)
    v_top = n * params.delta_v_max
    slope = params.acc_slope_mv
    p_max = n * FULL_SCALE_PRODUCT
    table = np.empty(cfg.levels, dtype=np.int64)
    for code in range(cfg.levels):
        v_bin_lo = cfg.v_lo + code * cfg.lsb
        # Voltages below the bin's upper edge mean strictly more product;
        # the top code has no upper edge, so its interval closes at 0.
        if code == cfg.levels - 1:
            p_lo = -1.0
        else:
            p_lo = (v_top - (v_bin_lo + cfg.lsb)) / slope
        if code == 0:
            p_hi = float(p_max)
        else:
            p_hi = (v_top - v_bin_lo) / slope
        lo_int = max(0, math.floor(p_lo) + 1)
        hi_int = min(p_max, math.floor(p_hi))
        if hi_int < lo_int:
            # Code unreachable for this n; pin to the nearer rail.
            est = 0 if p_hi < 0 else p_max
        else:
            est = (lo_int + hi_int + 1) // 2
        table[code] = est
    return table


def decode_mac(
    code_pos: int,
    code_neg: int,
    cfg: AdcConfig,
    params: DeviceParams,
    n_pos: int | None = None,
    n_neg: int | None = None,
) -> int:
    """Signed MAC estimate from the two capacitor codes.

    Each code is inverted through the accumulation affine map (see
    decode_table), and the negative-capacitor estimate is subtracted
    from the positive one. With no cycles on a capacitor its estimate is
    zero by definition. Results are integers; when intermediate
    midpoints fall between integers the tie rounds away from zero.
    """
    for name, code in (("code_pos", code_pos), ("code_neg", code_neg)):
        if not 0 <= code < cfg.levels:
            raise InputDomainError(f"{name} {code} outside [0, {cfg.levels - 1}]")
    pos = int(decode_table(cfg, params, n_pos)[code_pos])
    neg = int(decode_table(cfg, params, n_neg)[code_neg])
    return pos - neg


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))
