"""Parameter sets for the analog MAC pipeline.

All voltages are millivolts, capacitances femtofarads, wordline timing in
units of the bitline discharge time constant tau. Defaults describe the
reference design point; every field can be overridden from a JSON config
file (unknown keys are rejected, see ``load_config``).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError

# Full-scale unsigned product of two 4-bit magnitudes: 15 * 15.
FULL_SCALE_PRODUCT = 225


@dataclass(frozen=True)
class DeviceParams:
    """Analog constants of the bitcell array and accumulation chain.

    v_wl_min/v_wl_max anchor the input DAC line: digital input 0 maps to
    v_wl_min and 15 maps to v_wl_max. blb_targets are the per-bitline
    discharge endpoints at full-scale input, ordered MSB first so the
    discharge depths (v_dd - target) stand in ratio 8:4:2:1.
    """

    v_dd: float = 1200.0
    v_wl_min: float = 300.0
    v_wl_max: float = 1000.0
    v_blb_floor: float = 350.0
    blb_targets: tuple[float, ...] = (350.0, 775.0, 987.5, 1093.75)
    v_product_min: float = 750.0
    c_bitline: float = 50.0
    c_sample: float = 2.5
    c_acc: float = 40.0
    v_th_m9: float = 600.0
    n_acc: int = 10
    sigma_analog_mv: float = 13.17
    sigma_digital_code: float = 0.6

    def __post_init__(self) -> None:
        if not (0.0 < self.v_wl_min < self.v_wl_max <= self.v_dd):
            raise ConfigError("wordline range must satisfy 0 < v_wl_min < v_wl_max <= v_dd")
        if not (0.0 < self.v_blb_floor < self.v_dd):
            raise ConfigError("v_blb_floor must lie strictly inside (0, v_dd)")
        if len(self.blb_targets) != 4:
            raise ConfigError("blb_targets needs one endpoint per magnitude bitline (4)")
        if list(self.blb_targets) != sorted(self.blb_targets) or len(set(self.blb_targets)) != 4:
            raise ConfigError("blb_targets must be strictly increasing")
        if self.blb_targets[0] != self.v_blb_floor:
            raise ConfigError("deepest bitline endpoint must equal v_blb_floor")
        if self.blb_targets[-1] >= self.v_dd:
            raise ConfigError("bitline endpoints must stay below v_dd")
        if not (self.v_blb_floor <= self.v_product_min < self.v_dd):
            raise ConfigError("v_product_min must lie in [v_blb_floor, v_dd)")
        for name in ("c_bitline", "c_sample", "c_acc"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if not (0.0 < self.v_th_m9 < self.v_dd):
            raise ConfigError("v_th_m9 must lie strictly inside (0, v_dd)")
        if self.n_acc < 1:
            raise ConfigError("n_acc must be at least 1")
        if self.sigma_analog_mv < 0.0 or self.sigma_digital_code < 0.0:
            raise ConfigError("noise sigmas cannot be negative")

    # Derived constants used throughout the pipeline.

    @property
    def wl_span(self) -> float:
        return self.v_wl_max - self.v_wl_min

    @property
    def product_slope_mv(self) -> float:
        """Millivolts of product-node swing per unit of vin*w."""
        return (self.v_dd - self.v_product_min) / FULL_SCALE_PRODUCT

    @property
    def acc_gain(self) -> float:
        """Charge-dump ratio c_sample/c_acc of one accumulation cycle."""
        return self.c_sample / self.c_acc

    @property
    def delta_v_max(self) -> float:
        """Accumulator step for a zero product (sample node at v_dd)."""
        return self.acc_gain * (self.v_dd - self.v_th_m9)

    @property
    def acc_slope_mv(self) -> float:
        """Accumulated-voltage drop per product unit within one cycle."""
        return self.acc_gain * self.product_slope_mv

    @property
    def v_acc_full(self) -> float:
        """Accumulated voltage after n_acc zero-product cycles."""
        return self.n_acc * self.delta_v_max


def default_adc_range(params: DeviceParams) -> tuple[float, float]:
    """Converter range that exactly covers the reachable accumulator span.

    After n_acc cycles the accumulator sits between n_acc full-scale
    drops (all products at maximum) and n_acc zero-product steps.
    """
    hi = params.v_acc_full
    lo = hi - params.n_acc * FULL_SCALE_PRODUCT * params.acc_slope_mv
    return lo, hi


@dataclass(frozen=True)
class AdcConfig:
    """Successive-approximation converter: bits and input range in mV."""

    bits: int = 4
    v_lo: float = 93.75
    v_hi: float = 375.0

    def __post_init__(self) -> None:
        if self.bits < 1 or self.bits > 16:
            raise ConfigError("adc bits must lie in [1, 16]")
        if not self.v_lo < self.v_hi:
            raise ConfigError("adc range must satisfy v_lo < v_hi")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def lsb(self) -> float:
        return (self.v_hi - self.v_lo) / self.levels


NOISE_LEVELS = ("none", "analog", "digital")


@dataclass(frozen=True)
class NoiseSpec:
    """Which non-ideality to model and how strongly.

    analog: Gaussian disturbance of every sampled product voltage.
    digital: Gaussian error on decoded MAC values, scaled by the square
    root of the number of accumulate-convert groups.
    """

    level: str = "none"
    sigma_analog_mv: float = 13.17
    sigma_digital_code: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.level not in NOISE_LEVELS:
            raise ConfigError(f"noise level must be one of {NOISE_LEVELS}")
        if self.sigma_analog_mv < 0.0 or self.sigma_digital_code < 0.0:
            raise ConfigError("noise sigmas cannot be negative")

    @property
    def active(self) -> bool:
        return self.level != "none"


def _from_mapping(cls, data: dict[str, Any], where: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "blb_targets":
            if not isinstance(value, (list, tuple)):
                raise ConfigError("blb_targets must be a list of four voltages")
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad value in {where}: {exc}") from exc


def load_config(path: str) -> tuple[DeviceParams, AdcConfig]:
    """Read a JSON config with optional "device" and "adc" sections.

    Parsing is strict: unknown sections or keys raise ConfigError rather
    than being ignored, so typos cannot silently fall back to defaults.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    # "derived" is dump_config output, informational only; tolerate it so
    # a dumped file can be edited and fed straight back in.
    unknown = sorted(set(raw) - {"device", "adc", "derived"})
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    device = _from_mapping(DeviceParams, raw.get("device", {}), "device section")
    adc_section = raw.get("adc", None)
    if adc_section is None:
        lo, hi = default_adc_range(device)
        adc = AdcConfig(v_lo=lo, v_hi=hi)
    else:
        adc = _from_mapping(AdcConfig, adc_section, "adc section")
    return device, adc


def dump_config(params: DeviceParams, adc: AdcConfig) -> str:
    """Serialize the full parameter set, derived values included."""
    payload = {
        "device": dataclasses.asdict(params),
        "adc": dataclasses.asdict(adc),
        "derived": {
            "wl_span_mv": params.wl_span,
            "product_slope_mv_per_unit": params.product_slope_mv,
            "delta_v_max_mv": params.delta_v_max,
            "acc_slope_mv_per_unit": params.acc_slope_mv,
            "v_acc_full_mv": params.v_acc_full,
            "adc_lsb_mv": adc.lsb,
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True)
