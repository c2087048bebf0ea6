"""Array-level MAC engine: weight placement, grouped evaluation, decode.

Sign handling is digital. A weight occupies bits_per_weight adjacent
cells in a row: four magnitude bits plus one sign cell. The analog path
multiplies magnitudes only; each product lands on the positive or the
negative accumulation capacitor according to the XOR of the operand
signs, and the two converted codes are subtracted digitally.

Every conversion covers exactly r_amortization accumulation slots. A slot
deposits its product on the capacitor selected by its sign and a
zero-product reference sample on the opposite capacitor, so both
capacitors always integrate the same number of cycles and the converter
input range never depends on how the signs happened to split. Dot
products longer than one group are split into ceil(len / R) groups whose
decoded values are summed digitally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, InputDomainError, PlacementError
from .params import AdcConfig, DeviceParams, NoiseSpec
from . import device as dev
from .peripherals import decode_table, sar_adc_array
from .variation import MacErrorMap, perturb_analog, rng_stream, sample_error_map


@dataclass(frozen=True)
class SignedWord:
    """Sign-magnitude operand: sign in {+1, -1}, magnitude in [0, 15]."""

    sign: int
    magnitude: int

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise InputDomainError("sign must be +1 or -1")
        if not isinstance(self.magnitude, (int, np.integer)) or isinstance(self.magnitude, bool):
            raise InputDomainError("magnitude must be an integer")
        if not 0 <= self.magnitude <= 15:
            raise InputDomainError(f"magnitude {self.magnitude} outside [0, 15]")

    @classmethod
    def from_int(cls, value: int) -> "SignedWord":
        if not -15 <= value <= 15:
            raise InputDomainError(f"value {value} outside the signed 4-bit range [-15, 15]")
        return cls(sign=1 if value >= 0 else -1, magnitude=abs(int(value)))

    @property
    def value(self) -> int:
        return self.sign * self.magnitude


def to_sign_mag(vec, name: str) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a sequence of SignedWord / plain ints to sign+mag arrays."""
    signs = np.empty(len(vec), dtype=np.int64)
    mags = np.empty(len(vec), dtype=np.int64)
    for i, item in enumerate(vec):
        if isinstance(item, SignedWord):
            word = item
        elif isinstance(item, (int, np.integer)) and not isinstance(item, bool):
            try:
                word = SignedWord.from_int(int(item))
            except InputDomainError as exc:
                raise InputDomainError(f"{name}[{i}]: {exc}") from None
        else:
            raise InputDomainError(f"{name}[{i}] is not a SignedWord or integer")
        signs[i] = word.sign
        mags[i] = word.magnitude
    return signs, mags


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of one storage array and the conversion cadence."""

    n_rows: int = 256
    n_cols: int = 256
    bits_per_weight: int = 5
    r_amortization: int = 10

    def __post_init__(self) -> None:
        if self.n_rows < 1 or self.n_cols < 1:
            raise InputDomainError("array dimensions must be positive")
        if self.bits_per_weight != 5:
            raise InputDomainError("layout expects 4 magnitude cells plus 1 sign cell")
        if self.r_amortization < 1:
            raise InputDomainError("r_amortization must be at least 1")

    @property
    def weights_per_row(self) -> int:
        return self.n_cols // self.bits_per_weight


@dataclass(frozen=True)
class StoredMatrix:
    """Weights placed on the array, plus the error map frozen at store time.

    signs/mags are indexed [row, column_group]; column group g occupies
    cells [g * bits_per_weight, (g + 1) * bits_per_weight) of each row,
    magnitude LSB leftmost, MSB in the fourth cell, sign cell last.
    """

    config: ArrayConfig
    signs: np.ndarray
    mags: np.ndarray
    error_map: MacErrorMap | None = None

    @property
    def n_rows_used(self) -> int:
        return int(self.signs.shape[0])

    @property
    def n_groups_per_column(self) -> int:
        return math.ceil(self.n_rows_used / self.config.r_amortization)

    def cell_span(self, column_group: int) -> tuple[int, int]:
        """Half-open cell-column interval occupied by one weight column."""
        b = self.config.bits_per_weight
        if not 0 <= column_group < self.signs.shape[1]:
            raise InputDomainError(f"column group {column_group} not stored")
        return column_group * b, (column_group + 1) * b

    def column(self, column_group: int) -> list[SignedWord]:
        self.cell_span(column_group)
        return [
            SignedWord(sign=int(s), magnitude=int(m))
            for s, m in zip(self.signs[:, column_group], self.mags[:, column_group])
        ]


def store_weights(
    weights,
    cfg: ArrayConfig | None = None,
    spec: NoiseSpec | None = None,
    trial: int = 0,
    layer: int = 0,
) -> StoredMatrix:
    """Place a weight matrix (rows x columns of SignedWord) on the array.

    Rows are dot-product elements, columns are independent outputs. A
    matrix that does not fit raises PlacementError. When the noise spec
    is digital, a per-column error value is drawn here and stays frozen
    until the weights are stored again.
    """
    cfg = cfg if cfg is not None else ArrayConfig()
    rows = list(weights)
    if not rows:
        raise PlacementError("weight matrix is empty")
    n_cols = len(rows[0])
    sign_rows, mag_rows = [], []
    for r, row in enumerate(rows):
        if len(row) != n_cols:
            raise PlacementError(f"row {r} has {len(row)} weights, expected {n_cols}")
        s, m = to_sign_mag(row, f"weights[{r}]")
        sign_rows.append(s)
        mag_rows.append(m)
    signs = np.stack(sign_rows)
    mags = np.stack(mag_rows)
    if signs.shape[0] > cfg.n_rows:
        raise PlacementError(f"{signs.shape[0]} rows exceed the array's {cfg.n_rows}")
    if signs.shape[1] > cfg.weights_per_row:
        raise PlacementError(
            f"{signs.shape[1]} weights per row exceed capacity "
            f"{cfg.weights_per_row} ({cfg.n_cols} cells / {cfg.bits_per_weight} per weight)"
        )
    error_map = None
    if spec is not None and spec.level == "digital":
        n_groups = math.ceil(signs.shape[0] / cfg.r_amortization)
        error_map = sample_error_map(
            (signs.shape[1],), n_groups, spec, trial=trial, layer=layer
        )
    return StoredMatrix(config=cfg, signs=signs, mags=mags, error_map=error_map)


def exact_mac_oracle(vin_vec, w_vec) -> int:
    """Plain integer dot product: sum of sign * |vin| * |w|."""
    vin_sign, vin_mag = to_sign_mag(vin_vec, "vin")
    w_sign, w_mag = to_sign_mag(w_vec, "w")
    if vin_mag.size != w_mag.size:
        raise InputDomainError(
            f"vin length {vin_mag.size} does not match w length {w_mag.size}"
        )
    return int(np.sum(vin_sign * w_sign * vin_mag * w_mag))


def eval_mac_groups(
    vin_sign: np.ndarray,
    vin_mag: np.ndarray,
    w_sign: np.ndarray,
    w_mag: np.ndarray,
    params: DeviceParams,
    adc: AdcConfig,
    spec: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized group evaluation. Inputs are shaped (..., R).

    Returns (decoded, code_pos, code_neg) with the leading shape. The
    last axis is one conversion group; pad unused slots with magnitude 0.
    """
    products = vin_mag * w_mag
    signs = vin_sign * w_sign

    v_prod = params.v_dd - params.product_slope_mv * products
    v_ref = np.full_like(v_prod, params.v_dd)
    if spec is not None and spec.level == "analog":
        if rng is None:
            rng = rng_stream(spec.seed, 1, 0)
        v_prod = perturb_analog(v_prod, spec, params, rng)
        v_ref = perturb_analog(v_ref, spec, params, rng)

    if np.any(v_prod < params.v_th_m9) or np.any(v_ref < params.v_th_m9):
        raise ConstraintError(
            "a sampled product voltage fell below the follower threshold; "
            "the charge dump would not conduct"
        )

    dv_prod = params.acc_gain * (v_prod - params.v_th_m9)
    dv_ref = params.acc_gain * (v_ref - params.v_th_m9)

    pos_mask = signs >= 0
    v_pos = np.where(pos_mask, dv_prod, dv_ref).sum(axis=-1)
    v_neg = np.where(pos_mask, dv_ref, dv_prod).sum(axis=-1)

    if np.any(v_pos > params.v_th_m9) or np.any(v_neg > params.v_th_m9):
        raise ConstraintError(
            "accumulated voltage exceeded the follower threshold; "
            "reduce n_acc or c_sample/c_acc"
        )

    code_pos = sar_adc_array(v_pos, adc)
    code_neg = sar_adc_array(v_neg, adc)
    table = decode_table(adc, params, params.n_acc)
    decoded = table[code_pos] - table[code_neg]
    return decoded, code_pos, code_neg


def _group_operands(
    vin_sign: np.ndarray, vin_mag: np.ndarray, w_sign: np.ndarray, w_mag: np.ndarray, r: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = vin_mag.size
    n_groups = math.ceil(n / r)
    pad = n_groups * r - n

    def shape(arr, fill):
        out = np.concatenate([arr, np.full(pad, fill, dtype=arr.dtype)])
        return out.reshape(n_groups, r)

    return (
        shape(vin_sign, 1),
        shape(vin_mag, 0),
        shape(w_sign, 1),
        shape(w_mag, 0),
    )


def eval_dot_product(
    vin_sign: np.ndarray,
    vin_mag: np.ndarray,
    w_sign: np.ndarray,
    w_mag: np.ndarray,
    params: DeviceParams,
    adc: AdcConfig,
    spec: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[int, np.ndarray, np.ndarray]:
    """Group a full vector pair, evaluate, and sum the decoded groups."""
    if vin_mag.size == 0:
        raise InputDomainError("empty dot product")
    r = params.n_acc
    gs, gm, ws, wm = _group_operands(vin_sign, vin_mag, w_sign, w_mag, r)
    decoded, code_pos, code_neg = eval_mac_groups(gs, gm, ws, wm, params, adc, spec, rng)
    return int(decoded.sum()), code_pos, code_neg


def dot_product(
    vin_vec,
    stored,
    column_group: int = 0,
    spec: NoiseSpec | None = None,
    params: DeviceParams | None = None,
    adc: AdcConfig | None = None,
    rng: np.random.Generator | None = None,
) -> int:
    """Decoded MAC of an input vector against one stored weight column.

    stored may be a StoredMatrix (column_group selects the weights) or a
    plain weight vector. Noise levels: none gives the deterministic
    pipeline, analog perturbs every sampled voltage, digital adds the
    frozen store-time error for that column (rounded at the end, ties
    away from zero).
    """
    params = params if params is not None else DeviceParams()
    adc = adc if adc is not None else AdcConfig()
    vin_sign, vin_mag = to_sign_mag(vin_vec, "vin")

    error = 0.0
    if isinstance(stored, StoredMatrix):
        if vin_mag.size > stored.n_rows_used:
            raise InputDomainError(
                f"vin length {vin_mag.size} exceeds stored rows {stored.n_rows_used}"
            )
        w_sign = stored.signs[: vin_mag.size, column_group]
        w_mag = stored.mags[: vin_mag.size, column_group]
        if spec is not None and spec.level == "digital":
            if stored.error_map is None:
                raise InputDomainError(
                    "digital noise requested but the matrix was stored without it"
                )
            error = float(stored.error_map.values[column_group])
    else:
        w_sign, w_mag = to_sign_mag(stored, "w")
        if vin_mag.size != w_mag.size:
            raise InputDomainError(
                f"vin length {vin_mag.size} does not match w length {w_mag.size}"
            )
        if spec is not None and spec.level == "digital":
            n_groups = math.ceil(vin_mag.size / params.n_acc)
            error = float(sample_error_map((1,), n_groups, spec).values[0])

    value, _, _ = eval_dot_product(vin_sign, vin_mag, w_sign, w_mag, params, adc, spec, rng)
    if error != 0.0:
        x = value + error
        value = int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))
    return value


def mac_trace(vin: SignedWord, w: SignedWord, params: DeviceParams, adc: AdcConfig) -> dict:
    """Stage-by-stage record of one product through the full pipeline."""
    drive = dev.dac_map(vin.magnitude, params)
    bits = dev.weight_to_bits(w.magnitude)
    bitlines = dev.bitline_voltages(vin.magnitude, bits, params)
    raw = dev.charge_share_raw(vin.magnitude, bits, params)
    product = dev.staggered_discharge_product(vin.magnitude, bits, params)
    decoded, code_pos, code_neg = eval_dot_product(
        np.array([vin.sign]),
        np.array([vin.magnitude]),
        np.array([w.sign]),
        np.array([w.magnitude]),
        params,
        adc,
    )
    return {
        "vin": vin.value,
        "w": w.value,
        "wordline_mv": drive.amplitude_mv,
        "wordline_tau": drive.duration_tau,
        "weight_bits_msb_first": list(bits),
        "bitlines_mv": [float(v) for v in bitlines],
        "charge_share_raw_mv": raw,
        "product_node_mv": product.voltage_mv,
        "delta_v_mv": params.acc_gain * (product.voltage_mv - params.v_th_m9),
        "code_pos": int(code_pos[0]),
        "code_neg": int(code_neg[0]),
        "decoded": int(decoded),
        "exact": vin.value * w.value,
    }
