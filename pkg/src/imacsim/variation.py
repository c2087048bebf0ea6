"""Noise injection and Monte-Carlo machinery.

Randomness discipline: every stochastic quantity is drawn from a Philox
counter-based generator keyed by (seed, stream path). Trial i of any
experiment owns stream (seed, i) regardless of evaluation order or worker
count, so results are reproducible byte for byte and independent of
parallelism. numpy's Philox implementation is versioned with the package
dependency pin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError
from .params import AdcConfig, DeviceParams, NoiseSpec

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for one named stream: key = (seed, hash of the path).

    Streams with different paths are statistically independent; the same
    (seed, path) always reproduces the same draws.
    """
    h = _splitmix64(len(path))
    for item in path:
        h = _splitmix64(h ^ (int(item) & _MASK64))
    key = np.array([int(seed) & _MASK64, h], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def perturb_analog(
    v_mv: float | np.ndarray,
    spec: NoiseSpec,
    params: DeviceParams,
    rng: np.random.Generator,
):
    """Gaussian disturbance of a product voltage, clipped to the rails.

    The physical node cannot leave [v_blb_floor, v_dd]: it is charged
    from v_dd and discharged at most to the deepest bitline endpoint.
    """
    v = np.asarray(v_mv, dtype=np.float64)
    noisy = v + rng.normal(0.0, spec.sigma_analog_mv, size=v.shape)
    clipped = np.clip(noisy, params.v_blb_floor, params.v_dd)
    if np.ndim(v_mv) == 0:
        return float(clipped)
    return clipped


def adc_bin_product_units(params: DeviceParams, adc: AdcConfig) -> float:
    """Width of one ADC code expressed in integer product units."""
    return adc.lsb / params.acc_slope_mv


def mac_error_sigma(n_groups: int, spec: NoiseSpec) -> float:
    """Std of the digital-side error for an n_groups-deep dot product.

    Per-group conversion errors are independent, so the sigma grows with
    sqrt(n_groups): 0.6 -> 1.2 codes going from one group to four. The
    value is applied to output maps in their own units, matching the
    reference network-evaluation procedure (which never rescales the
    per-group code sigma by the converter bin).
    """
    if n_groups < 0:
        raise InputDomainError("n_groups cannot be negative")
    return spec.sigma_digital_code * float(np.sqrt(n_groups))


@dataclass(frozen=True)
class MacErrorMap:
    """Frozen additive error tensor for one weight placement.

    values are in MAC-value (product) units and stay fixed until the
    weights are explicitly re-stored, which resamples the map.
    """

    values: np.ndarray
    n_groups: int
    sigma: float
    seed: int
    trial: int


def sample_error_map(
    shape: tuple[int, ...],
    n_groups: int,
    spec: NoiseSpec,
    seed: int | None = None,
    trial: int = 0,
    layer: int = 0,
) -> MacErrorMap:
    """Draw the per-output-element error tensor for one weight placement."""
    use_seed = spec.seed if seed is None else seed
    # Only the digital abstraction uses maps; any other level means the
    # decoded values are already exact (or perturbed upstream).
    sigma = mac_error_sigma(n_groups, spec) if spec.level == "digital" else 0.0
    rng = rng_stream(use_seed, 0xE55, trial, layer)
    values = rng.normal(0.0, sigma, size=shape) if sigma > 0 else np.zeros(shape)
    return MacErrorMap(values=values, n_groups=n_groups, sigma=sigma, seed=use_seed, trial=trial)


@dataclass(frozen=True)
class MacDistribution:
    """Monte-Carlo summary over repeated evaluations of one dot product."""

    histogram: np.ndarray  # counts per positive-capacitor code
    codes: np.ndarray  # per-trial positive-capacitor code
    decoded: np.ndarray  # per-trial signed MAC estimate
    code_mean: float
    code_std: float
    decoded_mean: float
    decoded_std: float
    exact: int

    @property
    def trials(self) -> int:
        return int(self.codes.size)


def monte_carlo_mac(
    vin_vec,
    w_vec,
    trials: int,
    spec: NoiseSpec,
    params: DeviceParams | None = None,
    adc: AdcConfig | None = None,
) -> MacDistribution:
    """Repeat one dot product under the configured noise level.

    Trial t draws from stream (spec.seed, t), so histograms do not depend
    on execution order. The histogram tracks the positive-capacitor code,
    which for unsigned operand sets is the converter output of interest.
    """
    from . import engine  # deferred to avoid a module cycle

    if trials < 1:
        raise InputDomainError("trials must be at least 1")
    params = params if params is not None else DeviceParams()
    adc = adc if adc is not None else AdcConfig()

    vin_sign, vin_mag = engine.to_sign_mag(vin_vec, "vin")
    w_sign, w_mag = engine.to_sign_mag(w_vec, "w")
    if vin_mag.size != w_mag.size:
        raise InputDomainError("vin and w lengths differ")

    exact = engine.exact_mac_oracle(vin_vec, w_vec)
    codes = np.empty(trials, dtype=np.int64)
    decoded = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        rng = rng_stream(spec.seed, 1, t) if spec.level == "analog" else None
        value, code_pos, _ = engine.eval_dot_product(
            vin_sign, vin_mag, w_sign, w_mag, params, adc, spec, rng
        )
        decoded[t] = value
        codes[t] = code_pos[0]  # first group's positive-capacitor code

    histogram = np.bincount(codes, minlength=adc.levels)
    return MacDistribution(
        histogram=histogram,
        codes=codes,
        decoded=decoded,
        code_mean=float(codes.mean()),
        code_std=float(codes.std()),
        decoded_mean=float(decoded.mean()),
        decoded_std=float(decoded.std()),
        exact=exact,
    )
