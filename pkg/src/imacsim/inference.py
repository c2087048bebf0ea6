"""Quantized network inference on top of the MAC pipeline.

The default path computes every dot product exactly in integers (the
oracle the hardware is supposed to approximate) and models the analog
array's imperfection as a frozen additive error on each conv/fc output
map. The error tensor for a layer is drawn once per weight placement
(per trial), stays constant across the whole test set, and scales with
the square root of the number of accumulate-convert groups a single
output needs. Pooling and activations are digital and never receive
error.

mac_path="engine" instead routes every dot product through the grouped
analog pipeline (staggered discharge, dual-capacitor accumulation, SAR
conversion, decode), which is slower but lets tests compare the two
paths directly.

Integer matmuls run in float32: every partial sum is an integer below
2^24 (at most 4096 * 225 for the largest layer here), so float32
accumulation is exact and considerably faster than int64.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputDomainError
from .netspec import NetworkSpec
from .params import AdcConfig, DeviceParams, NoiseSpec
from .quantize import QuantScheme, quantize_linear
from .variation import rng_stream, sample_error_map
from .engine import eval_mac_groups

_CHUNK = 64  # images per forward chunk, bounds im2col memory
_ENGINE_CHUNK = 2048  # patches per engine-path evaluation


def thread_budget() -> int:
    """Worker cap from IMAC_SIM_THREADS; 0 or unset means automatic."""
    raw = os.environ.get("IMAC_SIM_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"IMAC_SIM_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError("IMAC_SIM_THREADS cannot be negative")
    if n == 0:
        return min(4, os.cpu_count() or 1)
    return n


def im2col(x: np.ndarray, kernel: int, pad: int) -> np.ndarray:
    """(n, c, h, w) -> (n, positions, c * kernel * kernel), stride 1."""
    n, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        h, w = h + 2 * pad, w + 2 * pad
    ho, wo = h - kernel + 1, w - kernel + 1
    s = x.strides
    windows = np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, ho, wo, kernel, kernel),
        strides=(s[0], s[1], s[2], s[3], s[2], s[3]),
        writeable=False,
    )
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n, ho * wo, c * kernel * kernel)


def conv2d_int(x_mag: np.ndarray, w_value: np.ndarray, kernel: int, pad: int) -> np.ndarray:
    """Integer convolution of unsigned activations with signed weights.

    x_mag: (n, c, h, w) ints >= 0. w_value: (out_c, c * k * k) signed
    ints. Returns (n, out_c, ho, wo) int32, exact.
    """
    n, _, h, w = x_mag.shape
    ho = h + 2 * pad - kernel + 1
    cols = im2col(x_mag.astype(np.float32), kernel, pad)
    out = cols @ w_value.astype(np.float32).T  # exact: integer sums < 2^24
    return out.reshape(n, ho, ho, -1).transpose(0, 3, 1, 2).astype(np.int32)


def fc_int(x_mag: np.ndarray, w_value: np.ndarray) -> np.ndarray:
    """(n, d) x (out, d) -> (n, out) int32, exact via float32."""
    out = x_mag.astype(np.float32) @ w_value.astype(np.float32).T
    return out.astype(np.int32)


def maxpool2d(x: np.ndarray, size: int = 2, stride: int = 2) -> np.ndarray:
    n, c, h, w = x.shape
    if h % size or w % size:
        raise InputDomainError(f"pool {size} does not tile {h}x{w}")
    return x.reshape(n, c, h // size, size, w // size, size).max(axis=(3, 5))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


@dataclass
class _QLayer:
    kind: str  # conv | fc
    name: str
    index: int  # position among compute layers, keys the error stream
    w_sign: np.ndarray
    w_mag: np.ndarray
    w_value: np.ndarray  # sign * mag, shape (out, d)
    bias_q: np.ndarray  # int64, quantized at in_scale * w_scale
    w_scale: float
    in_scale: float
    out_scale: float | None  # None for the last layer (raw scores)
    kernel: int
    pad: int
    relu_after: bool
    pool_after: bool
    out_map_shape: tuple[int, ...]  # per-image output map, error map shape
    dot_length: int


@dataclass
class QuantizedNetwork:
    spec: NetworkSpec
    scheme: QuantScheme
    input_scale: float
    qlayers: list[_QLayer]

    def n_groups(self, layer: _QLayer, r: int) -> int:
        return math.ceil(layer.dot_length / r)


def float_forward(spec: NetworkSpec, weights: dict[str, np.ndarray], images: np.ndarray):
    """Reference float pass; returns (scores, per-layer post-relu amax)."""
    def tensor(key: str) -> np.ndarray:
        try:
            return weights[key].astype(np.float64)
        except KeyError:
            raise InputDomainError(f"weights missing tensor {key!r}") from None

    x = images.astype(np.float64)
    amax: dict[str, float] = {}
    conv_i = fc_i = 0
    current = None
    for layer in spec.layers:
        if layer.kind == "conv":
            conv_i += 1
            current = f"conv{conv_i}"
            w = tensor(f"{current}.weight")
            b = tensor(f"{current}.bias")
            cols = im2col(x, layer.kernel, layer.pad)
            n, p, _ = cols.shape
            ho = int(round(math.sqrt(p)))
            out = cols @ w.reshape(w.shape[0], -1).T + b
            x = out.reshape(n, ho, ho, -1).transpose(0, 3, 1, 2)
        elif layer.kind == "fc":
            fc_i += 1
            current = f"fc{fc_i}"
            w = tensor(f"{current}.weight")
            b = tensor(f"{current}.bias")
            x = x @ w.T + b
        elif layer.kind == "relu":
            x = relu(x)
            amax[current] = max(amax.get(current, 0.0), float(x.max(initial=0.0)))
        elif layer.kind == "maxpool":
            x = maxpool2d(x, layer.size, layer.stride)
        elif layer.kind == "flatten":
            x = x.reshape(x.shape[0], -1)
    return x, amax


def build_quantized(
    spec: NetworkSpec,
    weights: dict[str, np.ndarray],
    scheme: QuantScheme,
    calib_images: np.ndarray,
) -> QuantizedNetwork:
    """Post-training quantization: weights per layer, activations by amax.

    Activation scales come from one float calibration pass; the input
    scale is fixed at 1 / activation_mag_max because loader output is
    already normalized to [0, 1].
    """
    from .netspec import trace_shapes

    _, amax = float_forward(spec, weights, calib_images)
    shapes = trace_shapes(spec)
    a_max = scheme.activation_mag_max
    input_scale = 1.0 / a_max

    qlayers: list[_QLayer] = []
    in_scale = input_scale
    conv_i = fc_i = 0
    compute_idx = 0
    layer_list = list(spec.layers)
    for idx, layer in enumerate(layer_list):
        if layer.kind not in ("conv", "fc"):
            continue
        if layer.kind == "conv":
            conv_i += 1
            name = f"conv{conv_i}"
            kernel, pad = layer.kernel, layer.pad
        else:
            fc_i += 1
            name = f"fc{fc_i}"
            kernel, pad = 1, 0
        try:
            w = weights[f"{name}.weight"]
            b = weights[f"{name}.bias"]
        except KeyError as exc:
            raise InputDomainError(f"weights missing tensor {exc.args[0]!r}") from exc
        w_sign, w_mag, w_scale = quantize_linear(w, scheme.weight_bits)
        w_value = (w_sign.astype(np.int32) * w_mag.astype(np.int32)).reshape(w.shape[0], -1)
        bias_q = np.rint(b.astype(np.float64) / (in_scale * w_scale)).astype(np.int64)

        relu_after = idx + 1 < len(layer_list) and layer_list[idx + 1].kind == "relu"
        pool_after = idx + 2 < len(layer_list) and layer_list[idx + 2].kind == "maxpool"
        is_last = not any(l.kind in ("conv", "fc") for l in layer_list[idx + 1 :])
        if is_last:
            out_scale = None
        else:
            peak = amax.get(name, 0.0)
            out_scale = (peak / a_max) if peak > 0 else 1.0

        c_out, h_out, w_out = shapes[idx + 1]
        out_map_shape = (c_out,) if layer.kind == "fc" else (c_out, h_out, w_out)
        qlayers.append(
            _QLayer(
                kind=layer.kind,
                name=name,
                index=compute_idx,
                w_sign=w_sign.reshape(w.shape[0], -1),
                w_mag=w_mag.reshape(w.shape[0], -1),
                w_value=w_value,
                bias_q=bias_q,
                w_scale=w_scale,
                in_scale=in_scale,
                out_scale=out_scale,
                kernel=kernel,
                pad=pad,
                relu_after=relu_after,
                pool_after=pool_after,
                out_map_shape=out_map_shape,
                dot_length=int(w_value.shape[1]),
            )
        )
        compute_idx += 1
        if out_scale is not None:
            in_scale = out_scale
    return QuantizedNetwork(spec=spec, scheme=scheme, input_scale=input_scale, qlayers=qlayers)


def _engine_maps(
    cols: np.ndarray,
    layer: _QLayer,
    params: DeviceParams,
    adc: AdcConfig,
    noise: NoiseSpec | None,
    trial: int,
) -> np.ndarray:
    """Dot products of im2col patches against all outputs via the engine."""
    r = params.n_acc
    d = layer.dot_length
    n_groups = math.ceil(d / r)
    pad = n_groups * r - d

    def grouped(arr, fill):
        out = np.concatenate(
            [arr, np.full(arr.shape[:-1] + (pad,), fill, dtype=arr.dtype)], axis=-1
        )
        return out.reshape(out.shape[:-1] + (n_groups, r))

    w_mag = grouped(layer.w_mag.astype(np.int64), 0)[None, :]  # (1, out, g, r)
    w_sign = grouped(layer.w_sign.astype(np.int64), 1)[None, :]
    rng = None
    spec = None
    if noise is not None and noise.level == "analog":
        spec = noise
        rng = rng_stream(noise.seed, 2, trial, layer.index)
    pieces = []
    for lo in range(0, cols.shape[0], _ENGINE_CHUNK):
        a_mag = grouped(cols[lo : lo + _ENGINE_CHUNK].astype(np.int64), 0)[:, None]
        a_sign = np.ones_like(a_mag)  # requantized activations are unsigned
        decoded, _, _ = eval_mac_groups(a_sign, a_mag, w_sign, w_mag, params, adc, spec, rng)
        pieces.append(decoded.sum(axis=-1))
    return np.concatenate(pieces)  # (p, out)


def forward(
    qnet: QuantizedNetwork,
    images: np.ndarray,
    noise: NoiseSpec | None = None,
    trial: int = 0,
    mac_path: str = "exact",
    params: DeviceParams | None = None,
    adc: AdcConfig | None = None,
    collect_maps: bool = False,
):
    """Run the quantized network; returns (scores, raw MAC maps or None).

    Digital noise adds each layer's frozen error map to the integer MAC
    output before requantization. Analog noise is only meaningful on the
    engine path, which resamples voltages per evaluation.
    """
    if mac_path not in ("exact", "engine"):
        raise InputDomainError("mac_path must be 'exact' or 'engine'")
    if noise is not None and noise.level == "analog" and mac_path != "engine":
        raise InputDomainError("analog noise requires mac_path='engine'")
    params = params if params is not None else DeviceParams()
    adc = adc if adc is not None else AdcConfig()

    a_max = qnet.scheme.activation_mag_max
    x = np.clip(np.rint(images.astype(np.float64) / qnet.input_scale), 0, a_max)
    maps: list[np.ndarray] = []

    error_maps: dict[int, np.ndarray] = {}
    if noise is not None and noise.level == "digital":
        for ql in qnet.qlayers:
            n_groups = math.ceil(ql.dot_length / params.n_acc)
            em = sample_error_map(
                ql.out_map_shape, n_groups, noise, trial=trial, layer=ql.index
            )
            error_maps[ql.index] = em.values

    li = 0
    layer_list = list(qnet.spec.layers)
    for idx, layer in enumerate(layer_list):
        if layer.kind in ("conv", "fc"):
            ql = qnet.qlayers[li]
            if layer.kind == "conv":
                if mac_path == "engine":
                    cols_all = im2col(x, ql.kernel, ql.pad)
                    n, p, _ = cols_all.shape
                    ho = int(round(math.sqrt(p)))
                    flat = cols_all.reshape(n * p, -1)
                    mac = _engine_maps(flat, ql, params, adc, noise, trial)
                    mac = mac.reshape(n, ho, ho, -1).transpose(0, 3, 1, 2)
                else:
                    mac = conv2d_int(x, ql.w_value, ql.kernel, ql.pad)
                mac = mac.astype(np.int64) + ql.bias_q[None, :, None, None]
            else:
                if mac_path == "engine":
                    mac = _engine_maps(x.astype(np.int64), ql, params, adc, noise, trial)
                else:
                    mac = fc_int(x, ql.w_value)
                mac = mac.astype(np.int64) + ql.bias_q[None, :]
            if collect_maps:
                maps.append(mac.copy())
            out = mac.astype(np.float64)
            if ql.index in error_maps:
                out = out + error_maps[ql.index][None]
            out = out * (ql.in_scale * ql.w_scale)
            if ql.out_scale is None:
                x = out  # final scores stay float
            else:
                if ql.relu_after:
                    out = relu(out)
                x = np.clip(np.rint(out / ql.out_scale), 0, a_max)
            li += 1
        elif layer.kind == "maxpool":
            x = maxpool2d(x, layer.size, layer.stride)
        elif layer.kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        # relu handled with its compute layer; standalone relu on final
        # scores would be a topology mistake caught by trace_shapes
    return x, (maps if collect_maps else None)


def infer(
    qnet: QuantizedNetwork,
    images: np.ndarray,
    noise: NoiseSpec | None = None,
    trial: int = 0,
    mac_path: str = "exact",
    params: DeviceParams | None = None,
    adc: AdcConfig | None = None,
) -> np.ndarray:
    """Predicted labels for a batch, chunked to bound im2col memory."""
    preds = []
    for lo in range(0, images.shape[0], _CHUNK):
        scores, _ = forward(
            qnet, images[lo : lo + _CHUNK], noise, trial, mac_path, params, adc
        )
        preds.append(np.argmax(scores, axis=1))
    return np.concatenate(preds)


def accuracy(
    qnet: QuantizedNetwork,
    images: np.ndarray,
    labels: np.ndarray,
    noise: NoiseSpec | None = None,
    trial: int = 0,
    mac_path: str = "exact",
    params: DeviceParams | None = None,
    adc: AdcConfig | None = None,
) -> float:
    preds = infer(qnet, images, noise, trial, mac_path, params, adc)
    return float(np.mean(preds == labels))


@dataclass(frozen=True)
class BandReport:
    """Accuracy distribution over repeated noisy weight placements."""

    accuracies: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    @property
    def min(self) -> float:
        return float(np.min(self.accuracies))

    @property
    def max(self) -> float:
        return float(np.max(self.accuracies))


def accuracy_band(
    qnet: QuantizedNetwork,
    images: np.ndarray,
    labels: np.ndarray,
    trials: int,
    noise: NoiseSpec,
    params: DeviceParams | None = None,
    adc: AdcConfig | None = None,
) -> BandReport:
    """Re-place weights (fresh error maps) per trial and measure accuracy.

    Trial t draws its maps from stream (seed, t, layer), so the band is
    identical for any worker count; workers only change wall time.
    """
    if trials < 1:
        raise InputDomainError("trials must be at least 1")
    results = [0.0] * trials

    def run(t: int) -> None:
        results[t] = accuracy(qnet, images, labels, noise, t, "exact", params, adc)

    workers = min(thread_budget(), trials)
    if workers <= 1:
        for t in range(trials):
            run(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(trials)))
    return BandReport(accuracies=tuple(results))
