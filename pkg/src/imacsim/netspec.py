"""Network topology descriptions shared by inference and the perf model.

A NetworkSpec is a plain layer list: conv / relu / maxpool / flatten /
fc. Convolutions are stride 1; pooling is 2x2 stride 2. Dropout present
in a training recipe is inference-identity and simply has no layer kind
here.

For cost modeling each compute layer reduces to a LayerSpec quadruple
(m, n, k, n_mov): input channels, output channels, kernel size, and the
number of valid kernel positions per axis, n_mov = l - k + 1 for a
kernel sliding over an l x l input. Fully connected layers are the
degenerate case k = n_mov = 1. The cost model always uses the valid
window count even when inference pads; the two concerns are decoupled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError, InputDomainError


@dataclass(frozen=True)
class ConvDef:
    out_channels: int
    kernel: int
    pad: int = 0
    kind: str = "conv"


@dataclass(frozen=True)
class ReluDef:
    kind: str = "relu"


@dataclass(frozen=True)
class MaxPoolDef:
    size: int = 2
    stride: int = 2
    kind: str = "maxpool"


@dataclass(frozen=True)
class FlattenDef:
    kind: str = "flatten"


@dataclass(frozen=True)
class FcDef:
    out_features: int
    kind: str = "fc"


LayerDef = ConvDef | ReluDef | MaxPoolDef | FlattenDef | FcDef


@dataclass(frozen=True)
class LayerSpec:
    """Cost-model view of one compute layer."""

    name: str
    m: int  # input channels (or fan-in for fc)
    n: int  # output channels (or fan-out for fc)
    k: int  # kernel size, 1 for fc
    n_mov: int  # kernel positions per axis, 1 for fc

    def __post_init__(self) -> None:
        for f in ("m", "n", "k", "n_mov"):
            if getattr(self, f) < 1:
                raise InputDomainError(f"LayerSpec.{f} must be positive")

    @property
    def macs(self) -> int:
        return self.m * self.n * self.k * self.k * self.n_mov * self.n_mov

    @property
    def dot_length(self) -> int:
        """Elements of one output's dot product."""
        return self.m * self.k * self.k


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    input_shape: tuple[int, int, int]  # channels, height, width
    layers: tuple[LayerDef, ...]

    def compute_layers(self) -> list[tuple[int, LayerDef]]:
        return [(i, l) for i, l in enumerate(self.layers) if l.kind in ("conv", "fc")]


def lenet5() -> NetworkSpec:
    """Five-layer digit classifier over a 32x32 single-channel input."""
    return NetworkSpec(
        name="lenet5",
        input_shape=(1, 32, 32),
        layers=(
            ConvDef(out_channels=6, kernel=5),
            ReluDef(),
            MaxPoolDef(),
            ConvDef(out_channels=16, kernel=5),
            ReluDef(),
            MaxPoolDef(),
            FlattenDef(),
            FcDef(out_features=120),
            ReluDef(),
            FcDef(out_features=84),
            ReluDef(),
            FcDef(out_features=10),
        ),
    )


def vgg_cifar10() -> NetworkSpec:
    """Seven-conv VGG-style classifier over 3x32x32 inputs.

    Convolutions keep spatial size (3x3, pad 1); three pools take 32
    down to 4, so the flattened feature map is 256 * 4 * 4 = 4096.
    """
    convs = [64, 64, "pool", 128, 128, "pool", 256, 256, 256, "pool"]
    layers: list[LayerDef] = []
    for item in convs:
        if item == "pool":
            layers.append(MaxPoolDef())
        else:
            layers.append(ConvDef(out_channels=int(item), kernel=3, pad=1))
            layers.append(ReluDef())
    layers += [
        FlattenDef(),
        FcDef(out_features=4096),
        ReluDef(),
        FcDef(out_features=4096),
        ReluDef(),
        FcDef(out_features=10),
    ]
    return NetworkSpec(name="vgg-cifar10", input_shape=(3, 32, 32), layers=tuple(layers))


BUILTIN_NETWORKS = {"lenet5": lenet5, "vgg-cifar10": vgg_cifar10}


def trace_shapes(net: NetworkSpec) -> list[tuple[int, int, int]]:
    """Shape after every layer, starting with the input shape."""
    c, h, w = net.input_shape
    shapes = [(c, h, w)]
    flat = False
    for layer in net.layers:
        if layer.kind == "conv":
            if flat:
                raise ConfigError("conv after flatten")
            h = h + 2 * layer.pad - layer.kernel + 1
            w = w + 2 * layer.pad - layer.kernel + 1
            if h < 1 or w < 1:
                raise ConfigError(f"{net.name}: kernel {layer.kernel} too large for {shapes[-1]}")
            c = layer.out_channels
        elif layer.kind == "maxpool":
            if flat:
                raise ConfigError("pool after flatten")
            if h % layer.size or w % layer.size:
                raise ConfigError(f"{net.name}: pool does not tile {h}x{w}")
            h //= layer.stride
            w //= layer.stride
        elif layer.kind == "flatten":
            c, h, w = c * h * w, 1, 1
            flat = True
        elif layer.kind == "fc":
            if not flat:
                raise ConfigError("fc before flatten")
            c = layer.out_features
        shapes.append((c, h, w))
    return shapes


def perf_layers(net: NetworkSpec) -> list[LayerSpec]:
    """LayerSpec list for the cost model, one entry per compute layer."""
    shapes = trace_shapes(net)
    out: list[LayerSpec] = []
    conv_i = fc_i = 0
    for idx, layer in enumerate(net.layers):
        c_in, h_in, _ = shapes[idx]
        if layer.kind == "conv":
            conv_i += 1
            out.append(
                LayerSpec(
                    name=f"conv{conv_i}",
                    m=c_in,
                    n=layer.out_channels,
                    k=layer.kernel,
                    n_mov=h_in - layer.kernel + 1,
                )
            )
        elif layer.kind == "fc":
            fc_i += 1
            out.append(
                LayerSpec(name=f"fc{fc_i}", m=c_in, n=layer.out_features, k=1, n_mov=1)
            )
    return out


_LAYER_PARSERS = {
    "conv": (ConvDef, {"out_channels": int, "kernel": int, "pad": int}),
    "relu": (ReluDef, {}),
    "maxpool": (MaxPoolDef, {"size": int, "stride": int}),
    "flatten": (FlattenDef, {}),
    "fc": (FcDef, {"out_features": int}),
}


def load_network(path_or_name: str) -> NetworkSpec:
    """Resolve a builtin name or parse a JSON topology file (strict keys)."""
    if path_or_name in BUILTIN_NETWORKS:
        return BUILTIN_NETWORKS[path_or_name]()
    try:
        with open(path_or_name, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(
            f"{path_or_name!r} is neither a builtin network "
            f"({', '.join(sorted(BUILTIN_NETWORKS))}) nor a readable file: {exc}"
        ) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path_or_name}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("network file root must be a JSON object")
    unknown = sorted(set(raw) - {"name", "input", "layers"})
    if unknown:
        raise ConfigError(f"unknown network key(s): {', '.join(unknown)}")
    try:
        c, h, w = (int(v) for v in raw["input"])
        entries = raw["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"network file needs 'input': [c, h, w] and 'layers': {exc}") from exc
    layers: list[LayerDef] = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError(f"layer {i} must be an object with a 'kind'")
        kind = entry["kind"]
        if kind not in _LAYER_PARSERS:
            raise ConfigError(f"layer {i}: unknown kind {kind!r}")
        cls, fields = _LAYER_PARSERS[kind]
        unknown = sorted(set(entry) - set(fields) - {"kind"})
        if unknown:
            raise ConfigError(f"layer {i} ({kind}): unknown key(s) {', '.join(unknown)}")
        kwargs = {k: fields[k](v) for k, v in entry.items() if k != "kind"}
        layers.append(cls(**kwargs))
    net = NetworkSpec(
        name=str(raw.get("name", "custom")), input_shape=(c, h, w), layers=tuple(layers)
    )
    trace_shapes(net)  # validates composability
    return net
