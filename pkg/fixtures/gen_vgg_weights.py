"""Write seeded random float weights for the VGG-style smoke network.

The color-texture smoke test only checks pipeline invariants, never
accuracy, so untrained weights are sufficient and the ~150 MB tensor
file is generated on demand instead of being committed:

    python3 fixtures/gen_vgg_weights.py --out /tmp/vgg_weights.nt

Shapes follow the builtin "vgg-cifar10" topology. Kaiming-style fan-in
scaling keeps activations in a sane range through the conv stack.
"""

from __future__ import annotations

import argparse

import numpy as np

from imacsim.netspec import trace_shapes, vgg_cifar10
from imacsim.tensorfile import save_tensors
from imacsim.variation import rng_stream


def vgg_random_weights(seed: int = 0) -> dict[str, np.ndarray]:
    net = vgg_cifar10()
    shapes = trace_shapes(net)
    tensors: dict[str, np.ndarray] = {}
    conv_i = fc_i = 0
    for idx, layer in enumerate(net.layers):
        c_in = shapes[idx][0]
        if layer.kind == "conv":
            conv_i += 1
            name = f"conv{conv_i}"
            shape = (layer.out_channels, c_in, layer.kernel, layer.kernel)
            fan_in = c_in * layer.kernel * layer.kernel
        elif layer.kind == "fc":
            fc_i += 1
            name = f"fc{fc_i}"
            fan_in = shapes[idx][0] * shapes[idx][1] * shapes[idx][2]
            shape = (layer.out_features, fan_in)
        else:
            continue
        rng = rng_stream(seed, 0x766, conv_i if layer.kind == "conv" else 100 + fc_i)
        tensors[f"{name}.weight"] = rng.normal(
            0.0, np.sqrt(2.0 / fan_in), size=shape
        ).astype(np.float32)
        tensors[f"{name}.bias"] = rng.normal(0.0, 0.01, size=shape[0]).astype(np.float32)
    return tensors


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    tensors = vgg_random_weights(args.seed)
    save_tensors(args.out, tensors)
    total = sum(t.size for t in tensors.values())
    print(f"saved {len(tensors)} tensors ({total} parameters) to {args.out}")


if __name__ == "__main__":
    main()
