"""Command-line front end for the MAC pipeline simulator.

One binary, subcommand style. Every command is deterministic given its
seed and config; files written via --out are byte-stable across reruns
and across IMAC_SIM_THREADS settings. Exit codes: 0 success, 2 usage or
config or input-domain error, 3 analog design-constraint violation,
4 file-format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datasets import load_dataset
from .engine import SignedWord, eval_dot_product, exact_mac_oracle, dot_product, mac_trace
from .errors import ConstraintError, InputDomainError, SimError
from .inference import accuracy, accuracy_band, build_quantized, float_forward
from .netspec import BUILTIN_NETWORKS, load_network, perf_layers, trace_shapes
from .params import AdcConfig, DeviceParams, NoiseSpec, dump_config, load_config
from .perf import AreaTable, PerfParams, compare_network, per_inference_energy, sweep_bio
from .peripherals import adc_code_table, check_constraints, decode_table
from .quantize import QuantScheme
from .tensorfile import load_tensors
from .variation import monte_carlo_mac


def _fmt(x) -> str:
    """Fixed CSV float format: enough digits to round-trip, no noise."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _emit(args, name: str, text: str) -> None:
    """Write one output document to --out/<name>, or stdout without --out."""
    if getattr(args, "out", None):
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _parse_operands(text: str, flag: str) -> list[SignedWord]:
    words = []
    tokens = [t for t in text.split(",") if t.strip() != ""]
    if not tokens:
        raise InputDomainError(f"{flag} is empty")
    for i, tok in enumerate(tokens):
        try:
            value = int(tok)
        except ValueError:
            raise InputDomainError(f"{flag}[{i}] is not an integer: {tok!r}") from None
        try:
            words.append(SignedWord.from_int(value))
        except InputDomainError as exc:
            raise InputDomainError(f"{flag}[{i}]: {exc}") from None
    return words


def _load_params(args) -> tuple[DeviceParams, AdcConfig]:
    if getattr(args, "config", None):
        return load_config(args.config)
    return DeviceParams(), AdcConfig()


def _noise_from_args(args, default_level: str = "none") -> NoiseSpec:
    return NoiseSpec(
        level=getattr(args, "noise", default_level) or default_level,
        sigma_analog_mv=args.sigma_analog,
        sigma_digital_code=args.sigma_code,
        seed=args.seed,
    )


def _add_noise_flags(sub, default: str = "none") -> None:
    sub.add_argument("--noise", choices=("none", "analog", "digital"), default=default)
    sub.add_argument("--sigma-analog", type=float, default=13.17, metavar="MV")
    sub.add_argument("--sigma-code", type=float, default=0.6, metavar="CODES")
    sub.add_argument("--seed", type=int, default=0)


def cmd_mac(args) -> None:
    params, adc = _load_params(args)
    vin = _parse_operands(args.vin, "--vin")
    w = _parse_operands(args.w, "--w")
    if len(vin) != len(w):
        raise InputDomainError(f"--vin has {len(vin)} operands but --w has {len(w)}")

    report = check_constraints(params)
    if not report.ok:
        raise ConstraintError(
            "parameter set violates the accumulator design rules "
            f"(sample floor slack {report.sample_floor_slack_mv:.3f} mV, "
            f"headroom slack {report.headroom_slack_mv:.3f} mV)"
        )

    spec = _noise_from_args(args)
    noise = spec if spec.active else None
    vin_sign = np.array([x.sign for x in vin])
    vin_mag = np.array([x.magnitude for x in vin])
    w_sign = np.array([x.sign for x in w])
    w_mag = np.array([x.magnitude for x in w])
    _, code_pos, code_neg = eval_dot_product(vin_sign, vin_mag, w_sign, w_mag, params, adc, noise)
    decoded = dot_product(vin, w, spec=noise, params=params, adc=adc)
    exact = exact_mac_oracle(vin, w)

    payload = {
        "vin": [x.value for x in vin],
        "w": [x.value for x in w],
        "noise": spec.level,
        "seed": args.seed,
        "decoded": decoded,
        "exact": exact,
        "codes_pos": code_pos,
        "codes_neg": code_neg,
    }
    if args.trace:
        payload["trace"] = [mac_trace(a, b, params, adc) for a, b in zip(vin, w)]

    if args.format == "json":
        _emit(args, "mac.json", _dump_json(payload))
        return
    lines = [
        f"decoded MAC: {decoded}",
        f"exact MAC:   {exact}",
        "group codes (pos, neg): "
        + ", ".join(f"({int(p)}, {int(n)})" for p, n in zip(code_pos, code_neg)),
    ]
    if args.trace:
        for t in payload["trace"]:
            lines.append(
                f"  vin={t['vin']:+d} w={t['w']:+d}: wordline {_fmt(t['wordline_mv'])} mV, "
                f"bitlines [{', '.join(_fmt(v) for v in t['bitlines_mv'])}] mV, "
                f"shared {_fmt(t['charge_share_raw_mv'])} mV, "
                f"product node {_fmt(t['product_node_mv'])} mV, "
                f"step {_fmt(t['delta_v_mv'])} mV, "
                f"codes ({t['code_pos']}, {t['code_neg']}), decoded {t['decoded']}"
            )
    _emit(args, "mac.txt", "\n".join(lines) + "\n")


def cmd_montecarlo(args) -> None:
    params, adc = _load_params(args)
    vin = _parse_operands(args.vin, "--vin")
    w = _parse_operands(args.w, "--w")
    if len(vin) != len(w):
        raise InputDomainError(f"--vin has {len(vin)} operands but --w has {len(w)}")
    spec = _noise_from_args(args, default_level="analog")
    dist = monte_carlo_mac(vin, w, args.trials, spec, params, adc)

    hist_lines = ["code,count"]
    hist_lines += [f"{code},{int(n)}" for code, n in enumerate(dist.histogram)]
    _emit(args, "montecarlo_hist.csv", "\n".join(hist_lines) + "\n")

    summary = {
        "trials": dist.trials,
        "seed": args.seed,
        "noise": spec.level,
        "sigma_analog_mv": spec.sigma_analog_mv,
        "exact": dist.exact,
        "code_mean": dist.code_mean,
        "code_std": dist.code_std,
        "decoded_mean": dist.decoded_mean,
        "decoded_std": dist.decoded_std,
    }
    _emit(args, "montecarlo_summary.json", _dump_json(summary))


def cmd_infer(args) -> None:
    net = load_network(args.net)
    trace_shapes(net)
    try:
        weights = load_tensors(args.weights)
    except OSError as exc:
        raise InputDomainError(f"cannot read weights file {args.weights}: {exc}") from exc
    try:
        data = load_dataset(args.data_kind, args.data, args.split)
    except OSError as exc:
        raise InputDomainError(f"cannot read dataset from {args.data}: {exc}") from exc
    if args.limit > 0:
        data = data.subset(args.limit)

    params, adc = _load_params(args)
    scheme = QuantScheme()
    calib = data.images[: max(1, args.calib)]
    qnet = build_quantized(net, weights, scheme, calib)
    spec = _noise_from_args(args)

    payload = {
        "net": net.name,
        "n_images": len(data),
        "trials": args.trials,
        "noise": spec.level,
        "seed": args.seed,
    }
    if args.with_float:
        scores, _ = float_forward(net, weights, data.images)
        payload["float_accuracy"] = float(np.mean(np.argmax(scores, axis=1) == data.labels))
        payload["quantized_accuracy"] = accuracy(
            qnet, data.images, data.labels, None, 0, "exact", params, adc
        )

    if args.trials == 1:
        acc = accuracy(
            qnet, data.images, data.labels, spec if spec.active else None, 0, "exact", params, adc
        )
        payload.update({"mean": acc, "std": 0.0, "min": acc, "max": acc})
        accs = [acc]
    else:
        band = accuracy_band(qnet, data.images, data.labels, args.trials, spec, params, adc)
        payload.update(
            {"mean": band.mean, "std": band.std, "min": band.min, "max": band.max}
        )
        accs = list(band.accuracies)

    acc_lines = ["trial,accuracy"]
    acc_lines += [f"{t},{_fmt(a)}" for t, a in enumerate(accs)]
    _emit(args, "accuracies.csv", "\n".join(acc_lines) + "\n")
    _emit(args, "band.json", _dump_json(payload))


def _parse_sweep(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise InputDomainError("--sweep-bio expects lo:hi:step")
    try:
        lo, hi, step = (int(p) for p in parts)
    except ValueError:
        raise InputDomainError("--sweep-bio expects integers lo:hi:step") from None
    if lo < 1 or hi < lo or step < 1:
        raise InputDomainError("--sweep-bio needs 1 <= lo <= hi and step >= 1")
    return list(range(lo, hi + 1, step))


def cmd_perf(args) -> None:
    net = load_network(args.net)
    layers = perf_layers(net)
    p = PerfParams(b_io=args.bio, ceil_occupancy=args.ceil_occupancy)
    report = compare_network(layers, p)

    cols = "layer,t_vn_ns,e_vn_pj,t_imac_ns,e_imac_pj,delay_ratio,energy_ratio,edp_ratio"
    rows = [cols]
    for r in report.layers:
        rows.append(
            ",".join(
                [
                    r.name,
                    _fmt(r.t_vn),
                    _fmt(r.e_vn),
                    _fmt(r.t_imac),
                    _fmt(r.e_imac),
                    _fmt(r.delay_ratio),
                    _fmt(r.energy_ratio),
                    _fmt(r.edp_ratio),
                ]
            )
        )
    rows.append(
        ",".join(
            [
                "TOTAL",
                _fmt(report.t_vn),
                _fmt(report.e_vn),
                _fmt(report.t_imac),
                _fmt(report.e_imac),
                _fmt(report.delay_ratio),
                _fmt(report.energy_ratio),
                _fmt(report.edp_ratio),
            ]
        )
    )
    _emit(args, "perf_layers.csv", "\n".join(rows) + "\n")

    summary = {
        "net": net.name,
        "b_io": args.bio,
        "t_vn_ns": report.t_vn,
        "e_vn_pj": report.e_vn,
        "t_imac_ns": report.t_imac,
        "e_imac_pj": report.e_imac,
        "delay_ratio": report.delay_ratio,
        "energy_ratio": report.energy_ratio,
        "edp_ratio": report.edp_ratio,
        "per_inference_nj": per_inference_energy(layers, p),
    }
    _emit(args, "perf_summary.json", _dump_json(summary))

    if args.sweep_bio:
        table = sweep_bio(layers, p, _parse_sweep(args.sweep_bio))
        lines = ["b_io,delay_ratio,energy_ratio,edp_ratio"]
        lines += [
            ",".join(
                [
                    str(row["b_io"]),
                    _fmt(row["delay_ratio"]),
                    _fmt(row["energy_ratio"]),
                    _fmt(row["edp_ratio"]),
                ]
            )
            for row in table
        ]
        _emit(args, "perf_sweep.csv", "\n".join(lines) + "\n")

    if args.area:
        table = AreaTable()
        lines = ["component,area_um2"]
        lines += [f"{name},{_fmt(um2)}" for name, um2 in table.entries]
        lines.append(f"TOTAL,{_fmt(table.total)}")
        lines.append(f"non_storage_share,{_fmt(table.non_storage_share)}")
        lines.append(f"mac_addition_share,{_fmt(table.mac_addition_share)}")
        _emit(args, "area.csv", "\n".join(lines) + "\n")


def cmd_dump_config(args) -> None:
    params, adc = _load_params(args)
    _emit(args, "config.json", dump_config(params, adc) + "\n")


def cmd_adc_table(args) -> None:
    params, adc = _load_params(args)
    estimates = decode_table(adc, params, params.n_acc)
    lines = ["code,v_low_mv,v_high_mv,v_center_mv,sum_products_midpoint"]
    for row in adc_code_table(adc):
        code = int(row["code"])
        lines.append(
            ",".join(
                [
                    str(code),
                    _fmt(row["v_low_mv"]),
                    _fmt(row["v_high_mv"]),
                    _fmt(row["v_center_mv"]),
                    str(int(estimates[code])),
                ]
            )
        )
    _emit(args, "adc_table.csv", "\n".join(lines) + "\n")


def cmd_gen_data(args) -> None:
    from .synth import write_color_files, write_digit_files

    if args.kind == "idx":
        write_digit_files(args.out, args.n_train, args.n_test, args.seed)
    else:
        write_color_files(args.out, args.n_test, args.seed)
    print(f"wrote {args.kind} dataset to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imacsim",
        description="Behavioral simulator of an in-SRAM analog multiply-accumulate pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mac = sub.add_parser("mac", help="evaluate one signed dot product through the pipeline")
    p_mac.add_argument("--vin", required=True, help="comma-separated inputs in [-15, 15]")
    p_mac.add_argument("--w", required=True, help="comma-separated weights in [-15, 15]")
    p_mac.add_argument("--config")
    p_mac.add_argument("--format", choices=("text", "json"), default="text")
    p_mac.add_argument("--trace", action="store_true", help="per-operand pipeline voltages")
    p_mac.add_argument("--out")
    _add_noise_flags(p_mac)
    p_mac.set_defaults(func=cmd_mac)

    p_mc = sub.add_parser("montecarlo", help="repeat one dot product under noise")
    p_mc.add_argument("--vin", required=True)
    p_mc.add_argument("--w", required=True)
    p_mc.add_argument("--trials", type=int, default=1000)
    p_mc.add_argument("--config")
    p_mc.add_argument("--out")
    _add_noise_flags(p_mc, default="analog")
    p_mc.set_defaults(func=cmd_montecarlo)

    p_inf = sub.add_parser("infer", help="quantized-network accuracy, optionally under noise")
    p_inf.add_argument(
        "--net", required=True, help=f"builtin ({', '.join(sorted(BUILTIN_NETWORKS))}) or JSON file"
    )
    p_inf.add_argument("--weights", required=True, help="float weight tensor file")
    p_inf.add_argument("--data", required=True, help="dataset directory")
    p_inf.add_argument("--data-kind", choices=("idx", "cifar10"), default="idx")
    p_inf.add_argument("--split", choices=("train", "test"), default="test")
    p_inf.add_argument("--trials", type=int, default=1)
    p_inf.add_argument("--limit", type=int, default=0, help="use only the first N images")
    p_inf.add_argument("--calib", type=int, default=256, help="calibration images")
    p_inf.add_argument("--with-float", action="store_true", help="also run the float reference")
    p_inf.add_argument("--config")
    p_inf.add_argument("--out")
    _add_noise_flags(p_inf)
    p_inf.set_defaults(func=cmd_infer)

    p_perf = sub.add_parser("perf", help="analytical delay/energy comparison")
    p_perf.add_argument("--net", required=True)
    p_perf.add_argument("--bio", type=int, default=16, help="baseline bus width, bits per fetch")
    p_perf.add_argument("--sweep-bio", metavar="LO:HI:STEP")
    p_perf.add_argument("--area", action="store_true", help="also emit the area table")
    p_perf.add_argument("--ceil-occupancy", action="store_true")
    p_perf.add_argument("--out")
    p_perf.set_defaults(func=cmd_perf)

    p_dump = sub.add_parser("dump-config", help="print the resolved parameter set")
    p_dump.add_argument("--config")
    p_dump.add_argument("--out")
    p_dump.set_defaults(func=cmd_dump_config)

    p_adc = sub.add_parser("adc-table", help="converter bins and decode estimates")
    p_adc.add_argument("--config")
    p_adc.add_argument("--out")
    p_adc.set_defaults(func=cmd_adc_table)

    p_gen = sub.add_parser("gen-data", help="write a synthetic dataset in loader format")
    p_gen.add_argument("--kind", choices=("idx", "cifar10"), default="idx")
    p_gen.add_argument("--out", required=True, help="dataset directory")
    p_gen.add_argument("--n-train", type=int, default=20000)
    p_gen.add_argument("--n-test", type=int, default=10000)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.set_defaults(func=cmd_gen_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        # reading inputs is wrapped per command; reaching here means an
        # output path could not be written
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
