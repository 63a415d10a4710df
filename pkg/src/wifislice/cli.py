"""Command-line entry point: ``wifislice {train,eval,sweep}``.

Every command is a function of the config file, the flags and the seed, so
reruns reproduce the output files byte for byte. Wall-clock timings go to a
separate ``timing.csv`` that is excluded from that guarantee.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import policy as mlp
from .domain import ConfigError, NetworkConfig, QosSpec, validate_config
from .execution import run_baseline, run_fixed_lambda, run_online
from .report import (aggregate_curves, config_hash, parse_grid, sweep_table,
                     violation_rates, write_curves, write_summary, write_table)
from .training import (TrainConfig, sample_realizations, split_seeds,
                       train_state_augmented, train_vanilla_pd)

EXIT_OK, EXIT_CONFIG, EXIT_MISSING = 0, 2, 3

METHODS = ("sapd", "pd", "uniform", "proportional", "tw")
LEARNED = ("sapd", "pd")
BASELINE_NAMES = {"uniform": "uniform", "proportional": "proportional",
                  "tw": "traffic_weighted"}

log = logging.getLogger("wifislice")


class MissingArtifact(RuntimeError):
    pass


def load_config(args) -> tuple[NetworkConfig, TrainConfig]:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    train_doc = doc.pop("train", {})
    try:
        net = NetworkConfig.from_dict(doc)
        train = TrainConfig.from_dict(train_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.literal_latency:
        overrides["latency_mode"] = "literal"
    if args.log_base is not None:
        overrides["log_base"] = 2.0 if args.log_base == "2" else float(np.e)
    net = NetworkConfig.from_dict({**net.to_dict(), **overrides})
    errors = validate_config(net)
    if errors:
        raise ConfigError("; ".join(errors))
    train.seed = net.rng_seed
    if getattr(args, "epochs", None) is not None:
        train.num_epochs = args.epochs
    if args.threads is not None:
        train.threads = args.threads
    return net, train


def _datasets(net: NetworkConfig, num_train: int, num_val: int, num_test: int):
    rngs = split_seeds(net.rng_seed)
    sizes = {"train": num_train, "val": num_val, "test": num_test}
    return tuple(sample_realizations(n, rngs[k], net) if n > 0 else []
                 for k, n in sizes.items())


def cmd_train(args) -> int:
    net, tc = load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, val, _ = _datasets(net, args.num_train, args.num_val, 0)
    if args.algo == "sapd":
        result = train_state_augmented(train, val, tc)
        extra = {"lambda_max": result.lambda_max.tolist()}
    else:
        result = train_vanilla_pd(train, tc)
        extra = {"lambda": result.final_lambda.tolist()}
    result.params.save(out / "checkpoint.json", algo=args.algo,
                       config_hash=config_hash(net, {"train": vars(tc)}),
                       network=net.to_dict(), **extra)
    fields = list(result.log[0]) if result.log else ["epoch"]
    with open(out / "epochs.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fields)
        writer.writeheader()
        for row in result.log:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    with open(out / "timing.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "wall_time_s"])
        writer.writerows(enumerate(result.timing))
    print(f"wrote {out / 'checkpoint.json'}")
    return EXIT_OK


def _load_checkpoint(path):
    if path is None or not Path(path).is_file():
        raise MissingArtifact(f"checkpoint not found: {path}")
    return mlp.PolicyParams.load(path)


def make_runner(method: str, checkpoint=None):
    """``fn(realization, qos) -> Trajectory`` for one method."""
    if method in BASELINE_NAMES:
        kind = BASELINE_NAMES[method]
        return lambda r, qos: run_baseline(kind, r, qos)
    params, meta = _load_checkpoint(checkpoint)
    if method == "sapd":
        return lambda r, qos: run_online(params, r, qos=qos)
    lam = np.asarray(meta.get("lambda", [0.0, 0.0]), dtype=float)
    return lambda r, qos: run_fixed_lambda(params, r, lam, qos)


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ConfigError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return methods


def _parse_checkpoints(items) -> dict[str, str]:
    found = {}
    for item in items or []:
        if "=" in item:
            method, path = item.split("=", 1)
            found[method] = path
        else:
            found["*"] = item
    return found


def _checkpoint_for(method, checkpoints):
    return checkpoints.get(method, checkpoints.get("*"))


def cmd_eval(args) -> int:
    net, _ = load_config(args)
    methods = _parse_methods(args.method)
    checkpoints = _parse_checkpoints(args.checkpoint)
    runners = {m: make_runner(m, _checkpoint_for(m, checkpoints)) for m in methods}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, _, test = _datasets(net, 0, 0, args.num_test)
    qos = net.qos
    rows, curves = [], {}
    with open(out / "trajectories.jsonl", "w") as fh:
        for method, run in runners.items():
            trajs = [run(r, qos) for r in test]
            for i, tr in enumerate(trajs):
                for rec in tr.records():
                    fh.write(json.dumps({"method": method, "realization": i, **rec}) + "\n")
            rows.append({"method": method, "r_min": qos.r_min, "ell_max": qos.ell_max,
                         **violation_rates(trajs, qos)})
            if len(trajs) >= 2:
                curves[method] = aggregate_curves(trajs)
    write_table(rows, out / "table.csv")
    write_curves(curves, out / "curves.csv")
    write_summary(out / "summary.json", config_hash=config_hash(net),
                  methods=methods, num_test=args.num_test, seed=net.rng_seed,
                  rates={r["method"]: {k: r[k] for k in ("h_inst", "h_erg", "l_inst", "l_erg")}
                         for r in rows})
    for row in rows:
        print(f"{row['method']:>14}: H inst {row['h_inst']:6.2f}%  H erg {row['h_erg']:6.2f}%  "
              f"L inst {row['l_inst']:6.2f}%  L erg {row['l_erg']:6.2f}%")
    return EXIT_OK


def cmd_sweep(args) -> int:
    net, _ = load_config(args)
    try:
        grid = parse_grid(args.grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    methods = _parse_methods(args.method)
    checkpoints = _parse_checkpoints(args.checkpoint)
    runners = {m: make_runner(m, _checkpoint_for(m, checkpoints)) for m in methods}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, _, test = _datasets(net, 0, 0, args.num_test)
    rows = sweep_table(runners, grid, test, qos_dependent=("sapd",))
    write_table(rows, out / "table.csv")
    print(f"wrote {out / 'table.csv'} ({len(rows)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="network config JSON (optional 'train' section)")
    common.add_argument("--seed", type=int, help="root seed (overrides config rng_seed)")
    common.add_argument("--out", default="runs/out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads for rollouts")
    common.add_argument("--literal-latency", action="store_true",
                        help="use the literal latency formula")
    common.add_argument("--log-base", choices=("2", "e"), help="log base of the rate formula")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wifislice",
                                     description="Wi-Fi network slicing lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train a slicing policy")
    p.add_argument("--algo", choices=("sapd", "pd"), default="sapd")
    p.add_argument("--epochs", type=int)
    p.add_argument("--num-train", type=int, default=32)
    p.add_argument("--num-val", type=int, default=8)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate methods on test realizations")
    p.add_argument("--method", default="uniform",
                   help="comma list of " + ", ".join(METHODS))
    p.add_argument("--num-test", type=int, default=16)
    p.add_argument("--checkpoint", action="append",
                   help="checkpoint path, or METHOD=PATH (repeatable)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="violation table over QoS targets")
    p.add_argument("--method", default="sapd,pd,uniform,proportional,tw")
    p.add_argument("--grid", default="0.7:5,0.9:10,0.9:20,1.0:10")
    p.add_argument("--num-test", type=int, default=16)
    p.add_argument("--checkpoint", action="append",
                   help="checkpoint path, or METHOD=PATH (repeatable)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifact as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
