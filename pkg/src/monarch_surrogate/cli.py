"""Command-line interface: verify checks, benchmark costs, train on sine data.

Exit codes: 0 success, 1 a check or run failed, 2 usage or configuration
error.  The seed is taken from --seed, falling back to the MSB_SEED
environment variable, then to 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench, report as report_mod, verification
from .data import SineSpec, build_dataset
from .errors import ConfigurationError, ContractError, DimensionError
from .training import TrainConfig, train_forecaster


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MSB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"MSB_SEED must be an integer, got {env!r}")
    return 0


def _load_config(args) -> dict:
    if not args.config:
        return {}
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"config file {args.config} must hold a JSON object")
    return cfg


def _model_config(overrides: dict) -> bench.ModelConfig:
    allowed = {"d_model", "heads", "n_seq", "layers", "d_ff", "l_out"}
    model = overrides.get("model", {})
    unknown = set(model) - allowed
    if unknown:
        raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
    return bench.ModelConfig(**model)


def _emit(args, rep: dict) -> None:
    if args.out:
        if args.format == "csv":
            report_mod.write_report_csv(args.out, rep)
        else:
            report_mod.write_report(args.out, rep)


def cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    overrides = _load_config(args)
    vcfg = verification.VerifyConfig(select=args.select or None)
    if args.quick:
        vcfg.seeds_oracle = 10
        vcfg.seeds_theorem = 10
        vcfg.seeds_expressiveness = 50
        vcfg.seeds_lti = 10
        vcfg.seeds_block_oracle = 5
        vcfg.gradient_probes = 10
    checks = verification.run_all(vcfg)
    rep = report_mod.new_report({"seed": seed, "quick": args.quick, **overrides})
    rep["checks"] = [c.to_dict() for c in checks]
    failures = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name}  max_abs_diff={c.max_abs_diff:.3e}  "
              f"threshold={c.threshold:.1e}  seeds={c.seeds_run}")
        failures += not c.passed
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    _emit(args, rep)
    return 1 if failures else 0


def cmd_bench(args) -> int:
    seed = _resolve_seed(args)
    overrides = _load_config(args)
    cfg = _model_config(overrides)
    rep = report_mod.new_report({"seed": seed, "model": cfg.__dict__})
    status = 0
    if args.what == "params":
        rep["params"] = {
            "surrogate": bench.count_params(cfg, "surrogate"),
            "dense": bench.count_params(cfg, "dense"),
            "ratio": bench.efficiency_ratios(cfg)["params"],
        }
        print(json.dumps(rep["params"], indent=2))
    elif args.what == "flops":
        meter = bench.check_ledger_matches_meter(cfg, seed=seed)
        rep["flops"] = {
            "surrogate": bench.count_muladds(cfg, "surrogate"),
            "dense": bench.count_muladds(cfg, "dense"),
            "ratio": bench.efficiency_ratios(cfg)["flops"],
            "meter": meter,
        }
        print(json.dumps(rep["flops"], indent=2))
        if not meter["match"]:
            print("FAIL: analytic ledger disagrees with runtime meter", file=sys.stderr)
            status = 1
    else:  # scaling
        rep["scaling"] = {
            "analytic": bench.analytic_scaling(),
            "wallclock": bench.measure_wallclock(seed=seed),
        }
        print(json.dumps(rep["scaling"], indent=2))
    _emit(args, rep)
    return status


def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    overrides = _load_config(args)
    data_cfg = {"samples": 480, "period": 24.0, "amplitude": 1.0,
                "noise_std": 0.0, "l_in": 48, "l_out": 24}
    data_cfg.update(overrides.get("data", {}))
    l_in, l_out = data_cfg.pop("l_in"), data_cfg.pop("l_out")
    series = SineSpec(seed=seed, **data_cfg).generate()
    dataset = build_dataset(series, l_in, l_out)
    tcfg = TrainConfig(seed=seed, variant=args.variant, **overrides.get("train", {}))
    if args.epochs is not None:
        tcfg.epochs = args.epochs
    result = train_forecaster(dataset, tcfg)
    rep = report_mod.new_report(
        {"seed": seed, "data": {**data_cfg, "l_in": l_in, "l_out": l_out},
         "train": tcfg.__dict__}
    )
    rep["training"] = result.to_dict()
    print(f"variant={result.variant} epochs={result.epochs_run} "
          f"best_epoch={result.best_epoch} test_mse={result.test_mse:.6f} "
          f"test_mae={result.test_mae:.6f} wall={result.wall_seconds:.1f}s")
    _emit(args, rep)
    return 1 if result.failed else 0


def cmd_report(args) -> int:
    rep = report_mod.read_report(args.path)
    if args.format == "csv":
        for key, value in report_mod.report_to_rows(rep):
            print(f"{key},{value}")
    else:
        print(json.dumps(rep, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msb", description="Monarch surrogate blocks: verify, benchmark, train."
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (overrides MSB_SEED)")
    common.add_argument("--out", default=None, help="write a run report to this path")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", default=None, help="JSON file with overrides")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run all correctness checks")
    p.add_argument("--select", nargs="*", default=None,
                   help="only run checks whose name contains one of these substrings")
    p.add_argument("--quick", action="store_true", help="reduced seed counts")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="cost accounting and scaling")
    p.add_argument("what", choices=("params", "flops", "scaling"))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", parents=[common], help="train a forecaster")
    p.add_argument("task", choices=("sine",))
    p.add_argument("--variant", choices=("surrogate", "dense"), default="surrogate")
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("report", parents=[common], help="inspect a saved run report")
    p.add_argument("action", choices=("show",))
    p.add_argument("path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ContractError, DimensionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
