"""Command-line front end.

Commands: simulate, gof, order-scan, spec-test, experiment, ingest.
All outputs are byte-identical across reruns with the same seed; wall
times go to the console, never into files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ArhgofError
from .experiments import (ExperimentConfig, SCENARIOS, build_arh_spec,
                          build_sde_model, run_experiment, scenario_kind,
                          write_experiment_outputs)
from .arhsim import simulate_arh
from .grids import Grid, read_curves_csv, write_curves_csv
from .gof import arh_gof_test, arh_order_scan
from .sde import euler_maruyama, read_path_csv, split_path, write_path_csv
from .spectest import _two_stage_core, two_stage_test
from .ticks import ingest_ticks


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (tok.strip() for tok in line.split("=", 1))
            values[key] = value
    return values

_CONFIG_TYPES = {
    "scenario": str, "n": int, "M": int, "B": int, "alpha": float,
    "ev_threshold": float, "seed": int, "z": int, "h": float, "delta": float,
    "m_grid": int, "kappa": float, "sigma2": float, "workers": int,
    "output_path": str,
}

_FLAG_TO_CONFIG = {"ev": "ev_threshold", "out": "output_path"}


def _experiment_config(args):
    values = {}
    if args.config:
        for key, raw in _read_config_file(args.config).items():
            if key not in _CONFIG_TYPES:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = _CONFIG_TYPES[key](raw)
    for flag in ("scenario", "n", "M", "B", "alpha", "ev", "seed", "z", "h",
                 "delta", "workers", "out"):
        arg = getattr(args, flag if flag != "M" else "M")
        if arg is not None:
            values[_FLAG_TO_CONFIG.get(flag, flag)] = arg
    if "scenario" not in values:
        raise ValueError("experiment needs a scenario (flag or config file)")
    return ExperimentConfig(**values)


def _cmd_simulate(args):
    kind = scenario_kind(args.scenario)
    if kind == "arh":
        spec = build_arh_spec(args.scenario, Grid.uniform(args.h, args.m_grid))
        sample = simulate_arh(spec, args.n, args.seed)
        write_curves_csv(sample, args.out)
        print(f"wrote {sample.n} curves ({args.scenario}) to {args.out}")
    else:
        model = build_sde_model(args.scenario, args.kappa, args.sigma2)
        path = euler_maruyama(model, args.n * args.h, args.delta, args.seed)
        write_path_csv(path, args.out)
        print(f"wrote path of {path.times.size} points ({args.scenario}) "
              f"to {args.out}")
    return 0


def _cmd_gof(args):
    sample = read_curves_csv(args.input)
    result = arh_gof_test(sample, args.z, B=args.B,
                          ev_threshold=args.ev, seed=args.seed)
    verdict = "rejected" if result.p_value < args.alpha else "not rejected"
    print(f"PCvM statistic = {result.statistic:.6g}")
    print(f"p-value        = {result.p_value:.4f}  "
          f"(H0: ARH({args.z}) {verdict} at alpha={args.alpha})")
    if result.small_b_warning:
        print("warning: B < 100 bootstrap replicates", file=sys.stderr)
    if args.out:
        _write_json(result.to_dict(), args.out)
    return 0


def _cmd_order_scan(args):
    sample = read_curves_csv(args.input)
    result = arh_order_scan(sample, args.zmax, B=args.B, ev_threshold=args.ev,
                            alpha=args.alpha, seed=args.seed)
    for z, p in enumerate(result.p_values):
        print(f"z={z}: p-value = {p:.4f}")
    if result.order is None:
        print(f"no order <= {args.zmax} accepted at alpha={args.alpha}")
    else:
        print(f"selected order: {result.order}")
    if args.out:
        _write_json(result.to_dict(), args.out)
    return 0


def _cmd_spec_test(args):
    with open(args.input, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("# model="):
        path = read_path_csv(args.input)
        result = two_stage_test(path, args.h, B=args.B, alpha=args.alpha,
                                ev_threshold=args.ev, seed=args.seed)
    else:
        ingest = ingest_ticks(args.input, args.day_length)
        if ingest.n_dropped:
            print(f"dropped {ingest.n_dropped} incomplete day(s): "
                  f"{list(ingest.dropped_days)}", file=sys.stderr)
        result = _two_stage_core(ingest.sample, ingest.values, ingest.delta,
                                 ingest.sample.grid.h, args.B, args.alpha,
                                 args.ev, args.seed)
    p2 = "—" if result.p2 is None else f"{result.p2:.4f}"
    print(f"Stage 1: ARH(1) GoF test  p-value = {result.p1:.4f}")
    print(f"Stage 2: F-test           p-value = {p2}")
    print(f"Decision: {result.decision} (alpha = {result.alpha}, "
          f"kappa_hat = {result.kappa_hat:.4f}, "
          f"sigma_hat = {result.sigma_hat:.4f})")
    if args.out:
        _write_json(result.to_dict(), args.out)
    return 0


def _cmd_experiment(args):
    config = _experiment_config(args)
    result = run_experiment(config, progress=args.progress)
    print(f"scenario {config.scenario}: rejection rate = {result.rate:.4f} "
          f"[{result.ci_low:.4f}, {result.ci_high:.4f}] "
          f"(M={config.M}, B={config.B}, alpha={config.alpha})")
    print(f"wall time: {result.elapsed_seconds:.1f}s")
    if config.output_path:
        paths = write_experiment_outputs(result, config.output_path)
        print("wrote " + ", ".join(paths))
    return 0


def _cmd_ingest(args):
    result = ingest_ticks(args.input, args.day_length)
    print(f"ingested {result.sample.n} complete day(s); "
          f"dropped {result.n_dropped}"
          + (f": {list(result.dropped_days)}" if result.n_dropped else ""))
    print(f"global mean removed: {result.mean_value:.6g}")
    if args.out:
        write_curves_csv(result.sample, args.out)
        print(f"wrote curves to {args.out}")
    return 0


def _add_common(parser, *flags):
    if "B" in flags:
        parser.add_argument("--B", type=int, default=500,
                            help="bootstrap replicates (default 500)")
    if "alpha" in flags:
        parser.add_argument("--alpha", type=float, default=0.05)
    if "ev" in flags:
        parser.add_argument("--ev", type=float, default=0.995,
                            help="explained-variance threshold")
    if "seed" in flags:
        parser.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arhgof",
        description="Goodness-of-fit tests for functional time series and "
                    "Ornstein-Uhlenbeck specification testing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a scenario to CSV")
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--m-grid", dest="m_grid", type=int, default=101)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--sigma2", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gof", help="ARH(z) goodness-of-fit test on curves CSV")
    p.add_argument("input")
    p.add_argument("--z", type=int, default=1, help="null order under test")
    _add_common(p, "B", "alpha", "ev", "seed")
    p.add_argument("--out", help="write the result JSON here")
    p.set_defaults(func=_cmd_gof)

    p = sub.add_parser("order-scan", help="sequential order determination")
    p.add_argument("input")
    p.add_argument("--zmax", type=int, default=3)
    _add_common(p, "B", "alpha", "ev", "seed")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_order_scan)

    p = sub.add_parser("spec-test",
                       help="two-stage OU specification test on a path or "
                            "tick CSV")
    p.add_argument("input")
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--day-length", dest="day_length", type=int, default=None)
    _add_common(p, "B", "alpha", "ev", "seed")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_spec_test)

    p = sub.add_parser("experiment", help="Monte Carlo rejection-rate table")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--ev", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--z", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output prefix for CSV/JSON/manifest")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("ingest", help="tick CSV to daily-curve CSV")
    p.add_argument("input")
    p.add_argument("--day-length", dest="day_length", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArhgofError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
