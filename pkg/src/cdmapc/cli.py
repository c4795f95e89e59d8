"""Command-line entry point: ``cdmapc {target-sinr,fig1,profile,sweep}``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import experiments as ex
from .errors import ConfigurationError
from .model import SystemConfig, load_config


def _write(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _k_grid(text: str) -> list[int]:
    try:
        grid = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k grid {text!r}")
    if not grid or min(grid) < 1:
        raise argparse.ArgumentTypeError("k grid needs positive integers")
    return grid


def _scenario(args) -> tuple[SystemConfig, int]:
    if args.config:
        cfg, file_seed = load_config(args.config)
    else:
        cfg, file_seed = SystemConfig(), None
    seed = args.seed if args.seed is not None else (file_seed if file_seed is not None else 0)
    return cfg, seed


def cmd_target_sinr(args):
    g = ex.solve_target_sinr(args.m)
    print(f"{g!r} {10 * math.log10(g):.4f} dB")


def cmd_fig1(args):
    res = ex.run_fig1(n=args.n, k=args.k, realizations=args.realizations, seed=args.seed,
                      noise_psd=args.noise_psd, mean_power=args.mean_power,
                      resample_powers=args.resample_powers)
    _write(ex.format_csv(ex.FIG1_HEADER, res.rows()), args.out)


def cmd_profile(args):
    cfg, seed = _scenario(args)
    res = ex.run_power_profile(cfg, seed, table_samples=args.table_samples)
    for f in res.failures:
        print(f"failed: {f.algorithm}/{f.receiver}: {f.reason}", file=sys.stderr)
    _write(ex.format_csv(ex.PROFILE_HEADER, res.rows()), args.out)


def cmd_sweep(args):
    cfg, seed = _scenario(args)
    res = ex.run_sweep(cfg, args.k_grid, args.trials, seed, workers=args.workers,
                       table_samples=args.table_samples)
    if res.failures:
        print(f"{len(res.failures)} algorithm runs failed and were excluded:", file=sys.stderr)
        for f in res.failures:
            print(f"  k={f.k} trial={f.trial} {f.algorithm}/{f.receiver}: {f.reason}",
                  file=sys.stderr)
    _write(ex.format_csv(ex.SWEEP_HEADER, ex.sweep_rows(res)), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdmapc", description="Large-system power control for uplink CDMA.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("target-sinr", help="utility-maximizing SINR for packet length M")
    p.add_argument("--m", type=int, default=120)
    p.set_defaults(func=cmd_target_sinr)

    p = sub.add_parser("fig1", help="exact SIC SINRs against the large-system limit")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-psd", type=float, default=0.1)
    p.add_argument("--mean-power", type=float, default=1.0)
    p.add_argument("--resample-powers", action="store_true",
                   help="draw fresh received powers for every realization")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fig1)

    for name, func, helptext in (("profile", cmd_profile, "per-user powers for one draw"),
                                 ("sweep", cmd_sweep, "averages versus number of users")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON scenario file (defaults to the built-in scenario)")
        p.add_argument("--seed", type=int)
        p.add_argument("--table-samples", type=int, default=ex.DEFAULT_TABLE_SAMPLES)
        p.add_argument("--out")
        p.set_defaults(func=func)
        if name == "sweep":
            p.add_argument("--k-grid", type=_k_grid, default=[16, 32, 64, 96, 128])
            p.add_argument("--trials", type=int, default=1000)
            p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
