"""Command-line entry point.

    onelayer-gan train        --config PATH [--seed U64] [--out DIR] [--threads N]
    onelayer-gan sweep        --config PATH [--seed U64] [--out DIR] [--threads N]
    onelayer-gan certify      --config PATH [--run DIR] [--out DIR]
    onelayer-gan hardness     CNF_PATH [--out DIR]
    onelayer-gan kernel-check [--config PATH] [--seed U64] [--samples N] [--out DIR]
    onelayer-gan plot         [SUMMARY_CSV] [--out DIR]

On success the exit code is 0 and a one-line JSON result goes to stdout.
On failure a single JSON line ``{"error": ..., "message": ...}`` goes to
stderr and the exit code is 2 for usage/config errors, 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .certify import certify_run_dir
from .config import U64_MAX, ConfigError, ExperimentConfig, load_config
from .experiment import run_experiment, sweep
from .io import fmt
from .kernel_check import CHECK_COLUMNS, run_kernel_checks
from .plotting import plot_summary

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="onelayer-gan", description="Two-stage GDA for one-layer generative models")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, metavar="PATH")
        sp.add_argument("--seed", type=_u64, metavar="U64")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--threads", type=_positive, metavar="N")

    common(sub.add_parser("train", help="run the trials of one (d, n) cell"))
    common(sub.add_parser("sweep", help="run the full (d, n) grid and aggregate"))
    sp = sub.add_parser("certify", help="stationarity report for trained runs")
    common(sp)
    sp.add_argument("--run", metavar="DIR", help="directory with final_A_*.csv (default: the output dir)")
    sp.add_argument("--probes", type=_positive, default=64)
    sp = sub.add_parser("hardness", help="decide a 3SAT DIMACS instance via the min-max reduction")
    sp.add_argument("cnf", metavar="CNF_PATH")
    common(sp, config_required=False)
    sp = sub.add_parser("kernel-check", help="Hermite kernels against Monte Carlo")
    common(sp, config_required=False)
    sp.add_argument("--samples", type=_positive, default=1_000_000)
    sp = sub.add_parser("plot", help="SVG chart of a sweep summary")
    sp.add_argument("summary", nargs="?", metavar="SUMMARY_CSV")
    common(sp, config_required=False)
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, threads=args.threads, out_dir=args.out)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_train(args) -> int:
    cfg = _config(args)
    results, summary = run_experiment(cfg)
    row = summary.rows[0] if summary.rows else None
    _emit({
        "command": "train",
        "out": cfg.out_dir,
        "trials": len(results),
        "mean_rec_err": row.mean_rec_err if row else None,
        "std_rec_err": row.std_rec_err if row else None,
    })
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    summary = sweep(cfg)
    _emit({
        "command": "sweep",
        "out": cfg.out_dir,
        "cells": len(summary.rows),
        "failures": len(summary.failures),
    })
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = _config(args)
    run_dir = Path(args.run or cfg.out_dir)
    reports = certify_run_dir(run_dir, cfg.activation_spec(), probes=args.probes, seed=cfg.seed)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "certify.json"
    path.write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit({
        "command": "certify",
        "report": str(path),
        "runs": len(reports),
        "all_hold": all(r["holds"] for r in reports),
        "max_fosp_eps": max(r["fosp_eps"] for r in reports),
    })
    return EXIT_OK


def cmd_hardness(args) -> int:
    from ..hardness import build_minmax, find_zeroing_assignment, parse_dimacs

    path = Path(args.cnf)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    sat = parse_dimacs(text)
    x = find_zeroing_assignment(build_minmax(sat))
    result = {
        "command": "hardness",
        "num_vars": sat.num_vars,
        "num_clauses": sat.num_clauses,
        "stationary_point_exists": x is not None,
        "witness": None if x is None else [int(v) for v in x],
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "hardness.json").write_text(json.dumps(result, sort_keys=True) + "\n", encoding="utf-8")
    _emit(result)
    return EXIT_OK


def cmd_kernel_check(args) -> int:
    cfg = _config(args)
    kinds = (cfg.activation,) if args.config else ("tanh", "sigmoid", "leaky_relu")
    checks = run_kernel_checks(kinds=kinds, samples=args.samples, seed=cfg.seed, leak=cfg.leak)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "kernel_check.csv"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(CHECK_COLUMNS) + "\n")
        for c in checks:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in c.row()) + "\n")
    failed = [c for c in checks if not c.passes()]
    _emit({"command": "kernel-check", "report": str(path), "checks": len(checks), "failed": len(failed)})
    if failed:
        worst = max(failed, key=lambda c: abs(c.z))
        raise RuntimeError(
            f"{len(failed)} of {len(checks)} comparisons outside 3 standard errors "
            f"(worst: {worst.activation} {worst.kernel} alpha={worst.alpha} beta={worst.beta} "
            f"rho={worst.rho:g} z={worst.z:.2f})"
        )
    return EXIT_OK


def cmd_plot(args) -> int:
    out = Path(args.out or (load_config(args.config).out_dir if args.config else "out"))
    summary = Path(args.summary) if args.summary else out / "summary.csv"
    if not summary.is_file():
        raise FileNotFoundError(f"summary CSV not found: {summary}")
    out.mkdir(parents=True, exist_ok=True)
    svg = plot_summary(summary, out / "summary.svg")
    _emit({"command": "plot", "svg": str(svg)})
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "hardness": cmd_hardness,
    "kernel-check": cmd_kernel_check,
    "plot": cmd_plot,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    except Exception as exc:  # every failure becomes one machine-readable line
        return _fail(type(exc).__name__, str(exc), EXIT_FAIL)


if __name__ == "__main__":
    sys.exit(main())
