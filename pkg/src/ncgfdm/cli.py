"""Command-line entry point for the experiment runner.

Subcommands mirror the experiment kinds: psd, ber, sir, power, validate.
A JSON config file supplies the full experiment description; individual
keys can be overridden on the command line.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .experiments import (
    ExperimentConfig,
    apply_preset,
    run_experiment,
    run_validation,
    write_tables,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncgfdm",
        description="N-continuous GFDM experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind, help_text in (
        ("psd", "Welch PSD comparison across waveform variants"),
        ("ber", "Monte-Carlo BER vs Eb/N0"),
        ("sir", "theoretical and empirical SIR over (beta, V)"),
        ("power", "smooth-signal power vs symbol index"),
        ("validate", "operator identity suite over the standard matrix"),
    ):
        sp = sub.add_parser(kind, help=help_text)
        sp.add_argument("--config", help="JSON experiment config file")
        sp.add_argument("--seed", type=int, help="master seed override")
        sp.add_argument("--out", help="output directory (default: current)")
        sp.add_argument(
            "--preset",
            choices=("desk", "paper"),
            help="scale preset applied on top of the config",
        )
        sp.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override an individual config key (JSON-parsed value)",
        )
    return parser


def _apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    fields = {}
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise SystemExit(f"bad override {item!r}; expected KEY=VALUE")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if isinstance(value, list):
            value = tuple(value)
        fields[key] = value
    try:
        return replace(cfg, **fields)
    except TypeError as exc:
        raise SystemExit(f"unknown config key in overrides: {exc}")


def load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig()
    cfg = replace(cfg, kind=args.command)
    if args.preset:
        cfg = apply_preset(cfg, args.preset)
    cfg = _apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args)
    out_dir = cfg.out_dir or "."
    if args.command == "validate":
        report = run_validation(cfg)
        write_tables(cfg, [report.to_table(cfg)], out_dir)
        for row in report.rows:
            K, M, beta, V, identity, residual, tol, ok = row
            status = "PASS" if ok else "FAIL"
            print(
                f"{status} K={K} M={M} beta={beta} V={V} {identity}: "
                f"residual {residual:.3e} (tol {tol:.0e})"
            )
        if not report.passed:
            print(f"{len(report.failures())} identity check(s) failed", file=sys.stderr)
            return 1
        print(f"all {len(report.rows)} identity checks passed")
        return 0
    tables = run_experiment(cfg)
    paths = write_tables(cfg, tables, out_dir)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
