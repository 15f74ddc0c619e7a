"""Command-line driver: ``polariton-rc <experiment> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import config as config_mod
from .errors import DataError, DivergenceError, FormatError, ParameterError
from .experiments import RUNNERS, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polariton-rc", description="Polariton-lattice reservoir computing experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="INI experiment config")
        sp.add_argument("--out", required=True, help="directory for CSV reports")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for lattice simulations")
        sp.add_argument("--seed-override", type=int, default=None, metavar="K",
                        help="use mask seed K and split seeds K, K+1, ... (same count)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            sp.add_argument("--axis", help="section.key to sweep (default: experiment.sweep_axis)")
            sp.add_argument("--values", help="comma-separated values (default: experiment.sweep_values)")
    return ap


def apply_seed_override(cfg: config_mod.ExperimentConfig, k: int) -> config_mod.ExperimentConfig:
    seeds = tuple(range(k, k + len(cfg.data.split_seeds)))
    return dataclasses.replace(
        cfg,
        data=dataclasses.replace(cfg.data, split_seeds=seeds),
        encoder=dataclasses.replace(cfg.encoder, mask_seed=k),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ParameterError("--threads must be >= 1")
        cfg, text = config_mod.load(args.config)
        if args.seed_override is not None:
            cfg = apply_seed_override(cfg, args.seed_override)
        if args.command == "sweep":
            if args.axis:
                cfg = cfg.replace("experiment.sweep_axis", args.axis)
            if args.values:
                cfg = cfg.replace("experiment.sweep_values", args.values)
        report = run(cfg, args.command, threads=args.threads, config_text=text)
        out = report.write(args.out)
    except (ParameterError, FormatError, DataError, DivergenceError, OSError) as exc:
        print(f"polariton-rc: error: {exc}", file=sys.stderr)
        return 2
    print("\n".join(report.summary))
    print(f"reports written to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
