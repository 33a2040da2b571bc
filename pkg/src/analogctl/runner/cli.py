"""
Command-line entry point ``analogctl``.

Subcommands
-----------
run              execute the configured method and write every table
sweep            write only the error-vs-E_S table (optimize, dd-sequence)
spectra          write bath and modulation spectra of the constructed paths
validate-config  parse and validate a config, print the normalized form

Exit codes: 0 success, 2 invalid configuration, 3 numerical abort (a
``diagnostics.json`` is written to the output directory).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings

import numpy as np
import yaml

from .config import ConfigError, load_config
from .experiments import run_experiment
from .reports import NonFiniteOutput, check_finite, write_diagnostics, write_manifest, write_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("analogctl")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="YAML/JSON experiment config or a run manifest")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, metavar="N", help="random seed (overrides seed)")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker threads for sweep points (default 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="analogctl",
                                     description="Decoherence-minimizing gate control.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the configured method")
    sub.add_parser("sweep", parents=[common], help="error-vs-E_S table only")
    sub.add_parser("spectra", parents=[common], help="spectra of the constructed paths")
    sub.add_parser("validate-config", parents=[common], help="validate a config file")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads: must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config).with_overrides(seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate-config":
        print(yaml.safe_dump(cfg.raw, sort_keys=False), end="")
        print("config OK", file=sys.stderr)
        return EXIT_OK

    out_dir = cfg["output"]["dir"]
    t0 = time.perf_counter()
    stage = "compute"
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            with np.errstate(invalid="ignore"):
                result = run_experiment(cfg, args.command, args.threads)
        t1 = time.perf_counter()
        stage = "write"
        check_finite(result.tables)
        files = [write_table(t, out_dir) for t in result.tables]
        timings = {"compute": round(t1 - t0, 3), "write": round(time.perf_counter() - t1, 3)}
        write_manifest(out_dir, cfg.raw, files, command=args.command,
                       summary=result.summary, timings=timings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, NonFiniteOutput, ArithmeticError, np.linalg.LinAlgError,
            ValueError) as exc:
        path = write_diagnostics(out_dir, exc, stage=stage, config=cfg.raw)
        print(f"numerical abort ({type(exc).__name__}): {exc}\ndiagnostics: {path}",
              file=sys.stderr)
        return EXIT_NUMERICAL

    for t, f in zip(result.tables, files):
        print(f"wrote {f} ({len(t)} rows)")
    for line in result.summary.get("lines", []):
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
