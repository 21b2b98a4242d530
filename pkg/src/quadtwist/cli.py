"""Command-line entry point: ``verify --alpha 2``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .arith import QuadFieldError, parse_rational
from .checks import DEFAULT_SEED
from .maps import MapFormatError, load_map_file
from .prop1 import DEFAULT_DEGREE_BOUND
from .report import SUITES, ConfigError, SuiteConfig, emit_report, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="verify",
        description="Exact verification suite for a twisted form of the Schwarz action over Q(sqrt(alpha)).",
    )
    p.add_argument("--alpha", default="2", help="non-square rational p/q (default 2)")
    p.add_argument(
        "--suite",
        action="append",
        choices=("all",) + SUITES,
        help="suite to run; repeatable (default all; arith always runs)",
    )
    p.add_argument("--degree-bound", type=int, default=DEFAULT_DEGREE_BOUND, help="degree bound D, 0..12 (default 8)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--trace", action="store_true", help="include the elimination trace")
    p.add_argument("--map", metavar="FILE", help="also check a map in the polymap JSON format")
    p.add_argument("--no-timing", action="store_true", help="omit wall times (byte-stable output)")
    return p


def config_from_args(args: argparse.Namespace) -> SuiteConfig:
    try:
        alpha = parse_rational(args.alpha)
    except (ValueError, QuadFieldError) as exc:
        raise ConfigError(f"invalid alpha {args.alpha!r}: {exc}") from None
    chosen = args.suite or ["all"]
    suites = SUITES if "all" in chosen else tuple(dict.fromkeys(chosen))
    return SuiteConfig(
        alpha=alpha,
        suites=suites,
        degree_bound=args.degree_bound,
        seed=args.seed,
        format=args.format,
        trace=args.trace,
        map_file=args.map,
        timing=not args.no_timing,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        K = cfg.validate()
        user_map = None
        if cfg.map_file:
            user_map = load_map_file(cfg.map_file)
            if user_map.field.alpha != K.alpha:
                raise ConfigError(f"map is over alpha={user_map.field.alpha}, suite over alpha={K.alpha}")
        report = run_suite(cfg, user_map)
    except (ConfigError, MapFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(emit_report(report, cfg.format, cfg.timing))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
