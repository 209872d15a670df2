"""Command-line experiment runner.

One invocation runs one experimental cell and writes two CSV files: the
per-generation rows and the across-iteration summary.  Exit status is 0 on
success and 2 for unusable arguments or configuration.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .harness import (
    ExperimentConfig,
    run_experiment,
    summary_path_for,
    write_rows_csv,
    write_summary_csv,
)
from .trees import ConfigurationError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpislands",
        description="Evolve programs on one or more islands and record fitness statistics.")
    parser.add_argument("--app", required=True, choices=["feed", "localisation"],
                        help="benchmark task to evolve against")
    parser.add_argument("--islands", type=int, default=2)
    parser.add_argument("--capacity", type=int, default=10,
                        help="programs per island")
    parser.add_argument("--generations", type=int, default=20)
    parser.add_argument("--iterations", type=int, default=15,
                        help="independent repetitions of the whole run")
    parser.add_argument("--interval", type=int, default=5,
                        help="generations between migration events")
    parser.add_argument("--rate", type=float, default=0.1,
                        help="fraction of capacity exchanged per event")
    parser.add_argument("--mode", choices=["migrate", "random", "none"],
                        default="migrate",
                        help="exchange programs, inject random ones, or do neither")
    parser.add_argument("--landscape", choices=["homo", "hetero"], default="homo",
                        help="same reader everywhere, or per-island tastes (feed only)")
    parser.add_argument("--seed", default="0", help="base seed for the whole experiment")
    parser.add_argument("--out", default="results.csv", help="per-generation CSV path")
    parser.add_argument("--transport", choices=["sim", "udp"], default="sim")
    parser.add_argument("--loss", type=float, default=0.0,
                        help="per-delivery loss probability of the simulated transport")
    parser.add_argument("--strategy", default="auto",
                        help="breeding strategy: auto, gr, island, localisation, "
                             "or a JSON file")
    parser.add_argument("--app-config", dest="app_config", default=None,
                        help="JSON file overriding the task's catalog or world")
    parser.add_argument("--helper", action=argparse.BooleanOptionalAction, default=True,
                        help="screen generated programs with the task helper")
    parser.add_argument("--max-depth", dest="max_depth", type=int, default=3)
    parser.add_argument("--udp-base-port", dest="udp_base_port", type=int, default=47500)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig(
        app=args.app, islands=args.islands, capacity=args.capacity,
        generations=args.generations, iterations=args.iterations,
        interval=args.interval, rate=args.rate, mode=args.mode,
        landscape=args.landscape, seed=args.seed, transport=args.transport,
        loss=args.loss, strategy=args.strategy, helper=args.helper,
        max_depth=args.max_depth, app_config=args.app_config,
        udp_base_port=args.udp_base_port)
    try:
        result = run_experiment(config)
        write_rows_csv(result, args.out)
        summary_path = summary_path_for(args.out)
        write_summary_csv(result, summary_path)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(result.rows)} rows to {args.out}")
    print(f"wrote summary to {summary_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
