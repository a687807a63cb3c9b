import argparse
import logging
import os
import sys

from communication.middleware.middleware import Middleware, RunManifest
from core.config import config
from core.utils import utilities as utils

COMMANDS = ["calibrate", "simulate", "sensitivity", "analyze", "selfcheck"]


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def sample_count(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"the analysis needs at least 2 samples, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calibrate-microsim",
        description="Genetic-algorithm calibration and sensitivity analysis of a demographic micro-simulation")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help=f"experiment JSON file (default: {config.CONFIG_FILE} if present)")
    parser.add_argument("--observed", help="observed indicators CSV (indicator,subkey,geo_level,geo_id,year,value)")
    parser.add_argument("--out", default="output", help="output directory (default: output)")
    parser.add_argument("--seed", type=int, help="master seed; also the simulation repetition seed base")
    parser.add_argument("--threads", type=positive_int, default=config.THREADS,
                        help=f"simulation worker processes (default: available cores, {config.THREADS} here)")
    parser.add_argument("--repetitions", type=positive_int, help="simulation runs averaged per chromosome")
    parser.add_argument("--samples", type=sample_count, help="number of uniform samples (sensitivity)")
    parser.add_argument("--params", help="name,value params file (simulate)")
    parser.add_argument("--samples-file", help="samples CSV to analyze (default: <out>/samples.csv)")
    parser.add_argument("--max-gens", type=positive_int, help="override the maximum number of generations")
    parser.add_argument("--plateau", type=positive_int, help="override the plateau length in generations")
    parser.add_argument("--world-snapshot", action="store_true", help="dump the final world of repetition 0 (simulate)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def default_config_path():
    """calibration_config.json in the working directory, when present"""
    return config.CONFIG_FILE if os.path.exists(config.CONFIG_FILE) else None


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    return RunManifest(
        command=args.command,
        config_path=args.config or default_config_path(),
        observed_data_path=args.observed,
        output_directory=args.out,
        master_seed=args.seed,
        thread_count=args.threads,
        repetitions=args.repetitions,
        samples=args.samples,
        params_path=args.params,
        samples_path=args.samples_file,
        max_generations=args.max_gens,
        plateau_generations=args.plateau,
        world_snapshot=args.world_snapshot,
    )


def print_summary(summary: dict):
    print("\n" + "=" * 60)
    print(f"📊 {summary['command']} summary")
    print("=" * 60)
    for key, value in summary.items():
        if key == "command" or isinstance(value, dict):
            continue
        if isinstance(value, float):
            value = f"{value:.6g}"
        print(f"   • {key}: {value}")
    for key, value in summary.items():
        if isinstance(value, dict):
            print(f"\n   {key}:")
            for name, item in value.items():
                print(f"      - {name}: {item:.6g}" if isinstance(item, float) else f"      - {name}: {item}")


# ==============================
# MAIN ENTRY POINT
# ==============================
def main(argv=None) -> int:
    """Run one command; returns the process exit status"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    utils.setup_logging(args.verbose)
    try:
        middleware = Middleware(manifest_from_args(args))
        summary = getattr(middleware, args.command)()
    except KeyboardInterrupt:
        print("\n\n👋 Run interrupted.")
        return 130
    except Exception as e:
        print(f"\n✗ Error: {e}", file=sys.stderr)
        logging.debug("Command failed", exc_info=True)
        return 1

    print_summary(summary)
    if args.command == "selfcheck":
        if summary["passed"]:
            print("\n✓ Self-check passed")
            return 0
        print("\n✗ Self-check failed: best fitness above the acceptance threshold")
        return 1
    print(f"\n✓ {args.command} finished, results in {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
