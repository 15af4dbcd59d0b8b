#!/usr/bin/env python

import argparse
import sys
from typing import List, Optional

from fiber_tactile import utils
from fiber_tactile.config import load_config
from fiber_tactile.errors import (
    EXIT_IO,
    EXIT_SUCCESS,
    EXIT_USAGE,
    FiberTactileError,
)
from fiber_tactile.tactile_handler import REPORT_FORMATS, TactileHandler

DEFAULT_SEED = 0


def seed_type(value: str) -> int:
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {seed}")
    return seed


def add_common_arguments(parser: argparse.ArgumentParser, defaults: bool) -> None:
    def default(value: object) -> object:
        return value if defaults else argparse.SUPPRESS

    parser.add_argument(
        "-d",
        "--debug",
        action="store_true",
        default=default(False),
        help="Enable debug output",
    )
    parser.add_argument(
        "-c",
        "--config",
        type=str,
        default=default(None),
        help="JSON configuration file",
    )
    parser.add_argument(
        "-s",
        "--seed",
        type=seed_type,
        default=default(DEFAULT_SEED),
        help=f"Random seed (default {DEFAULT_SEED})",
    )


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(
        description="Fiber-cavity tactile sensing pipeline"
    )

    # Common arguments go on the main parser and on every subcommand. The
    # subcommand copies default to SUPPRESS so they never overwrite a value
    # given before the subcommand name.
    add_common_arguments(parser, defaults=True)
    parent_parser = argparse.ArgumentParser(add_help=False)
    add_common_arguments(parent_parser, defaults=False)

    subparsers = parser.add_subparsers(dest="command")

    calibrate_parser = subparsers.add_parser(
        "calibrate",
        help="Run plate calibration and write a calibration profile",
        parents=[parent_parser],
    )
    calibrate_parser.add_argument(
        "--out", type=str, required=True, help="Calibration profile to write"
    )

    sort_parser = subparsers.add_parser(
        "sort",
        help="Run the soft/rigid sorting experiment",
        parents=[parent_parser],
    )
    sort_parser.add_argument(
        "--profile", type=str, required=True, help="Calibration profile to use"
    )
    sort_parser.add_argument(
        "--out",
        type=str,
        required=True,
        help="Report path; the suffix is replaced per format",
    )
    sort_parser.add_argument(
        "--format",
        choices=sorted(REPORT_FORMATS),
        default="both",
        help="Report format",
    )
    sort_parser.add_argument(
        "--objects",
        type=int,
        default=None,
        help="Only grasp the first N objects of the set",
    )
    sort_parser.add_argument(
        "--object-set", type=str, default=None, help="Object set file to grasp"
    )
    sort_parser.add_argument(
        "--episode-log", type=str, default=None, help="Append episodes to this log"
    )
    sort_parser.add_argument(
        "--telemetry-out",
        type=str,
        default=None,
        help="Write the episodes as a telemetry byte log",
    )

    replay_parser = subparsers.add_parser(
        "replay",
        help="Parse a telemetry byte log and estimate each grasp",
        parents=[parent_parser],
    )
    replay_parser.add_argument(
        "log", type=str, help="Byte log file or character device"
    )
    replay_parser.add_argument(
        "--profile", type=str, required=True, help="Calibration profile to use"
    )
    replay_parser.add_argument(
        "--episodes",
        type=str,
        default=None,
        help="Episode log with the gripper gaps of each grasp",
    )

    characterize_parser = subparsers.add_parser(
        "characterize",
        help="Sweep every channel over its full range and write plot data",
        parents=[parent_parser],
    )
    characterize_parser.add_argument(
        "--out", type=str, required=True, help="CSV file to write"
    )

    drift_parser = subparsers.add_parser(
        "drift",
        help="Compare two calibration profiles",
        parents=[parent_parser],
    )
    drift_parser.add_argument("before", type=str, help="Earlier profile")
    drift_parser.add_argument("after", type=str, help="Later profile")

    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main function to handle command line arguments and execute the appropriate actions.
    Returns:
        int: Exit code (0 for success, non-zero for failure)
    """
    args = parse_arguments(argv)

    # Initialize logger
    logger = utils.setup_logging(args.debug)
    logger.debug(f"Starting fiber-tactile {args.command} with seed {args.seed}")

    try:
        config = load_config(args.config)
        handler = TactileHandler(config, seed=args.seed)

        if args.command == "calibrate":
            handler.calibrate(args.out)
        elif args.command == "sort":
            handler.sort(
                args.profile,
                out=args.out,
                report_format=args.format,
                count=args.objects,
                object_set=args.object_set,
                episode_log=args.episode_log,
                telemetry_out=args.telemetry_out,
            )
        elif args.command == "replay":
            handler.replay(args.log, args.profile, args.episodes)
        elif args.command == "characterize":
            handler.characterize(args.out)
        elif args.command == "drift":
            handler.drift(args.before, args.after)
        else:
            logger.error("No command specified")
            return EXIT_USAGE

        logger.debug(f"Finished {args.command}")
        return EXIT_SUCCESS
    except FiberTactileError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
