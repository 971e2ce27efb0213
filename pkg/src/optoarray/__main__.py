from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .config import Config, ConfigError
from .run import COMMANDS, run

sentinel = object()


def _load_config(config_path: Optional[str]) -> Config:
    if config_path is None:
        return Config()
    elif config_path.endswith(".json"):
        return Config.from_json(config_path)
    else:
        return Config.from_toml(config_path)


def main(sys_args: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="optoarray")
    parser.add_argument("command", choices=list(COMMANDS), help="The experiment to run")
    parser.add_argument(
        "-c",
        "--config",
        help="Location of an experiment file, JSON if the name ends in `.json` else TOML",
        default=None,
    )
    parser.add_argument(
        "-o", "--out", dest="out_dir", help="Directory for the result files", default=sentinel
    )
    parser.add_argument(
        "--force-dim",
        help="Run even if the Hilbert space exceeds the dimension guard",
        action="store_true",
        default=sentinel,
    )
    parser.add_argument(
        "--threads",
        help="Worker processes for sweeps, 0 uses every core",
        type=int,
        default=sentinel,
    )
    parser.add_argument(
        "--gnuplot-script",
        help="Write a gnuplot script next to each CSV file",
        action="store_true",
        default=sentinel,
    )
    parser.add_argument(
        "--log-level", dest="loglevel", help="The (error) log level", default=sentinel
    )
    parser.add_argument(
        "--error-logfile",
        dest="errorlog",
        help="The target location for the error log, use `-` for stderr",
        default=sentinel,
    )
    parser.add_argument(
        "--progress-logfile",
        dest="progresslog",
        help="The target location for the sweep progress log, use `-` for stdout",
        default=sentinel,
    )
    args = parser.parse_args(sys_args or sys.argv[1:])

    # parser.error exits with status 2, the configuration error code
    try:
        config = _load_config(args.config)
    except ConfigError as error:
        parser.error(str(error))

    if args.out_dir is not sentinel:
        config.out_dir = args.out_dir
    if args.force_dim is not sentinel:
        config.force_dim = args.force_dim
    if args.threads is not sentinel:
        if args.threads < 0:
            parser.error("--threads must be non-negative")
        config.threads = args.threads
    if args.gnuplot_script is not sentinel:
        config.gnuplot_script = args.gnuplot_script
    if args.loglevel is not sentinel:
        config.loglevel = args.loglevel
    if args.errorlog is not sentinel:
        config.errorlog = args.errorlog
    if args.progresslog is not sentinel:
        config.progresslog = args.progresslog

    return run(config, args.command)


if __name__ == "__main__":
    sys.exit(main())
