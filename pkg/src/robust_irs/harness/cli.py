"""Command-line entry point ``robust-irs``.

Subcommands ``estimate``, ``solve-su``, ``solve-mu`` and ``sweep`` run the
configured Monte-Carlo experiment and export aggregated rows. Exit codes:
0 on success, 2 on a configuration error, 3 on an I/O error.
"""

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiment import run_sweep
from .export import export

__all__ = ["main", "build_parser"]

log = logging.getLogger("robust_irs")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

COMMANDS = {
    "estimate": "channel-estimation quality only (normalized MSE)",
    "solve-su": "single-user design with the penalized Dinkelbach-BSUM solver",
    "solve-mu": "multiuser design with the PDD solver",
    "sweep": "every enabled scheme, solver picked by the number of users",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="robust-irs",
                                     description="Robust IRS reflection design under imperfect CSI.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file (defaults used for missing keys)")
        p.add_argument("--seed", type=int, help="master seed (overrides experiment.master_seed)")
        p.add_argument("--out", default="-", help="output file, '-' for stdout (default)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")
    return parser


def _config_for(args):
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"experiment.master_seed={args.seed}")
    if args.command == "solve-su":
        overrides.append("experiment.solver=su")
    elif args.command == "solve-mu":
        overrides.append("experiment.solver=mu")
    return load_config(args.config, overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config_for(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    schemes = () if args.command == "estimate" else None
    log.info("running %s: %d trial(s) x %d point(s)", args.command, cfg.trials,
             max(1, len(cfg.sweep_values)))
    rows = run_sweep(cfg, schemes)
    try:
        text = export(rows, args.out, args.format)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.out == "-":
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
