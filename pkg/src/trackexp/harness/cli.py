"""``trackexp run|verify|lowerbound --config FILE [--out DIR] [--seed N] [--replicates N]``.

Exit codes: 0 success, 1 invalid configuration or input, 2 a checked
assertion failed (regret above bound, lemma check failure, or mean regret
below the lower-bound floor).
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError
from .config import load_config
from .runner import (EXIT_ASSERTION, EXIT_INVALID, EXIT_OK, command_lowerbound, command_run,
                     command_verify)

log = logging.getLogger("trackexp")

COMMANDS = {
    "run": command_run,
    "verify": command_verify,
    "lowerbound": command_lowerbound,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trackexp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "replicated runs; writes ledgers, scripts and summary.txt",
        "verify": "replay with per-step inequality checks; writes check_report.txt",
        "lowerbound": "mean regret on fresh adversarial games vs the lower-bound formula",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--out", help="output directory (overrides 'output')")
        p.add_argument("--seed", type=int, help="overrides 'seed_base'")
        p.add_argument("--replicates", type=int, help="overrides 'replicates'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.output = args.out
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed: expected a nonnegative integer")
            cfg.seed_base = args.seed
        if args.replicates is not None:
            if args.replicates < 1:
                raise ConfigError("--replicates: expected a positive integer")
            cfg.replicates = args.replicates
        log.info("%s: %d replicate(s), seed_base=%d -> %s", args.command, cfg.replicates,
                 cfg.seed_base, cfg.output)
        code = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"trackexp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if code == EXIT_ASSERTION:
        print(f"trackexp: {args.command}: assertion failed (see {cfg.output})", file=sys.stderr)
    elif code == EXIT_OK:
        log.info("done")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
