"""Batch command line: ``fbmc-mimo run|sweep|validate <scenario-file>``.

Exit codes: 0 success, 1 invalid input (usage, scenario file), 2 runtime or
numerical failure.  Progress goes to standard error; results only to files.
"""

import argparse
import logging
import os
import sys
import time

from .config import parse_scenario
from .errors import ConfigurationError, FbmcMimoError
from .experiments import SWEEP_AXES, run_scenario, run_sweep
from .reports import VERSION, write_reports, write_sweep

OUT_ENV = "FBMC_MIMO_OUT"
DEFAULT_OUT = "results"

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("fbmc_mimo.cli")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="fbmc-mimo", description="FBMC massive MIMO uplink simulator")
    parser.add_argument("--version", action="version", version=VERSION)
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress output")
    sub = parser.add_subparsers(dest="command", metavar="{run,sweep,validate}",
                                parser_class=_Parser)
    sub.required = True

    def common(p):
        p.add_argument("scenario", help="scenario file")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--plot", action="store_true", help="also write SVG plots")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--workers", type=int, help="override run.workers")

    common(sub.add_parser("run", help="run one scenario"))
    sweep = sub.add_parser("sweep", help="run a scenario once per axis value")
    common(sweep)
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--values", required=True,
                       help="comma separated values, e.g. 8,32,128")
    sweep.add_argument("--same-seed", action="store_true",
                       help="use the base seed at every point instead of derived seeds")
    v = sub.add_parser("validate", help="check a scenario file and print OK")
    v.add_argument("scenario", help="scenario file")
    return parser


def _load(args):
    scenario = parse_scenario(args.scenario)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    return scenario.replace(**changes) if changes else scenario


def _values(text, axis):
    conv = int if axis in ("M", "L") else float
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"--values: {exc}") from None


def _out_dir(args):
    return args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        scenario = _load(args)
        if args.command == "validate":
            print("OK")
            return EXIT_OK
        out = _out_dir(args)
        start = time.perf_counter()
        if args.command == "run":
            log.info("running %s (%d trials, seed %d)", scenario.experiment,
                     scenario.trials, scenario.seed)
            paths = write_reports(run_scenario(scenario), out, plot=args.plot)
        else:
            values = _values(args.values, args.axis)
            log.info("sweeping %s over %s", args.axis, values)
            points = run_sweep(scenario, args.axis, values, same_seed=args.same_seed)
            paths = write_sweep(points, out, plot=args.plot)
            failed = sum(not p.ok for p in points)
            if failed:
                log.warning("%d of %d sweep points failed", failed, len(points))
        log.info("wrote %d files to %s in %.1f s", len(paths), out,
                 time.perf_counter() - start)
        return EXIT_OK
    except (FileNotFoundError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FbmcMimoError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
