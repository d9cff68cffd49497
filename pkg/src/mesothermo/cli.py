"""Command-line interface: ``mesothermo {run,reduce,verify}``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 failed verification check.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import load_config
from .errors import (ConfigError, ConvergenceError, DomainError, NumericalBlowup,
                     SingularSystemError, StabilityError)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

NUMERICAL_ERRORS = (NumericalBlowup, ConvergenceError, SingularSystemError, DomainError,
                    ArithmeticError)

log = logging.getLogger("mesothermo")


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with the usage code instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mesothermo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a time-dependent or static scenario")
    run.add_argument("--config", required=True, metavar="PATH", help="JSON scenario config")
    run.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    run.add_argument("--seed", type=int, metavar="N", help="seed (overrides config)")

    red = sub.add_parser("reduce", help="static MaxEnt or flux-closure reduction")
    red.add_argument("--config", required=True, metavar="PATH", help="JSON reduction config")
    red.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    red.add_argument("--seed", type=int, metavar="N", help="seed (overrides config)")

    ver = sub.add_parser("verify", help="run the invariant verification suite")
    ver.add_argument("--config", metavar="PATH", help="optional JSON config supplying the seed")
    ver.add_argument("--out", metavar="DIR", help="directory for verify_report.json")
    ver.add_argument("--seed", type=int, metavar="N", help="seed for randomized checks")
    ver.add_argument("--checks", metavar="LIST",
                     help="comma-separated check names (default: all; empty string: none)")
    return p


def _load(args, command):
    cfg = load_config(args.config, command)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def _numerical_failure(exc, out_dir):
    from .scenarios import dump_state, write_json
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    info = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, NumericalBlowup) and getattr(exc, "grid", None) is not None:
        paths = dump_state(out, exc.grid, exc.last_good)
        info.update(time=exc.time, step=exc.step, dump=[p.name for p in paths])
    write_json(out / "failure.json", info)
    print(f"numerical failure: {exc}", file=sys.stderr)
    return EXIT_NUMERICAL


def cmd_run(args) -> int:
    from .scenarios import run_scenario
    cfg = _load(args, "run")
    try:
        summary = run_scenario(cfg, cfg.output_dir)
    except NUMERICAL_ERRORS as exc:
        return _numerical_failure(exc, cfg.output_dir)
    print(json.dumps({"scenario": cfg.scenario, "out": str(cfg.output_dir),
                      "summary": "summary.json"}))
    log.info("summary: %s", summary)
    return EXIT_OK


def cmd_reduce(args) -> int:
    from .scenarios import run_reduction
    cfg = _load(args, "reduce")
    try:
        run_reduction(cfg, cfg.output_dir)
    except NUMERICAL_ERRORS as exc:
        return _numerical_failure(exc, cfg.output_dir)
    print(json.dumps({"scenario": cfg.scenario, "out": str(cfg.output_dir)}))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .scenarios import jsonable, write_json
    from .verify import CHECKS, run_checks
    seed = 0
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        seed = data.get("seed", 0) if isinstance(data, dict) else None
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"{args.config}: seed must be an integer")
    if args.seed is not None:
        seed = args.seed
    names = None
    if args.checks is not None:
        names = [n.strip() for n in args.checks.split(",") if n.strip()]
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown check(s) {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    t0 = time.perf_counter()
    report = run_checks(names, seed)
    report["elapsed_s"] = time.perf_counter() - t0
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    for name, res in report["checks"].items():
        print(f"{'PASS' if res['passed'] else 'FAIL'} {name} ({res['elapsed_s']:.1f} s)", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "verify_report.json", report)
    else:
        print(json.dumps(jsonable(report), indent=2, sort_keys=True))
    if report["failures"]:
        print(f"failed checks: {', '.join(report['failures'])}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"run": cmd_run, "reduce": cmd_reduce, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except StabilityError as exc:
        print(f"error: {exc}; reduce integrator.dt or set integrator.override_stability",
              file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
