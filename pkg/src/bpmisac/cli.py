"""Command-line entry point: ``bpm-isac {ber,tradeoff,beampattern,apep,validate}``.

Exit status: 0 success, 1 usage or config error, 2 validation failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import BpmIsacError
from .io import records_to_csv, records_to_json, table_to_csv, write_text
from .sim import (SCHEMES, ExperimentConfig, run_apep_curve, run_beampattern,
                  run_ber_sweep, run_tradeoff_sweep)
from .validate import FAULTS, format_report, validate

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def parse_snr(text: str) -> list[float]:
    """``start:step:stop`` (inclusive stop) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("expected start:step:stop")
        start, step, stop = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(x) for x in text.split(",") if x]


def parse_mu(text: str) -> list[float]:
    vals = [float(x) for x in text.split(",") if x]
    if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
        raise argparse.ArgumentTypeError("mu values must lie in [0, 1]")
    return vals


def parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def parse_seed(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=parse_seed)
    common.add_argument("--out", help="CSV output path (stdout when omitted)")
    common.add_argument("--json-out", help="optional JSON mirror of the CSV")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--snr", type=parse_snr, help="start:step:stop in dB, or a list")
    common.add_argument("--mu", type=parse_mu, help="comma-separated weights in [0, 1]")
    common.add_argument("--scheme", choices=SCHEMES)
    common.add_argument("--on-grid", type=parse_bool)
    common.add_argument("--trials", type=int)
    common.add_argument("--symbols", type=int, help="symbols per channel realization")
    common.add_argument("--digital", choices=("optimized", "fixed", "scaled"))
    common.add_argument("--timing", action="store_true", help="include wall_time column")

    parser = _Parser(prog="bpm-isac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("ber", parents=[common], help="BER versus Eb/N0")
    tr = sub.add_parser("tradeoff", parents=[common], help="BER / beampattern MSE versus mu")
    tr.add_argument("--at-snr", type=float, default=0.0)
    bp = sub.add_parser("beampattern", parents=[common], help="normalized transmit pattern")
    bp.add_argument("--active", help="comma-separated 0-based active beams")
    bp.add_argument("--sensing-beam", type=int, default=0)
    bp.add_argument("--at-snr", type=float, default=0.0)
    sub.add_parser("apep", parents=[common], help="analytic APEP curve")
    va = sub.add_parser("validate", parents=[common], help="run the property checks")
    va.add_argument("--inject-fault", action="append", default=[], choices=FAULTS)
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.snr is not None:
        changes["snr_grid"] = tuple(args.snr)
    if args.scheme is not None:
        changes["scheme"] = args.scheme
    if args.on_grid is not None:
        changes["on_grid"] = args.on_grid
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.symbols is not None:
        changes["symbols_per_channel"] = args.symbols
    if args.digital is not None:
        changes["digital"] = args.digital
    if args.mu is not None and args.command != "tradeoff":
        if len(args.mu) != 1:
            raise UsageError(f"{args.command} takes a single --mu value")
        changes["mu"] = args.mu[0]
    return cfg.replace(**changes) if changes else cfg


def _emit(args, text: str) -> None:
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    cfg = load_config(args)
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.command == "ber":
        records = run_ber_sweep(cfg, threads=args.threads)
    elif args.command == "tradeoff":
        mu_list = args.mu or [round(0.1 * i, 10) for i in range(1, 11)]
        records = run_tradeoff_sweep(cfg, mu_list, snr_db=args.at_snr, threads=args.threads)
    elif args.command == "beampattern":
        active = [int(a) for a in args.active.split(",")] if args.active else None
        res = run_beampattern(cfg, cfg.mu, active=active, sensing=args.sensing_beam,
                              snr_db=args.at_snr)
        _emit(args, table_to_csv(["theta", "gain"], zip(res["theta"], res["gain"])))
        return EXIT_OK
    elif args.command == "apep":
        curve = run_apep_curve(cfg)
        _emit(args, table_to_csv(["snr_db", "apep"], curve))
        if args.json_out:
            write_text(args.json_out, json.dumps([{"snr_db": s, "apep": a} for s, a in curve],
                                                 indent=2) + "\n")
        return EXIT_OK
    else:
        report = validate(cfg, faults=tuple(args.inject_fault), seed=cfg.seed)
        _emit(args, format_report(report))
        return EXIT_OK if report["passed"] else EXIT_VALIDATION

    _emit(args, records_to_csv(records, include_timing=args.timing))
    if args.json_out:
        write_text(args.json_out, records_to_json(records, include_timing=args.timing))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (UsageError, ValueError, OSError, json.JSONDecodeError, TypeError) as exc:
        sys.stderr.write(f"bpm-isac: error: {exc}\n")
        return EXIT_USAGE
    except (BpmIsacError, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"bpm-isac: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
