"""Command-line entry point: ``twoway-cvqkd <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import sweep as sw
from . import temporal_modes as tm
from . import validation
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    CVQKDError,
    InvalidArgumentError,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--protocol", choices=sw.PROTOCOLS, help="override the configured protocol")
    p.add_argument("--length-km", type=float, help="override params.length_km")
    p.add_argument("--excess-noise", type=float, help="override params.excess_noise")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twoway-cvqkd", description="Finite-size key rates of two-way and one-way CV-QKD.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="key-rate breakdown at one operating point")
    _common(p)

    p = sub.add_parser("sweep", help="evaluate the configured sweep and write rows")
    _common(p)
    p.add_argument("--out", help="output path (default: output.path, else stdout)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("max-distance", help="largest distance with a positive key rate")
    _common(p)

    p = sub.add_parser("max-noise", help="largest tolerable excess noise at one distance")
    _common(p)

    p = sub.add_parser("eta", help="mode-matching coefficients from waveform files")
    p.add_argument("files", nargs="*", help="two files: prints their overlap")
    p.add_argument("--xi-a")
    p.add_argument("--xi-b")
    p.add_argument("--rx-a")
    p.add_argument("--rx-b")

    p = sub.add_parser("validate", help="Monte-Carlo coverage and invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--jobs", type=int, default=1)
    return ap


def _config(args) -> sw.SweepConfig:
    if args.config:
        cfg = sw.load_config(args.config)
        if args.protocol:
            cfg = replace(cfg, protocol=args.protocol)
    elif args.protocol:
        cfg = sw.SweepConfig(protocol=args.protocol)
    else:
        raise ConfigValidationError("protocol", "give --config or --protocol")
    if args.length_km is not None:
        cfg = sw.with_value(cfg, "length_km", args.length_km)
    if args.excess_noise is not None:
        cfg = sw.with_value(cfg, "excess_noise", args.excess_noise)
    return cfg


def _rate(args, out):
    b = sw.evaluate(_config(args))
    for k, v in b.as_dict().items():
        out.write(f"{k} = {v!r}\n")


def _sweep(args, out):
    cfg = _config(args)
    rows = sw.sweep(cfg, jobs=args.jobs)
    path = args.out or cfg.output_path
    if path:
        sw.emit(rows, cfg, path)
    else:
        out.write(",".join((cfg.sweep.variable,) + sw.RESULT_COLUMNS) + "\n")
        for r in rows:
            out.write(",".join(sw._fmt(getattr(r, c)) for c in ("value",) + sw.RESULT_COLUMNS) + "\n")


def _max_distance(args, out):
    out.write(f"{sw.find_max_distance(_config(args)):.4f}\n")


def _max_noise(args, out):
    cfg = _config(args)
    out.write(f"{sw.find_max_noise(cfg, cfg.params.length_km):.6f}\n")


def _eta(args, out):
    four = [args.xi_a, args.xi_b, args.rx_a, args.rx_b]
    if any(four):
        if not all(four) or args.files:
            raise InvalidArgumentError("give all of --xi-a --xi-b --rx-a --rx-b")
        mm = tm.mode_match_matrix(*(tm.read_waveform(f) for f in four))
        for n in ("aa", "ab", "ba", "bb"):
            out.write(f"eta_{n} = {getattr(mm, n)!r}\n")
        return
    if len(args.files) != 2:
        raise InvalidArgumentError("eta needs exactly two waveform files")
    a, b = (tm.read_waveform(f) for f in args.files)
    out.write(f"{tm.mode_match(a, b)!r}\n")


def _validate(args, out):
    checks = validation.run_all(seed=args.seed, trials=args.trials, jobs=args.jobs)
    for c in checks:
        out.write(c.line() + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC


COMMANDS = {
    "rate": _rate,
    "sweep": _sweep,
    "max-distance": _max_distance,
    "max-noise": _max_noise,
    "eta": _eta,
    "validate": _validate,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = COMMANDS[args.command](args, out)
    except (ConfigParseError, ConfigValidationError, InvalidArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CVQKDError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
