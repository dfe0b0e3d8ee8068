"""Command line entry point: ``gsvd-noma <subcommand> ...``.

Exit status is 0 on success, 2 on a configuration error and 3 on a
numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .asymptotic import SWEEP_COLUMNS, asymptotic_sweep
from .channel import SystemConfig, load_config, parse_overrides
from .errors import ConfigError, NumericalError
from .sim import (
    EXTENDED_COLUMNS,
    POINT_COLUMNS,
    PRESETS,
    aggregate_row,
    format_csv,
    preset,
    run_experiment,
    run_monte_carlo,
)
from .spectral import law_table, limiting_law

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_EPILOG = f"""\
CSV column orders:
  run         {",".join(POINT_COLUMNS)}[,{",".join(EXTENDED_COLUMNS)}]
  preset      <sweep>,{",".join(POINT_COLUMNS)}[,extended...]
  preset fig8 p_dbm,pairing,sum,sum_se,oma_sum
  law         x,pdf,cdf
  asymptotic  {",".join(SWEEP_COLUMNS)}
Every CSV starts with a '# generated <UTC time>' line unless --no-timestamp
is given.  GSVD_NOMA_WORKERS sets the default worker count.
"""


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the '# generated' header line")


def _add_mc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--workers", type=int, help="worker processes (default: $GSVD_NOMA_WORKERS or 1)")
    p.add_argument("--t-sq", choices=("theoretical", "empirical"), default="theoretical",
                   help="power normalization t^2 used in the rates")
    p.add_argument("--extended", action="store_true", help="append standard errors and counts")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsvd-noma",
        description="GSVD-based MIMO-NOMA rate simulations and closed forms.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte Carlo at one configuration point")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--baselines", default="oma_tdma",
                   help="comma list from {oma_tdma, asymptotic}; empty for none")
    _add_mc(p)
    _add_output(p)

    p = sub.add_parser("preset", help="sweep one of the named experiment setups")
    p.add_argument("name", choices=PRESETS)
    _add_mc(p)
    _add_output(p)

    p = sub.add_parser("law", help="dump the limiting law of w^2 on a grid")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, default=201, help="grid points (default 201)")
    _add_output(p)

    p = sub.add_parser("asymptotic", help="closed-form normalized rates over a sweep")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--sweep", required=True, metavar="FIELD=V1,V2,...",
                   help="config field and comma separated values, e.g. p_dbm=10,20,30")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    _add_output(p)
    return parser


def _mc_overrides(args) -> dict:
    changes = parse_overrides(args.overrides)
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    return changes


def _parse_sweep(text: str):
    field, sep, raw = text.partition("=")
    if not sep or not raw:
        raise ConfigError(f"--sweep expects FIELD=V1,V2,..., got {text!r}")
    values = [parse_overrides([f"{field}={v}"])[field.strip()] for v in raw.split(",")]
    return field.strip(), values


def _cmd_run(args):
    cfg = load_config(args.config, **_mc_overrides(args))
    baselines = tuple(b for b in (s.strip() for s in args.baselines.split(",")) if b)
    res = run_monte_carlo(cfg, baselines, workers=args.workers, t_sq_mode=args.t_sq)
    columns = [*POINT_COLUMNS, *(EXTENDED_COLUMNS if args.extended else ())]
    return columns, [aggregate_row(res)]


def _cmd_preset(args):
    spec = preset(args.name)
    changes = _mc_overrides(args)
    if changes:
        spec = type(spec)(**{**spec.__dict__, "cfg": spec.cfg.replace(**changes)})
    return run_experiment(spec, workers=args.workers, t_sq_mode=args.t_sq, extended=args.extended)


def _cmd_law(args):
    SystemConfig(m=args.m, n=args.n)  # same validation as every other entry point
    xs, pdf, cdf = law_table(limiting_law(args.m, args.n), args.grid)
    rows = [{"x": float(a), "pdf": float(b), "cdf": float(c)} for a, b, c in zip(xs, pdf, cdf)]
    return ["x", "pdf", "cdf"], rows


def _cmd_asymptotic(args):
    field, values = _parse_sweep(args.sweep)
    changes = parse_overrides(args.overrides)
    if args.config:
        cfg = load_config(args.config, **changes)
    else:
        if "m" not in changes or "n" not in changes:
            raise ConfigError("asymptotic needs --config or both --set m=... and --set n=...")
        cfg = SystemConfig(**changes)
    rows = asymptotic_sweep(cfg, field, values)
    return list(SWEEP_COLUMNS), rows


_COMMANDS = {"run": _cmd_run, "preset": _cmd_preset, "law": _cmd_law, "asymptotic": _cmd_asymptotic}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        columns, rows = _COMMANDS[args.command](args)
        text = format_csv(columns, rows, timestamp=not args.no_timestamp)
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
