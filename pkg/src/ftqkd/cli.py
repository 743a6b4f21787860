"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
Errors go to stderr as a single line starting with ``ftqkd: error:``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from typing import Iterable, Sequence

from . import analytics
from .config import ConfigError, load_config
from .model import spectral_resolution
from .protocol import ProtocolStats, default_workers, run_session

ERROR_PREFIX = "ftqkd: error:"
SWEEP_COLUMNS = ("jitter_ps", "delta", "qber_bound", "qber_exact", "key_rate")
STATS_COLUMNS = tuple(ProtocolStats.__dataclass_fields__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".9g")
    return str(value)


def write_csv(rows: Iterable[dict], columns: Sequence[str], destination="-") -> None:
    """Write ``rows`` with a header in ``columns`` order; ``"-"`` means stdout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if set(row) != set(columns):
            raise ValueError(f"row keys {sorted(row)} do not match columns {list(columns)}")
        writer.writerow([format_value(row[c]) for c in columns])
    if destination == "-":
        sys.stdout.write(buf.getvalue())
        sys.stdout.flush()
    elif hasattr(destination, "write"):
        destination.write(buf.getvalue())
    else:
        with open(destination, "w", newline="") as fh:
            fh.write(buf.getvalue())


def parse_jitters(text: str) -> list[float]:
    """``start:stop:step`` (stop included when aligned) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9))
            return [start + i * step for i in range(n + 1)]
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--jitter: cannot parse {text!r} (use start:stop:step or a,b,c)") from None
    if any(v < 0 for v in values):
        raise UsageError("--jitter: values must be >= 0")
    return values


def _add_session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--pairs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jitter", type=float, help="detector jitter for both parties (ps)")
    p.add_argument("--efficiency", type=float, help="detector efficiency for both parties")
    p.add_argument("--dispersion", type=float, help="dispersion magnitude (ps/nm)")
    p.add_argument("--wavelength", type=float, help="center wavelength (nm)")
    p.add_argument("--f", dest="f_ec", type=float, help="error-correction efficiency")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config field by dotted path, value parsed as JSON")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $FTQKD_WORKERS or 1)")
    p.add_argument("--out", default="-")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftqkd", description="Entanglement-based frequency-time QKD simulator.")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="analytic QBER and key rate versus detector jitter")
    s.add_argument("--jitter", default="10:100:10")
    s.add_argument("--dispersion", type=float, default=7000.0)
    s.add_argument("--wavelength", type=float, default=1550.0)
    s.add_argument("--f", dest="f_ec", type=float, default=analytics.DEFAULT_F_EC)
    s.add_argument("--gain", type=float, default=1.0)
    s.add_argument("--delta-scale", type=float, default=analytics.DEFAULT_DELTA_SCALE)
    s.add_argument("--out", default="-")

    _add_session_args(sub.add_parser("simulate", help="Monte Carlo session"))
    a = sub.add_parser("attack", help="Monte Carlo session with an intercept-resend eavesdropper")
    _add_session_args(a)
    a.add_argument("--eve-policy", choices=["time", "frequency", "random"], default=None)
    a.add_argument("--eve-jitter", type=float, default=None)
    a.add_argument("--intercept-fraction", type=float, default=None)

    t = sub.add_parser("threshold", help="QBER at which the key rate reaches zero")
    t.add_argument("--f", dest="f_ec", type=float, default=analytics.DEFAULT_F_EC)

    r = sub.add_parser("resolution", help="wavelength resolution of the dispersive measurement")
    r.add_argument("--time-res", type=float, default=50.0)
    r.add_argument("--dispersion", type=float, default=7000.0)
    return parser


def _session_overrides(args) -> dict:
    overrides = {}
    if args.pairs is not None:
        overrides["pairs"] = args.pairs
    if args.seed is not None:
        overrides["seed"] = args.seed
    for party in ("alice", "bob"):
        if args.jitter is not None:
            overrides[f"detectors.{party}.jitter_sigma"] = args.jitter
        if args.efficiency is not None:
            overrides[f"detectors.{party}.efficiency"] = args.efficiency
    if args.dispersion is not None:
        overrides["paths.dispersion_ps_per_nm"] = args.dispersion
    if args.wavelength is not None:
        overrides["paths.wavelength_nm"] = args.wavelength
    if args.f_ec is not None:
        overrides["f_ec"] = args.f_ec
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    if args.cmd == "attack":
        overrides["eve.mode"] = "intercept-resend"
        if args.eve_policy is not None:
            overrides["eve.measure_basis_policy"] = args.eve_policy
        if args.eve_jitter is not None:
            overrides["eve.eve_jitter_sigma"] = args.eve_jitter
        if args.intercept_fraction is not None:
            overrides["eve.intercept_fraction"] = args.intercept_fraction
    return overrides


def _reported(row: dict) -> dict:
    row = dict(row)
    row["key_rate"] = max(row["key_rate"], 0.0)
    return row


def _dispatch(args) -> None:
    if args.cmd == "sweep":
        points = analytics.jitter_sweep(parse_jitters(args.jitter), args.dispersion, args.wavelength,
                                        f=args.f_ec, gain=args.gain, delta_scale=args.delta_scale)
        rows = []
        for p in points:
            row = asdict(p)
            row["jitter_ps"] = row.pop("jitter_sigma")
            rows.append(_reported(row))
        write_csv(rows, SWEEP_COLUMNS, args.out)
        threshold = analytics.security_threshold(args.f_ec)
        print(f"# security_threshold(f={args.f_ec:g}) = {format_value(threshold)}", file=sys.stderr)
    elif args.cmd in ("simulate", "attack"):
        config = load_config(args.config, _session_overrides(args))
        workers = default_workers() if args.workers is None else args.workers
        if workers < 1:
            raise UsageError("--workers must be >= 1")
        stats = run_session(config, workers=workers)
        write_csv([_reported(stats.as_row())], STATS_COLUMNS, args.out)
    elif args.cmd == "threshold":
        print(format_value(analytics.security_threshold(args.f_ec)))
    elif args.cmd == "resolution":
        print(f"{format_value(spectral_resolution(args.time_res, args.dispersion))} nm")


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        _dispatch(args)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"{ERROR_PREFIX} {exc}".replace("\n", " "), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"{ERROR_PREFIX} {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())
