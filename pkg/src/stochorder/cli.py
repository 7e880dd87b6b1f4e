"""Command-line front door.

Usage::

    python -m stochorder compare 'gamma(3,1.5)' 'gconv(1:1, 2:2)' --orders st,hr,lr,rh
    python -m stochorder threshold 'nbconv(1:0.3, 2:0.6)'
    python -m stochorder curves 'gamma(1,1)' 'gconv(1:1, 1:2)' --output curves.csv
    python -m stochorder presets

``compare`` exits 0 when every requested order holds, 1 when one fails, 2 on usage, parse or
support errors and 3 when a closed-form criterion disagrees with the oracle.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .errors import SpecParseError, StochOrderError, SupportError
from .services.data_store import get_preset, iter_presets
from .services.reports import (
    EXIT_HOLDS,
    EXIT_USAGE,
    compare,
    curve_columns,
    curve_rows,
    format_cell,
    parse_orders,
    resolve_grid,
    threshold_table,
    to_jsonable,
)
from .services.spec_parser import build, parse_dist_spec

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="log to stderr (-vv for debug)")
    common.add_argument("--output", type=Path, help="write to this file instead of standard output")

    grids = argparse.ArgumentParser(add_help=False)
    grids.add_argument("--grid-points", type=int, help="points on the continuous check grid")
    grids.add_argument("--grid", type=_float_list, help="explicit comma-separated grid points")
    grids.add_argument("--tail-tol", type=float, help="truncation tail mass for discrete tables")

    parser = argparse.ArgumentParser(prog="stochorder", description="Decide stochastic orders between distributions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    compare_cmd = commands.add_parser("compare", parents=[common, grids], help="check orders between X and Y")
    compare_cmd.add_argument("x", nargs="?", help="distribution expression for X")
    compare_cmd.add_argument("y", nargs="?", help="distribution expression for Y")
    compare_cmd.add_argument("--preset", help="take X, Y and the orders from a named preset")
    compare_cmd.add_argument("--orders", help="comma-separated subset of st,hr,rh,lr,lc,disp,star")
    compare_cmd.add_argument("--tol", type=float, help="violation tolerance")
    compare_cmd.add_argument("--seed", type=int, help="accepted for symmetry with threshold; compare is deterministic")
    compare_cmd.add_argument("--format", choices=("json", "csv"), default="json")
    compare_cmd.set_defaults(handler=cmd_compare)

    threshold_cmd = commands.add_parser("threshold", parents=[common], help="closed-form thresholds of a convolution")
    threshold_cmd.add_argument("spec", help="a gconv, nbconv or pbin expression")
    threshold_cmd.add_argument("--monte-carlo", type=int, metavar="DRAWS", help="also estimate the Dirichlet moments")
    threshold_cmd.add_argument("--seed", type=int, help="seed for --monte-carlo")
    threshold_cmd.add_argument("--format", choices=("json", "csv"), default="json")
    threshold_cmd.set_defaults(handler=cmd_threshold)

    curves_cmd = commands.add_parser("curves", parents=[common, grids], help="write pdf/cdf/hazard curves as CSV")
    curves_cmd.add_argument("x")
    curves_cmd.add_argument("y")
    curves_cmd.set_defaults(handler=cmd_curves)

    presets_cmd = commands.add_parser("presets", parents=[common], help="list the bundled comparisons")
    presets_cmd.set_defaults(handler=cmd_presets)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except (StochOrderError, OSError) as exc:
        print(f"stochorder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def cmd_compare(args: argparse.Namespace) -> int:
    x_text, y_text, orders_text = args.x, args.y, args.orders
    if args.preset:
        preset = get_preset(args.preset)
        x_text = x_text or preset["x"]
        y_text = y_text or preset["y"]
        orders_text = orders_text or preset.get("orders")
    if not x_text or not y_text:
        raise SpecParseError("compare needs X and Y expressions (or --preset)")

    report = compare(
        parse_dist_spec(x_text),
        parse_dist_spec(y_text),
        orders=parse_orders(orders_text),
        tol=args.tol,
        grid_points=args.grid_points,
        tail_tol=args.tail_tol,
        grid_values=args.grid,
    )
    if args.format == "csv":
        rows = report.rows()
        _emit(_csv_text(list(rows[0]), [list(row.values()) for row in rows]), args.output)
    else:
        _emit(_json_text(report.to_dict()), args.output)
    return report.exit_code


def cmd_threshold(args: argparse.Namespace) -> int:
    document = threshold_table(parse_dist_spec(args.spec), monte_carlo=args.monte_carlo, seed=args.seed)
    if args.format == "csv":
        rows: list[dict[str, Any]] = document["thresholds"]  # type: ignore[assignment]
        header = list(dict.fromkeys(key for row in rows for key in row))
        _emit(_csv_text(header, [[row.get(key) for key in header] for row in rows]), args.output)
    else:
        _emit(_json_text(document), args.output)
    return EXIT_HOLDS


def cmd_curves(args: argparse.Namespace) -> int:
    X = build(parse_dist_spec(args.x), tail_tol=args.tail_tol)
    Y = build(parse_dist_spec(args.y), tail_tol=args.tail_tol)
    if X.kind != Y.kind:
        raise SupportError(f"cannot draw {X.kind} {X.label} against {Y.kind} {Y.label}")
    grid = resolve_grid(X, Y, args.grid, args.grid_points)
    rows = curve_rows(X, Y, grid)
    logger.info("writing %d curve rows for %s vs %s", len(rows), X.label, Y.label)
    _emit(_csv_text(curve_columns(X, Y), rows), args.output)
    return EXIT_HOLDS


def cmd_presets(args: argparse.Namespace) -> int:
    _emit(_json_text({"presets": list(iter_presets())}), args.output)
    return EXIT_HOLDS


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _configure_logging(verbosity: int) -> None:
    if verbosity <= 0:
        return
    level = logging.DEBUG if verbosity > 1 else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _json_text(document: dict[str, Any]) -> str:
    return json.dumps(to_jsonable(document), indent=2) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    output.write_text(text, encoding="utf-8")
