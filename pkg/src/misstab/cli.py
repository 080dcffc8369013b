"""Command-line interface.

Subcommands: ``fit`` one mechanism model, ``compare`` every model,
``expected`` fitted counts, ``subtable`` restriction to fewer missing
variables, ``simulate`` synthetic draws.  Exit status 0 on success, 2
for a successful fit that hit a boundary, 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .estimators import BOUNDARY, FitResult, fit
from .inference import compare_models, g_squared
from .models import parse_model_text
from .simulate import params_from_json, simulate_table
from .table import _PATTERN_WORDS, IncompleteTable, Variable, load_table

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BOUNDARY = 2


def _pattern_name(pattern) -> str:
    return ",".join(_PATTERN_WORDS[r] for r in pattern)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _fit_json(table: IncompleteTable, result: FitResult) -> dict:
    gof = g_squared(table, result)
    doc = {
        "model": result.spec.to_text(table),
        "label": result.spec.label(table),
        "method": result.method,
        "boundary": result.method == BOUNDARY,
        "baseline": result.params.m.tolist(),
        "odds": {table.variables[var].name: vec.tolist()
                 for var, vec in result.params.odds.items()},
        "association": {
            ",".join(table.variables[i].name for i in key): value
            for key, value in list(result.params.pair.items())
            + list(result.params.higher.items())},
        "loglik": result.loglik,
        "g2": gof.g2,
        "df": gof.df,
        "p": gof.p,
        "expected": {_pattern_name(p): m.tolist()
                     for p, m in result.expected_margins().items()},
    }
    if result.boundary is not None:
        doc["boundary_detail"] = {
            "variable": table.variables[result.boundary.variable].name,
            "zero_levels": [lvl + 1 for lvl in result.boundary.zero_levels],
            "candidates": {
                ",".join(str(lvl + 1) for lvl in pins): g2
                for pins, g2 in result.boundary.candidates.items()},
        }
    return doc


def _fit_text(table: IncompleteTable, result: FitResult) -> str:
    gof = g_squared(table, result)
    lines = [f"model     {result.spec.to_text(table)}  "
             f"{result.spec.label(table)}",
             f"method    {result.method}",
             f"loglik    {result.loglik:.2f}",
             f"G2        {gof.g2:.2f}   df {gof.df}   p {gof.p:.2f}"]
    for var, vec in result.params.odds.items():
        values = "  ".join(f"{v:.4f}" for v in vec)
        lines.append(f"odds[{table.variables[var].name}]   {values}")
    for key, value in {**result.params.pair,
                       **result.params.higher}.items():
        names = ",".join(table.variables[i].name for i in key)
        lines.append(f"assoc[{names}]   {value:.4f}")
    lines.append("expected counts:")
    for pattern, margin in result.expected_margins().items():
        lines.append(f"  pattern {_pattern_name(pattern)}")
        for idx in np.ndindex(margin.shape if margin.ndim else (1,)):
            cell = margin[idx] if margin.ndim else float(margin)
            pos = ",".join(str(i + 1) for i in idx) if margin.ndim else "-"
            lines.append(f"    ({pos})  {cell:.2f}")
    return "\n".join(lines)


def cmd_fit(args) -> int:
    table = load_table(args.input)
    spec = parse_model_text(args.model, table)
    result = fit(table, spec)
    if args.format == "json":
        _emit(json.dumps(_fit_json(table, result), indent=2), args.output)
    else:
        _emit(_fit_text(table, result), args.output)
    return EXIT_BOUNDARY if result.method == BOUNDARY else EXIT_OK


def cmd_compare(args) -> int:
    table = load_table(args.input)
    report = compare_models(table)
    if args.format == "json":
        _emit(json.dumps(report.to_json(table), indent=2), args.output)
        return EXIT_OK
    lines = [f"{'model':24s} {'label':16s} {'G2':>9s} {'df':>3s} "
             f"{'p':>6s}  flags"]
    for row in report.rows:
        if row.error is not None:
            lines.append(f"{row.spec.to_text(table):24s} {row.label:16s} "
                         f"{'-':>9s} {'-':>3s} {'-':>6s}  "
                         f"error: {row.error}")
            continue
        flag = "boundary" if row.boundary else ""
        lines.append(f"{row.spec.to_text(table):24s} {row.label:16s} "
                     f"{row.g2:9.2f} {row.df:3d} {row.p:6.2f}  {flag}")
    if report.best is not None:
        lines.append(f"best: {report.best.to_text(table)}")
    _emit("\n".join(lines), args.output)
    return EXIT_OK


def cmd_expected(args) -> int:
    table = load_table(args.input)
    spec = parse_model_text(args.model, table)
    result = fit(table, spec)
    margins = result.expected_margins()
    if args.format == "json":
        doc = {_pattern_name(p): m.tolist() for p, m in margins.items()}
        _emit(json.dumps(doc, indent=2), args.output)
    else:
        lines = []
        for pattern, margin in margins.items():
            lines.append(f"pattern {_pattern_name(pattern)}")
            for idx in np.ndindex(margin.shape if margin.ndim else (1,)):
                cell = margin[idx] if margin.ndim else float(margin)
                pos = ",".join(str(i + 1) for i in idx) \
                    if margin.ndim else "-"
                lines.append(f"  ({pos})  {cell:.2f}")
        _emit("\n".join(lines), args.output)
    return EXIT_BOUNDARY if result.method == BOUNDARY else EXIT_OK


def cmd_subtable(args) -> int:
    table = load_table(args.input)
    keep = [name.strip() for name in args.keep.split(",") if name.strip()]
    sub = table.subtable(keep)
    _emit(sub.to_json(), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    with open(args.params) as fh:
        doc = json.load(fh)
    variables = tuple(Variable(v["name"], int(v["levels"]),
                               bool(v.get("missing", False)))
                      for v in doc["variables"])
    spec = parse_model_text(args.model, variables)
    params = params_from_json(variables, spec, doc)
    table = simulate_table(variables, spec, params, n=args.n, seed=args.seed)
    _emit(table.to_json(), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="misstab",
        description="Mechanism models for incomplete contingency tables")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False):
        p.add_argument("--input", required=True, help="table JSON/CSV path")
        if model:
            p.add_argument("--model", required=True,
                           help="mechanism per missing variable, e.g. "
                                "'Y1:self,Y2:Y3' (self=own level, "
                                "const=MCAR)")
        p.add_argument("--output", help="write the report here "
                                        "(default stdout)")
        p.add_argument("--format", choices=("json", "text"),
                       default="json")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--max-iter", type=int, default=10_000)

    common(sub.add_parser("fit", help="fit one model"), model=True)
    common(sub.add_parser("compare", help="fit and rank every model"))
    common(sub.add_parser("expected", help="fitted expected counts"),
           model=True)

    p_sub = sub.add_parser("subtable", help="restrict the missing set")
    p_sub.add_argument("--input", required=True)
    p_sub.add_argument("--keep", required=True,
                       help="comma-separated variables to keep "
                            "missing-capable")
    p_sub.add_argument("--output")

    p_sim = sub.add_parser("simulate", help="draw a synthetic table")
    p_sim.add_argument("--model", required=True)
    p_sim.add_argument("--params", required=True,
                       help="JSON with variables, baseline m, odds, "
                            "associations")
    p_sim.add_argument("--n", type=float, default=None,
                       help="rescale the expected grand total")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--output")
    p_sim.add_argument("--format", choices=("json", "text"),
                       default="json")
    return parser


_COMMANDS = {"fit": cmd_fit, "compare": cmd_compare,
             "expected": cmd_expected, "subtable": cmd_subtable,
             "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
