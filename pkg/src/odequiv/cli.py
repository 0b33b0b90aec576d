"""Command-line front end: solve, signature, verify, table-check.

Exit codes are a published contract:

    0  success (>= 1 verified match / equality verified)
    1  verification returned false
    2  input error (parse failure, missing file)
    3  no match in the table
    4  the transformation is not rationally invertible
    5  table inconsistency
"""

from __future__ import annotations

import argparse
import os
import sys

from .exprcore import ExprError
from .odeparse import parse_ode, parse_expr, print_expr, OdeSyntaxError
from .symmetry import signature, CompletionDiverged
from . import engine
from .engine import (
    newdsolve, pushforward, load_table, default_table_path, split_branches,
    source_to_bar, NotInvertible, TableSyntaxError,
)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_INPUT = 2
EXIT_NO_MATCH = 3
EXIT_NOT_INVERTIBLE = 4
EXIT_TABLE = 5


def _table_path(args):
    if args.table:
        return args.table
    env = os.environ.get("ODEQ_TABLE")
    if env:
        return env
    return default_table_path()


def _load(args):
    path = _table_path(args)
    try:
        entries, problems = load_table(path, check=False)
    except FileNotFoundError:
        print(f"table file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    except TableSyntaxError as err:
        print(f"table error: {err}", file=sys.stderr)
        raise SystemExit(EXIT_TABLE)
    return entries


def _parse_ode_or_exit(text):
    try:
        return parse_ode(text)
    except OdeSyntaxError as err:
        print(f"parse error: {err}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _branch_lines(entry_id, entry_name, branch, machine):
    lines = []
    if machine:
        lines.append(f"entry={entry_id}")
    else:
        lines.append(f"entry {entry_id} ({entry_name})")
    names = {"xb": "xbar", "yb": "ybar", "pb": "pbar"}
    for rel in branch.relations.relations:
        leader = rel.leader
        surface = leader.display()
        if leader in branch.explicit:
            value = print_expr(branch.explicit[leader])
            if machine:
                lines.append(f"{names[surface]}={value}")
            else:
                lines.append(f"  {names[surface]} = {value}")
        else:
            rel_m = rel.monic()
            rhs = None
            d = rel_m.degree
            from .exprcore import Expr, ZERO
            acc = ZERO
            for i, c in enumerate(rel_m.coeffs[1:], start=1):
                acc = acc - c * Expr.var(leader) ** (d - i)
            text = f"{surface}^{d} = {print_expr(acc)}"
            if machine:
                lines.append(f"relation={text}")
            else:
                lines.append(f"  {text}")
    lines.append("verified=true" if machine else "  verified")
    return lines


def cmd_solve(args):
    ode = _parse_ode_or_exit(args.ode)
    entries = _load(args)
    try:
        hits = newdsolve(ode.rhs, entries)
    except CompletionDiverged as err:
        print(f"signature computation diverged: {err}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    if not hits:
        print("no signature match in table", file=sys.stderr)
        return EXIT_NO_MATCH
    machine = args.format == "machine"
    shown = hits if args.all_branches else hits[:1]
    out = []
    for entry_id, branch in shown:
        entry = next(e for e in entries if e.id == entry_id)
        out.extend(_branch_lines(entry_id, entry.name, branch, machine))
    print("\n".join(out))
    return EXIT_OK


def cmd_signature(args):
    ode = _parse_ode_or_exit(args.ode)
    try:
        sig = signature(ode.rhs)
    except CompletionDiverged as err:
        print(f"signature computation diverged: {err}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    print(sig.as_string())
    return EXIT_OK


def cmd_verify(args):
    ode = _parse_ode_or_exit(args.ode)
    target = _parse_ode_or_exit(args.target)
    try:
        xi = parse_expr(args.xi)
        eta = parse_expr(args.eta)
    except OdeSyntaxError as err:
        print(f"parse error: {err}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    try:
        fbar = pushforward(ode.rhs, xi, eta)
    except NotInvertible as err:
        print(f"not invertible: {err}", file=sys.stderr)
        raise SystemExit(EXIT_NOT_INVERTIBLE)
    expected = source_to_bar(target.rhs)
    if fbar == expected:
        print("verified=true" if args.format == "machine" else "verified")
        return EXIT_OK
    if args.format == "machine":
        print("verified=false")
        print(f"pushforward={print_expr(fbar)}")
    else:
        print("not verified: transformation maps the equation to")
        print(f"  ybar'' = {print_expr(fbar)}")
    return EXIT_FALSE


def cmd_table_check(args):
    path = _table_path(args)
    try:
        entries, problems = load_table(path, check=True)
    except FileNotFoundError:
        print(f"table file not found: {path}", file=sys.stderr)
        return EXIT_INPUT
    except TableSyntaxError as err:
        print(f"table error: {err}", file=sys.stderr)
        return EXIT_TABLE
    for entry in entries:
        status = "INCONSISTENT" if entry.id in problems else "ok"
        print(f"{entry.id}: {status}")
        for reason in problems.get(entry.id, ()):
            print(f"  {reason}")
    return EXIT_TABLE if problems else EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="odequiv",
        description="Match a second-order ODE against a table of target "
                    "equations and return a verified change of coordinates.")
    parser.add_argument("--table", help="path to a target table file "
                        "(default: bundled table, or $ODEQ_TABLE)")
    parser.add_argument("--format", choices=("human", "machine"),
                        default="human", help="output mode")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find an equivalent target equation")
    p.add_argument("ode", help="the equation, e.g. \"y'' = 6*y^2 + x\"")
    p.add_argument("--all-branches", action="store_true",
                   help="report every verified target, not just the first")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("signature", help="print the symmetry signature")
    p.add_argument("ode")
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("verify", help="check a claimed change of coordinates")
    p.add_argument("ode", help="source equation")
    p.add_argument("xi", help="xbar as an expression in x, y")
    p.add_argument("eta", help="ybar as an expression in x, y")
    p.add_argument("target", help="target equation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table-check", help="validate a table file")
    p.set_defaults(func=cmd_table_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExprError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
