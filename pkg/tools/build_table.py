"""Regenerate the bundled target table from the solver's own machinery.

Signatures come from the symmetry module, necessary forms from
chgt_coords; nothing in the data file is hand-typed.  Run from the
repository root:

    python3 tools/build_table.py

The script cross-checks every entry (load-time consistency plus
self-specialization) before writing src/odequiv/data/targets.table.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from odequiv.exprcore import Expr, ONE, token_var
from odequiv.odeparse import parse_expr, print_expr
from odequiv.symmetry import signature
from odequiv.engine import (
    TargetEntry, chgt_coords, specialize_entry, verify, save_table, parse_table,
    check_entry, split_branches,
)


def tok(name):
    return Expr.var(token_var(name))


def build_entries():
    entries = []

    # Painleve I: signature-only regression; the shift x -> 1/x sends
    # y'' = 6y^2 + x to y'' = -(2x^4 y' - 6y^2 x - 1)/x^5 (note the overall
    # sign), and no invariant frame for unrestricted point transformations
    # is shipped, so no necessary form is stored.
    f3 = parse_expr("6*y^2 + x")
    entries.append(TargetEntry(
        "kamke-3", "Painleve I", f3, signature(f3), "phi7"))

    f8 = parse_expr("y^3 + x*y")
    k1 = tok("I1_233") / tok("I1_31")
    k2 = tok("I1_234") / tok("I1_31")
    k3 = tok("I1_31") ** 2 / tok("I1_231")
    form8 = chgt_coords(f8, "phi3", [k1, k2, k3], 2)
    entries.append(TargetEntry(
        "kamke-8", "y'' = y^3 + x*y", f8, signature(f8), "phi3", 2,
        (), form8, (k1, k2, k3)))

    f11 = parse_expr("1/(x*y^2)")
    inv11 = (tok("I1"), tok("I1_3"), tok("I1_33"))
    form11 = chgt_coords(f11, "phi3", list(inv11), 3)
    entries.append(TargetEntry(
        "kamke-11", "Emden-Fowler y'' = 1/(x*y^2)", f11, signature(f11),
        "phi3", 3, (), form11, inv11))

    f72 = parse_expr("-y'^4 - y")
    norm72 = [(tok("I2") / tok("I2_1"), ONE)]
    inv72 = (tok("X"), tok("I1"), tok("I2_1"))
    form72 = chgt_coords(f72, "phi1", list(inv72), 3, normalizations=norm72)
    entries.append(TargetEntry(
        "kamke-72", "Rayleigh y'' + y'^4 + y = 0", f72, signature(f72),
        "phi1", 3, norm72, form72, inv72))

    fx1 = parse_expr("y'/x + 4*y^2/x^3")
    norm_x1 = [(tok("I1_23"), Expr.const(-20))]
    inv_x1 = (tok("I1"), tok("I1_3"), tok("I1_31"))
    form_x1 = chgt_coords(fx1, "phi3", list(inv_x1), 1, normalizations=norm_x1)
    entries.append(TargetEntry(
        "extra-1", "y'' = y'/x + 4*y^2/x^3", fx1, signature(fx1),
        "phi3", 1, norm_x1, form_x1, inv_x1))

    fx2 = parse_expr("y^3")
    inv_x2 = (tok("X"), tok("I1"), tok("I1_3"))
    form_x2 = chgt_coords(fx2, "phi1", list(inv_x2), 2)
    entries.append(TargetEntry(
        "extra-2", "y'' = y^3", fx2, signature(fx2), "phi1", 2,
        (), form_x2, inv_x2))

    return entries


def main():
    entries = build_entries()
    for entry in entries:
        problems = check_entry(entry)
        if problems:
            raise SystemExit(f"{entry.id}: " + "; ".join(problems))
        if entry.necessary_form is None:
            print(f"{entry.id}: signature {entry.signature.as_string()} (signature-only)")
            continue
        branch = specialize_entry(entry, entry.rhs)
        if not verify(entry.rhs, branch, entry):
            raise SystemExit(f"{entry.id}: self-specialization fails to verify")
        n_branches = sum(b.degree() for b in split_branches(branch))
        print(f"{entry.id}: signature {entry.signature.as_string()}, "
              f"deg {entry.necessary_form.degree()}, self-branches {n_branches}")

    text = save_table(entries)
    reparsed = parse_table(text)
    assert save_table(reparsed) == text, "table does not round-trip"
    out = pathlib.Path(__file__).resolve().parents[1] / "src/odequiv/data/targets.table"
    header = ("# odequiv bundled target table.\n"
              "# Generated by tools/build_table.py; do not edit by hand.\n\n")
    out.write_text(header + text, encoding="utf-8")
    print(f"wrote {out} ({len(entries)} entries)")


if __name__ == "__main__":
    main()
