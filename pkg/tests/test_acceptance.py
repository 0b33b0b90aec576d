"""Acceptance criteria, one test per criterion (all symbolic, all exact).

Run with `pytest -s tests/test_acceptance.py` to see one PASS line per
criterion.
"""

import random
import time
from fractions import Fraction

import pytest

from odequiv import cli
from odequiv.exprcore import (
    Expr, ZERO, ONE, X, Y, P, A, XB, YB, PB, token_var,
    PoleAtPoint, expr_from_poly,
)
from odequiv.odeparse import parse_expr, print_expr, parse_ode
from odequiv.diffalg import (
    Relation, TriangularSet, ranking_necessary_form, dim_and_deg,
    ritt_full_reduce, degree_reduce,
)
from odequiv.groupoids import GROUPOID_IDS, prolong, defining_system
from odequiv.symmetry import signature, matches
from odequiv.cartan import specialize, normalize_parameter, token_derivation
from odequiv.engine import (
    chgt_coords, specialize_entry, split_branches, pushforward, compose,
    verify, newdsolve, NoCandidate, source_to_bar, bar_to_source,
)
from odequiv.exprcore import total_derivative_Dx

x, y, p = Expr.var(X), Expr.var(Y), Expr.var(P)
xb, yb, pb = Expr.var(XB), Expr.var(YB), Expr.var(PB)
tok = lambda s: Expr.var(token_var(s))

EQ1 = parse_expr("-y^3*y'^4 - y'^2/y - (1/2)*y")
RAYLEIGH = parse_expr("-y'^4 - y")
EMDEN = parse_expr("1/(x*y^2)")


def report(n, label):
    print(f"ACCEPTANCE {n}: PASS  ({label})")


def _entry(table, entry_id):
    return next(e for e in table if e.id == entry_id)


def test_acceptance_01_rayleigh_end_to_end(capsys, checked_table):
    t0 = time.time()
    code = cli.main(["--format", "machine", "solve",
                     "y'' = -y^3*y'^4 - y'^2/y - (1/2)*y"])
    elapsed = time.time() - t0
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert "entry=kamke-72" in out
    assert "xbar=x" in out
    assert "ybar=1/2*y^2" in out
    assert "verified=true" in out
    assert elapsed < 10.0, f"solve took {elapsed:.1f}s"
    # and the branch is exact symbolically, not just printed
    branch = dict(newdsolve(EQ1, checked_table))["kamke-72"]
    assert branch.explicit[XB] == x and branch.explicit[YB] == y ** 2 / 2
    with capsys.disabled():
        report(1, f"solve returns kamke-72 with ybar = y^2/2 in {elapsed:.2f}s")


def test_acceptance_02_pushforward_identities(capsys):
    assert pushforward(EQ1, x, y ** 2 / 2) == -pb ** 4 - yb
    f2 = parse_expr("(6*y^4 + x - 2*y'^2)/(2*y)")
    assert pushforward(f2, x, y ** 2) == 6 * yb ** 2 + xb
    with capsys.disabled():
        report(2, "both pushforward identities hold exactly")


def test_acceptance_03_emden_self_equivalence(capsys, checked_table):
    entry = _entry(checked_table, "kamke-11")
    branch = specialize_entry(entry, entry.rhs)
    assert not isinstance(branch, NoCandidate)
    expected = TriangularSet([
        Relation.from_expr(xb - x, XB),
        Relation.from_expr(yb ** 3 - y ** 3, YB),
        Relation.from_expr(pb - yb * p / y, PB),
    ], ranking_necessary_form())
    assert branch.relations.same_relations(expected)
    assert dim_and_deg(branch.relations, {XB, YB, PB}) == (0, 3)
    with capsys.disabled():
        report(3, "self-specialization is exactly {pb = yb*p/y, yb^3 = y^3, xb = x}")


def test_acceptance_04_degree_one_necessary_form(capsys):
    f = parse_expr("y'/x + 4*y^2/x^3")
    C = chgt_coords(f, "phi3", [tok("I1"), tok("I1_3"), tok("I1_31")], 1,
                    normalizations=[(tok("I1_23"), Expr.const(-20))])
    assert dim_and_deg(C, {XB, YB, PB}) == (0, 1)
    assert C.relation_for(XB).solved() == tok("I1_31") / 8
    assert specialize("I1_31", f) == 8 / (Expr.var(A) * x ** 3)
    aval = normalize_parameter((tok("I1_23"), Expr.const(-20)), f)
    assert aval == 1 / x ** 4
    with capsys.disabled():
        report(4, "xb = (1/8)*I1_31 with I1_31 = 8/(a*x^3), a = 1/x^4")


def test_acceptance_05_degree_reduction_heuristic(capsys):
    I1t, I13, I133 = tok("I1"), tok("I1_3"), tok("I1_33")
    D = 9 * I1t ** 3 - 8 * I13 ** 2 + 6 * I133 * I1t
    K = I1t / D
    A_c = 4 * I13 * K
    B_c = 8 * I1t * K
    C = TriangularSet(
        [Relation.from_expr((xb ** 2 - A_c * xb - B_c), XB)],
        ranking_necessary_form())
    reduced = degree_reduce(C, XB, [token_derivation(1)])
    rel = reduced.relation_for(XB)
    assert rel.degree == 1
    I11, I131, I1331 = tok("I1_1"), tok("I1_31"), tok("I1_331")
    D1 = 27 * I1t ** 2 * I11 - 16 * I13 * I131 + 6 * (I1331 * I1t + I133 * I11)
    K1 = (I11 * D - I1t * D1) / D ** 2
    expected = -2 * (K * I11 + I1t * K1) / (K * I131 + I13 * K1)
    assert rel.solved() == expected
    with capsys.disabled():
        report(5, "the invariant derivation lowers the quadratic to the printed line")


def test_acceptance_06_quadratic_entry_branches(capsys, checked_table):
    entry = _entry(checked_table, "kamke-8")
    assert entry.necessary_form.degree() == 2
    branch = specialize_entry(entry, entry.rhs)
    branches = split_branches(branch)
    assert {b.explicit[YB] for b in branches} == {y, -y}
    for b in branches:
        assert verify(entry.rhs, b, entry)
    with capsys.disabled():
        report(6, "y'' = y^3 + x*y self-branches are exactly ybar = y and ybar = -y")


def test_acceptance_07_signatures(capsys, checked_table):
    assert signature(RAYLEIGH).as_string() == "((0,1,1),(1,1,1),1)"
    assert signature(parse_expr("6*y^2 + x")).d7 == 0
    for entry in checked_table:
        d1, d2, d3, d4, d5, d6, d7 = entry.signature.d
        assert d1 <= d3 <= d5 <= d7 and d2 <= d4 <= d6 <= d7
    from test_symmetry import _flat_dimension_by_ansatz
    oracle = _flat_dimension_by_ansatz()
    assert oracle == 8
    assert signature(ZERO).d7 == oracle
    with capsys.disabled():
        report(7, "Rayleigh/Painleve signatures, monotonicity, flat d7 = 8 vs ansatz oracle")


def test_acceptance_08_degree_matches_branch_count(capsys, checked_table):
    checked = 0
    for entry in checked_table:
        if entry.necessary_form is None:
            continue
        assert entry.necessary_form.degree() == entry.symmetry_degree
        branch = specialize_entry(entry, entry.rhs)
        assert not isinstance(branch, NoCandidate)
        verified = sum(b.degree() for b in split_branches(branch)
                       if verify(entry.rhs, b, entry))
        assert verified == entry.symmetry_degree
        checked += 1
    assert checked >= 4
    with capsys.disabled():
        report(8, f"form degree == stored degree == verified branches on {checked} entries")


PSI_PHI3 = [  # (psi, psi inverse), all in the x-shift groupoid
    ((x + 2, x * y), (x - 2, y / (x - 2))),
    ((x - 1, y / x), (x + 1, y * (x + 1))),
    ((x, y + x ** 2), (x, y - x ** 2)),
]
PSI_PHI1 = [
    ((x, x * y), (x, y / x)),
    ((x, y / x), (x, y * x)),
    ((x, y + x ** 2), (x, y - x ** 2)),
]
# x-shifts composed with Moebius maps in y alone normalize the symmetry
# structure of every shipped entry, so full signature equality holds
PSI_SIGNATURE = [
    (x + 2, y / (1 + y)),
    (x - 1, 2 * y / (2 - y)),
    (x + Expr.const(Fraction(1, 2)), y / (1 - 3 * y)),
]


def _prolonged_sigma(sigma_x, sigma_y, f):
    dxs = total_derivative_Dx(sigma_x, f)
    return total_derivative_Dx(sigma_y, f) / dxs


def test_acceptance_09_scramble_and_recover(capsys, checked_table):
    recovered = 0
    for entry in checked_table:
        if entry.necessary_form is None:
            continue
        psis = PSI_PHI3 if entry.groupoid == "phi3" else PSI_PHI1
        for psi, psi_inv in psis:
            scrambled = bar_to_source(pushforward(entry.rhs, *psi_inv))
            sig = signature(scrambled)
            assert matches(sig, entry.signature), (entry.id, psi)
            hits = dict(newdsolve(scrambled, checked_table))
            assert entry.id in hits, (entry.id, psi)
            branch = hits[entry.id]
            if len(branch.explicit) == 3:
                # composing the found map with psi^-1 lands in the stored
                # symmetry branches of the target
                phi = (branch.explicit[XB], branch.explicit[YB])
                sigma = compose(phi, psi_inv)
                sym = specialize_entry(entry, entry.rhs).relations
                sub = {XB: sigma[0], YB: sigma[1],
                       PB: _prolonged_sigma(*sigma, entry.rhs)}
                for rel in sym.relations:
                    assert rel.as_expr().subs(sub).is_zero, (entry.id, psi)
            recovered += 1
    assert recovered >= 15
    # full signature invariance under the normalizing transformations
    for entry in checked_table:
        if entry.necessary_form is None:
            continue
        for psi in PSI_SIGNATURE:
            moved = bar_to_source(pushforward(entry.rhs, *psi))
            assert signature(moved) == entry.signature, (entry.id,)
    with capsys.disabled():
        report(9, f"{recovered} scramble/recover pairs verified; signatures invariant")


def test_acceptance_10_kernel_property_suites(capsys):
    rng = random.Random(20260811)

    def rand_expr(depth=3):
        if depth == 0 or rng.random() < 0.3:
            k = rng.randrange(5)
            if k == 0:
                return Expr.const(Fraction(rng.randint(-6, 6), rng.randint(1, 4)))
            return (x, y, p, x + 1)[k - 1]
        op = rng.randrange(5)
        lhs = rand_expr(depth - 1)
        rhs = rand_expr(depth - 1)
        if op == 0:
            return lhs + rhs
        if op == 1:
            return lhs - rhs
        if op == 2:
            return lhs * rhs
        if op == 3:
            return lhs ** rng.randint(0, 3)
        return lhs / rhs if not rhs.is_zero else lhs

    # parse/print round trip on 1000 random expressions
    for _ in range(1000):
        e = rand_expr()
        assert parse_expr(print_expr(e)) == e

    # canonical form vs random-evaluation oracle: 1000 cases, 5 points each
    def agree(e1, e2):
        hits = 0
        while hits < 5:
            pt = {v: Fraction(rng.randint(-30, 30), rng.randint(1, 7))
                  for v in (X, Y, P)}
            try:
                v1, v2 = e1.eval(pt), e2.eval(pt)
            except PoleAtPoint:
                continue
            if v1 != v2:
                return False
            hits += 1
        return True

    for _ in range(1000):
        e1, e2 = rand_expr(), rand_expr()
        assert ((e1 - e2).is_zero) == agree(e1, e2)

    # Ritt reduction soundness: h * t == remainder on points of the set
    C = TriangularSet([
        Relation.from_expr(xb - x, XB),
        Relation.from_expr(yb ** 3 - y ** 3, YB),
        Relation.from_expr(pb * y - yb * p, PB),
    ], ranking_necessary_form())
    for _ in range(40):
        t = (rand_expr() + rand_expr() * yb + rand_expr() * pb ** 2
             + rand_expr() * xb).num
        rem, h = ritt_full_reduce(t, C)
        for _ in range(3):
            xv = Fraction(rng.randint(1, 9), rng.randint(1, 4))
            yv = Fraction(rng.randint(1, 9), rng.randint(1, 4))
            pv = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
            pt = {X: xv, Y: yv, P: pv, XB: xv, YB: yv, PB: pv}
            assert h.eval({v: pt[v] for v in h.vars()}) * t.eval(pt) == rem.eval(pt)

    # prolongation quasi-linearity for all 7 groupoids at q in {1, 2}
    for gid in GROUPOID_IDS:
        for q in (1, 2):
            for rel in prolong(gid, q, f_symbolic=(q == 2)).relations.relations:
                assert rel.degree == 1

    # containment chains: the bigger groupoid's relations vanish modulo the
    # smaller one's prolonged system
    for small, big in [("phi1", "phi3"), ("phi3", "phi5"), ("phi2", "phi4"),
                       ("phi4", "phi6"), ("phi5", "phi7"), ("phi6", "phi7")]:
        small_sys = prolong(small, 1)
        for rel in defining_system(big).relations.relations:
            rem, _h = ritt_full_reduce(rel.poly(), small_sys.relations)
            assert rem.is_zero
    with capsys.disabled():
        report(10, "round trip x1000, canonical-vs-eval x1000, Ritt soundness, "
                   "quasi-linearity, containments")
