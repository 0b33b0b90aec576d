"""Defining systems, prolongation, quasi-linearity, containments."""

import pytest

from odequiv.exprcore import (
    Expr, ZERO, ONE, X, Y, P, F, XB, YB, PB, barred_var, token_var,
)
from odequiv.diffalg import ritt_full_reduce
from odequiv.groupoids import (
    GROUPOID_IDS, groupoid, defining_system, prolong, infinitesimal_constraints,
    FBAR, XI, ETA,
)

x, y, p = Expr.var(X), Expr.var(Y), Expr.var(P)
xb_x = Expr.var(barred_var("xb", 1, 0, 0))
xb_y = Expr.var(barred_var("xb", 0, 1, 0))
yb_x = Expr.var(barred_var("yb", 1, 0, 0))
yb_y = Expr.var(barred_var("yb", 0, 1, 0))


def _relation_exprs(system):
    return {r.as_expr() for r in system.relations.relations}


def test_defining_system_phi3():
    sys3 = defining_system("phi3")
    exprs = _relation_exprs(sys3)
    assert xb_x - 1 in exprs
    assert xb_y in exprs
    assert sys3.inequations == (yb_y,)


def test_defining_system_phi1():
    sys1 = defining_system("phi1")
    assert Expr.var(XB) - x in _relation_exprs(sys1)
    assert sys1.inequations == (yb_y,)


def test_defining_system_phi7():
    sys7 = defining_system("phi7")
    jac = xb_x * yb_y - xb_y * yb_x
    assert sys7.inequations == (jac,)
    # only the point-transformation closure remains as equations
    leaders = {r.leader.display() for r in sys7.relations.relations}
    assert leaders == {"xb_p", "yb_p"}


def test_prolong_phi3_order1():
    sys_ = prolong("phi3", 1)
    rel = sys_.relations.relation_for(PB)
    assert rel.degree == 1
    assert rel.as_expr() == Expr.var(PB) - yb_x - p * yb_y


def test_prolong_phi3_order2_fixed_target():
    sys_ = prolong("phi3", 2, f_symbolic=True)
    rel = sys_.relations.relation_for(F)
    got = rel.as_expr()
    expected = (Expr.var(barred_var("yb", 2, 0, 0))
                + 2 * p * Expr.var(barred_var("yb", 1, 1, 0))
                + p ** 2 * Expr.var(barred_var("yb", 0, 2, 0))
                + Expr.var(F) * yb_y - Expr.var(FBAR))
    # same relation up to an overall non-zero constant
    assert (got * yb_y - expected * rel.initial * yb_y / rel.initial).is_zero or got == expected


def test_prolong_phi3_order2_concrete_target():
    fbar = 6 * Expr.var(YB) ** 2 + Expr.var(XB)
    sys_ = prolong("phi3", 2, f_symbolic=True, fbar=fbar)
    rel = sys_.relations.relation_for(F)
    assert rel.degree == 1
    assert FBAR not in rel.as_expr().vars()


def test_prolong_phi7_order1():
    sys_ = prolong("phi7", 1)
    rel = sys_.relations.relation_for(PB)
    got = rel.as_expr()
    expected = Expr.var(PB) * (xb_x + p * xb_y) - (yb_x + p * yb_y)
    assert got == expected or (got - expected).is_zero


@pytest.mark.parametrize("gid", GROUPOID_IDS)
@pytest.mark.parametrize("q", [1, 2])
def test_prolongation_quasi_linear(gid, q):
    sys_ = prolong(gid, q, f_symbolic=(q == 2))
    for rel in sys_.relations.relations:
        assert rel.degree == 1, f"{gid} q={q}: {rel!r}"


CONTAINMENTS = [("phi1", "phi3"), ("phi3", "phi5"), ("phi2", "phi4"),
                ("phi4", "phi6"), ("phi5", "phi7"), ("phi6", "phi7")]


@pytest.mark.parametrize("small,big", CONTAINMENTS)
def test_containment(small, big):
    # the larger groupoid's defining relations vanish modulo the smaller's
    small_sys = prolong(small, 1)
    for rel in defining_system(big).relations.relations:
        rem, _h = ritt_full_reduce(rel.poly(), small_sys.relations)
        assert rem.is_zero, f"{big} relation {rel!r} not implied by {small}"


def test_identity_transformation_recursion():
    # substituting the identity jets gives pb = p and f = fbar
    sub = {
        barred_var("xb"): x, barred_var("yb"): y,
        barred_var("xb", 1, 0, 0): ONE, barred_var("xb", 0, 1, 0): ZERO,
        barred_var("xb", 0, 0, 1): ZERO,
        barred_var("yb", 1, 0, 0): ZERO, barred_var("yb", 0, 1, 0): ONE,
        barred_var("yb", 0, 0, 1): ZERO,
        barred_var("yb", 2, 0, 0): ZERO, barred_var("yb", 1, 1, 0): ZERO,
        barred_var("yb", 0, 2, 0): ZERO,
        barred_var("xb", 2, 0, 0): ZERO, barred_var("xb", 1, 1, 0): ZERO,
        barred_var("xb", 0, 2, 0): ZERO,
    }
    sys_ = prolong("phi7", 2, f_symbolic=True)
    prel = sys_.relations.relation_for(PB).as_expr().subs(sub)
    assert prel == Expr.var(PB) - p
    frel = sys_.relations.relation_for(F).as_expr().subs(sub)
    assert frel == Expr.var(F) - Expr.var(FBAR)


def test_infinitesimal_constraints():
    assert infinitesimal_constraints("phi1") == [(XI, 0, 0)]
    assert infinitesimal_constraints("phi2") == [(ETA, 0, 0)]
    assert set(infinitesimal_constraints("phi3")) == {(XI, 1, 0), (XI, 0, 1)}
    assert set(infinitesimal_constraints("phi4")) == {(ETA, 1, 0), (ETA, 0, 1)}
    assert infinitesimal_constraints("phi5") == [(XI, 0, 1)]
    assert infinitesimal_constraints("phi6") == [(ETA, 1, 0)]
    assert infinitesimal_constraints("phi7") == []
