"""Determining systems, passive completion, signatures, matching."""

import itertools
import random
from fractions import Fraction

import pytest

from odequiv.exprcore import Expr, ZERO, ONE, X, Y, P, Poly
from odequiv.odeparse import parse_expr
from odequiv.symmetry import (
    LinearPdeSystem, Signature, determining_system, dimension, signature,
    matches, XI, ETA, CompletionDiverged,
)
from odequiv.groupoids import infinitesimal_constraints, GROUPOID_IDS

x, y, p = Expr.var(X), Expr.var(Y), Expr.var(P)


def test_determining_system_flat():
    sys_ = determining_system(ZERO)
    eqs = [dict(e) for e in sys_.equations]
    assert len(eqs) == 4
    expected = [
        {(ETA, 2, 0): ONE},
        {(ETA, 1, 1): Expr.const(2), (XI, 2, 0): -ONE},
        {(ETA, 0, 2): ONE, (XI, 1, 1): Expr.const(-2)},
        {(XI, 0, 2): -ONE},
    ]
    for want in expected:
        assert any(eq == want or eq == {k: -c for k, c in want.items()}
                   for eq in eqs), want


def test_determining_system_painleve_p0_component():
    f = 6 * y ** 2 + x
    sys_ = determining_system(f)
    # p^0 component: eta_xx - 12 y eta + (eta_y - 2 xi_x)(6y^2 + x) - xi = 0
    want = {
        (ETA, 2, 0): ONE,
        (ETA, 0, 0): -12 * y,
        (ETA, 0, 1): f,
        (XI, 1, 0): -2 * f,
        (XI, 0, 0): -ONE,
    }
    assert any(eq == want for eq in sys_.equations)


def test_determining_system_clears_denominators():
    f = parse_expr("(2*x^4*y' - 6*y^2*x - 1)/x^5")
    sys_ = determining_system(f)
    for eq in sys_.equations:
        for coeff in eq.values():
            assert coeff.is_poly


def _flat_dimension_by_ansatz():
    """Independent oracle: polynomial ansatz of degree <= 2 for y'' = 0.

    xi and eta are unknown polynomials sum a_ij x^i y^j (i + j <= 2); the
    full symmetry condition is expanded and every monomial coefficient
    equated to zero; the solution dimension is 12 - rank.
    """
    monos = [(i, j) for i in range(3) for j in range(3) if i + j <= 2]
    unknowns = [("xi", m) for m in monos] + [("eta", m) for m in monos]
    rows = {}
    for col, (func, (mi, mj)) in enumerate(unknowns):
        base = x ** mi * y ** mj
        xi_e = base if func == "xi" else ZERO
        eta_e = base if func == "eta" else ZERO
        cond = (eta_e.diff(X).diff(X)
                + (2 * eta_e.diff(X).diff(Y) - xi_e.diff(X).diff(X)) * p
                + (eta_e.diff(Y).diff(Y) - 2 * xi_e.diff(X).diff(Y)) * p ** 2
                - xi_e.diff(Y).diff(Y) * p ** 3)
        for mono, coeff in cond.num.terms.items():
            rows.setdefault(mono, [Fraction(0)] * len(unknowns))[col] = coeff
    matrix = [row[:] for row in rows.values()]
    rank = 0
    cols = len(unknowns)
    pivot_col = 0
    for col in range(cols):
        piv = next((r for r in range(rank, len(matrix)) if matrix[r][col] != 0), None)
        if piv is None:
            continue
        matrix[rank], matrix[piv] = matrix[piv], matrix[rank]
        inv = 1 / matrix[rank][col]
        matrix[rank] = [c * inv for c in matrix[rank]]
        for r in range(len(matrix)):
            if r != rank and matrix[r][col] != 0:
                f = matrix[r][col]
                matrix[r] = [a - f * b for a, b in zip(matrix[r], matrix[rank])]
        rank += 1
    return len(unknowns) - rank


def test_dimension_flat_matches_ansatz_oracle():
    oracle = _flat_dimension_by_ansatz()
    assert oracle == 8
    assert dimension(determining_system(ZERO), []) == oracle


def test_dimension_rayleigh():
    f = parse_expr("-y'^4 - y")
    sys_ = determining_system(f)
    assert dimension(sys_, infinitesimal_constraints("phi1")) == 0
    assert dimension(sys_, infinitesimal_constraints("phi3")) == 1
    assert dimension(sys_, []) == 1


def test_dimension_emden_phi3():
    sys_ = determining_system(parse_expr("1/(x*y^2)"))
    assert dimension(sys_, infinitesimal_constraints("phi3")) == 0


def test_dimension_invariant_under_equation_order():
    sys_ = determining_system(parse_expr("-y'^4 - y"))
    base = dimension(sys_, [])
    rng = random.Random(4)
    for _ in range(3):
        eqs = list(sys_.equations)
        rng.shuffle(eqs)
        assert dimension(LinearPdeSystem(eqs), []) == base


def test_signature_examples():
    assert signature(parse_expr("-y'^4 - y")).as_string() == "((0,1,1),(1,1,1),1)"
    assert signature(6 * y ** 2 + x).d7 == 0
    assert signature(ZERO).d7 == 8


def test_signature_monotone_on_table(checked_table):
    for entry in checked_table:
        d = entry.signature.d
        d1, d2, d3, d4, d5, d6, d7 = d
        assert d1 <= d3 <= d5 <= d7
        assert d2 <= d4 <= d6 <= d7


def test_matches():
    s = Signature.parse("((0,1,1),(1,1,1),1)")
    assert matches(s, s)
    t = Signature.parse("((0,1,1),(0,0,0),1)")
    assert matches(s, t) and matches(t, s)
    u = Signature.parse("((0,1,1),(1,1,1),2)")
    assert not matches(s, u)


def test_matches_reflexive_symmetric_random():
    rng = random.Random(12)
    sigs = []
    for _ in range(12):
        d1, d2 = rng.randint(0, 2), rng.randint(0, 2)
        d3, d4 = d1 + rng.randint(0, 2), d2 + rng.randint(0, 2)
        d5, d6 = d3 + rng.randint(0, 1), d4 + rng.randint(0, 1)
        d7 = max(d5, d6) + rng.randint(0, 1)
        sigs.append(Signature((d1, d2, d3, d4, d5, d6, d7)))
    for s in sigs:
        assert matches(s, s)
    for s, t in itertools.combinations(sigs, 2):
        assert matches(s, t) == matches(t, s)


def test_signature_parse_round_trip():
    s = Signature.parse("((0,1,1),(1,1,1),1)")
    assert Signature.parse(s.as_string()) == s
    with pytest.raises(ValueError):
        Signature.parse("((1,2),(3,4),5)")
