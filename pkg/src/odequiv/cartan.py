"""The invariant frame for equivalence under x-shifts (phi3), hard-coded.

Three fundamental invariants and four invariant derivations over
(x, y, p, a), where a is the residual frame parameter:

    I1 = f_y + (1/4) f_p^2 - (1/2) D_x f_p
    I2 = -f_ppp / (2 a^2)
    I3 = (D_x f_pp - f_yp) / (2 a)

    X1 = (1/a) d/dp
    X2 = (1/a) d/dy + (f_p / 2a) d/dp - (1/2) f_pp d/da
    X3 = D_x - (1/2) f_p a d/da
    X4 = a d/da

with D_x = d/dx + p d/dy + f d/dp.  Words act leftmost first: the token
I1_31 is X1(X3(I1)).  Specialization replaces the jet symbols by the
actual partials of a concrete rational f, so results are rational
functions of (x, y, p, a).

No general equivalence-method engine lives here: the frame is shipped as
data, and only this one frame exists (entries that fix x reuse it plus
the essential invariant X, whose specialized value is x).
"""

from __future__ import annotations

from fractions import Fraction
import random

from .exprcore import (
    Expr, VarId, ZERO, ONE, X, Y, P, A, as_expr, token_var,
    KIND_BASE, KIND_TOKEN, DivisionByZeroExpr, PoleAtPoint,
)
from .odeparse import InvariantToken, parse_invariant_token


class CartanError(Exception):
    pass


class NotLinearInParameter(CartanError):
    """The normalization constraint is not linear in a or 1/a."""


class ParameterAbsent(CartanError):
    """The parameter a cancels from the normalization constraint."""


_x = Expr.var(X)
_y = Expr.var(Y)
_p = Expr.var(P)
_a = Expr.var(A)


def _dx(e, f):
    """D_x = d/dx + p d/dy + f d/dp on functions of (x, y, p, a)."""
    return e.diff(X) + _p * e.diff(Y) + f * e.diff(P)


def fundamental(base, f):
    """The specialized fundamental invariant I1, I2 or I3 of y'' = f."""
    f = as_expr(f)
    fp = f.diff(P)
    if base == 1:
        return f.diff(Y) + fp * fp / 4 - _dx(fp, f) / 2
    if base == 2:
        return -f.diff(P).diff(P).diff(P) / (2 * _a * _a)
    if base == 3:
        fpp = fp.diff(P)
        return (_dx(fpp, f) - f.diff(Y).diff(P)) / (2 * _a)
    raise ValueError(f"fundamental invariants are I1, I2, I3; got I{base}")


def derivation(index, f):
    """The concrete invariant derivation X1..X4 for a given f."""
    f = as_expr(f)
    fp = f.diff(P)
    fpp = fp.diff(P)
    if index == 1:
        return lambda e: e.diff(P) / _a
    if index == 2:
        return lambda e: e.diff(Y) / _a + fp / (2 * _a) * e.diff(P) - fpp / 2 * e.diff(A)
    if index == 3:
        return lambda e: _dx(e, f) - fp * _a / 2 * e.diff(A)
    if index == 4:
        return lambda e: _a * e.diff(A)
    raise ValueError(f"derivations are X1..X4; got X{index}")


def specialize(token, f):
    """Specialized invariant of a token on y'' = f, over (x, y, p, a).

    Accepts an InvariantToken, a token name, or a token VarId; the word's
    derivations apply leftmost first.  The essential token X specializes
    to x.
    """
    if isinstance(token, VarId):
        token = token.token_name
    if isinstance(token, str):
        token = parse_invariant_token(token)
    if token.base == "X":
        return _x
    f = as_expr(f)
    value = fundamental(token.base, f)
    for index in token.word:
        value = derivation(index, f)(value)
    return value


def specialize_expr(e, f, a_value=None):
    """Specialize every invariant token inside an Expr on y'' = f.

    a_value, when given, substitutes the frame parameter away (it is the
    output of normalize_parameter).
    """
    e = as_expr(e)
    bindings = {}
    for v in e.vars():
        if v.kind == KIND_TOKEN:
            bindings[v] = specialize(v, f)
    out = e.subs(bindings)
    if a_value is not None:
        out = out.subs({A: as_expr(a_value)})
    return out


def normalize_parameter(constraint, f):
    """Solve a normalization like I2/I2_1 = 1 for the frame parameter a.

    constraint is a pair (token_expression, target).  The specialized
    equation must be of degree 1 in a or in 1/a; the solved a comes back
    as an Expr in (x, y, p).
    """
    lhs, target = constraint
    value = specialize_expr(lhs, f)
    g = value - as_expr(target)
    if A not in g.vars():
        if g.is_zero:
            raise ParameterAbsent("constraint holds identically; a is unconstrained")
        raise ParameterAbsent("the parameter a cancels from the constraint")
    by_deg = {d: c for d, c in g.num.coeffs_in(A).items() if not c.is_zero}
    degrees = sorted(by_deg, reverse=True)
    if len(degrees) != 2 or degrees[0] - degrees[1] != 1:
        raise NotLinearInParameter(
            f"constraint has a-degrees {degrees}; need two adjacent ones")
    from .exprcore import expr_from_poly
    solved = -expr_from_poly(by_deg[degrees[1]]) / expr_from_poly(by_deg[degrees[0]])
    if solved.is_zero or A in solved.vars():
        raise NotLinearInParameter("no non-zero a-free solution for a")
    return solved


_INDEP_SEED = 0x0DE9
_INDEP_TRIES = 20


def functionally_independent(values):
    """True iff three specialized invariants have a non-zero Jacobian.

    The symbolic 3x3 determinant in (x, y, p) is the authority; random
    rational points (fixed seed, coordinates in [-10, 10], poles skipped)
    cross-check a non-zero verdict.
    """
    if len(values) != 3:
        raise ValueError("independence check expects exactly 3 invariants")
    rows = [[as_expr(v).diff(w) for w in (X, Y, P)] for v in values]
    det = (rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
           - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
           + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]))
    if det.is_zero:
        return False
    rng = random.Random(_INDEP_SEED)
    for _ in range(_INDEP_TRIES):
        point = {v: Fraction(rng.randint(-10, 10), rng.randint(1, 10))
                 for v in (X, Y, P)}
        try:
            if det.eval({v: point.get(v, Fraction(1)) for v in det.vars() | {X, Y, P}}) != 0:
                return True
        except PoleAtPoint:
            continue
    return True


def token_derivation(index):
    """The formal action of X1..X4 on expressions over invariant tokens.

    Tokens transport by appending the index to their word; the essential
    token X (and a bare x, its specialized value) maps to 1 under X3 and
    to 0 under the others.  Used by the degree-reduction heuristic.
    """
    if index not in (1, 2, 3, 4):
        raise ValueError("derivations are X1..X4")

    def image(v):
        if v.kind == KIND_TOKEN:
            tok = parse_invariant_token(v.token_name)
            if tok.base == "X":
                return ONE if index == 3 else ZERO
            return Expr.var(InvariantToken(tok.base, tok.word + (index,)).var())
        if v == X:
            return ONE if index == 3 else ZERO
        raise ValueError(
            f"{v.display()} is not an invariant token; cannot derive formally")

    def apply(e):
        e = as_expr(e)
        out = ZERO
        for v in e.vars():
            img = image(v)
            if not img.is_zero:
                out = out + e.diff(v) * img
        return out

    return apply
