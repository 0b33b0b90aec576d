"""The seven point-transformation groupoids and their jet prolongation.

Each groupoid is a finite defining system on the barred first-order jets
(plus p-independence, which makes the transformations point ones), an
invertibility inequation, linearized constraints on the infinitesimals
(xi, eta), and a table of invariant derivations known to annihilate each
barred coordinate.

Prolongation is the incremental recursion eta_q = D_x eta_{q-1} / D_x xi
reduced to normal form, which stays quasi-linear.
"""

from __future__ import annotations

from .exprcore import (
    Expr, ZERO, ONE, X, Y, P, Y2, F, XB, YB, PB, YBB,
    as_expr, barred_var, token_var, total_derivative_Dx,
)
from .diffalg import (
    Relation, TriangularSet, ranking_prolongation, normal_form_rational,
)

GROUPOID_IDS = ("phi1", "phi2", "phi3", "phi4", "phi5", "phi6", "phi7")

# infinitesimal unknown keys: (func, i, j) with func 0 = xi, 1 = eta
XI, ETA = 0, 1

_x = Expr.var(X)
_y = Expr.var(Y)
_p = Expr.var(P)

_xb_x = Expr.var(barred_var("xb", 1, 0, 0))
_xb_y = Expr.var(barred_var("xb", 0, 1, 0))
_xb_p = Expr.var(barred_var("xb", 0, 0, 1))
_yb_x = Expr.var(barred_var("yb", 1, 0, 0))
_yb_y = Expr.var(barred_var("yb", 0, 1, 0))
_yb_p = Expr.var(barred_var("yb", 0, 0, 1))


class Groupoid:
    """Defining data for one of phi1..phi7."""

    __slots__ = ("id", "xi_form", "eta_form", "defining", "inequation",
                 "infinitesimal", "annihilators")

    def __init__(self, id, xi_form, eta_form, defining, inequation,
                 infinitesimal, annihilators):
        self.id = id
        self.xi_form = xi_form
        self.eta_form = eta_form
        self.defining = tuple(defining)
        self.inequation = inequation
        self.infinitesimal = tuple(infinitesimal)
        self.annihilators = annihilators

    def __repr__(self):
        return f"Groupoid({self.id}: xb = {self.xi_form}, yb = {self.eta_form})"


def _rel(e, leader):
    return Relation.from_expr(as_expr(e), leader)


_POINT = [  # p-independence of the transformation, shared by all groupoids
    (_xb_p, barred_var("xb", 0, 0, 1)),
    (_yb_p, barred_var("yb", 0, 0, 1)),
]


def _make_groupoids():
    xb = Expr.var(XB)
    yb = Expr.var(YB)
    jac = _xb_x * _yb_y - _xb_y * _yb_x
    table = {}

    def add(gid, xi_form, eta_form, defining, ineq, infinitesimal, ann_x):
        rels = [_rel(e, v) for e, v in defining + _POINT]
        table[gid] = Groupoid(gid, xi_form, eta_form, rels, ineq,
                              infinitesimal, {"xb": ann_x, "yb": (1,), "pb": ()})

    add("phi1", "x", "eta(x,y)",
        [(xb - _x, XB)],
        _yb_y, [(XI, 0, 0)], (1, 2))
    add("phi2", "xi(x,y)", "y",
        [(yb - _y, YB)],
        _xb_x, [(ETA, 0, 0)], (1,))
    add("phi3", "x + C", "eta(x,y)",
        [(_xb_x - 1, barred_var("xb", 1, 0, 0)), (_xb_y, barred_var("xb", 0, 1, 0))],
        _yb_y, [(XI, 1, 0), (XI, 0, 1)], (1, 2))
    add("phi4", "xi(x,y)", "y + C",
        [(_yb_y - 1, barred_var("yb", 0, 1, 0)), (_yb_x, barred_var("yb", 1, 0, 0))],
        _xb_x, [(ETA, 1, 0), (ETA, 0, 1)], (1,))
    add("phi5", "xi(x)", "eta(x,y)",
        [(_xb_y, barred_var("xb", 0, 1, 0))],
        _xb_x * _yb_y, [(XI, 0, 1)], (1, 2))
    add("phi6", "xi(x,y)", "eta(y)",
        [(_yb_x, barred_var("yb", 1, 0, 0))],
        _xb_x * _yb_y, [(ETA, 1, 0)], (1,))
    add("phi7", "xi(x,y)", "eta(x,y)",
        [],
        jac, [], (1,))
    return table


GROUPOIDS = _make_groupoids()


def groupoid(gid):
    try:
        return GROUPOIDS[gid]
    except KeyError:
        raise KeyError(f"unknown groupoid {gid!r}; expected one of {GROUPOID_IDS}") from None


class ProlongedSystem:
    """Quasi-linear characteristic set of a groupoid prolonged to jets."""

    __slots__ = ("order", "relations", "inequations")

    def __init__(self, order, relations, inequations):
        self.order = order
        self.relations = relations
        self.inequations = tuple(inequations)

    def __repr__(self):
        return f"ProlongedSystem(order={self.order}, {self.relations!r})"


def defining_system(g):
    """The order-0 defining relations on (xb, yb) plus invertibility."""
    if isinstance(g, str):
        g = groupoid(g)
    C = TriangularSet(g.defining, ranking_prolongation())
    return ProlongedSystem(0, C, [g.inequation])


FBAR = token_var("fbar")


def prolong(g, q, f_symbolic=False, fbar=None):
    """Prolong a groupoid to jets of order q (q <= 2).

    The recursion is eta_q = D_x eta_{q-1} * (D_x xi)^(-1) reduced to
    normal form against the system built so far; the Cartan field carries
    the second-order slot y2.  With f_symbolic (q = 2) the slot y2 is
    renamed to the jet symbol f and the target side ybar_2 becomes
    fbar(xb, yb, pb) (the supplied expression in barred variables, or the
    opaque symbol "fbar"), giving the fixed-target system solved for f.
    """
    if isinstance(g, str):
        g = groupoid(g)
    if q not in (0, 1, 2):
        raise ValueError("prolongation order must be 0, 1 or 2")
    system = defining_system(g)
    if q == 0:
        return system
    C = system.relations
    slot = Expr.var(Y2)
    dxx = total_derivative_Dx(Expr.var(XB), slot)
    eta1 = normal_form_rational(total_derivative_Dx(Expr.var(YB), slot) / dxx, C)
    rel1 = Relation.from_expr(Expr.var(PB) - eta1, PB)
    C = TriangularSet(list(C.relations) + [rel1], C.ranking)
    if q == 1:
        return ProlongedSystem(1, C, system.inequations)
    eta2 = normal_form_rational(total_derivative_Dx(eta1, slot) / dxx, C)
    if f_symbolic:
        eta2 = eta2.subs({Y2: Expr.var(F)})
        target = as_expr(fbar) if fbar is not None else Expr.var(FBAR)
        rel2 = Relation.from_expr(eta2 - target, F)
    else:
        rel2 = Relation.from_expr(Expr.var(YBB) - eta2, YBB)
    C = TriangularSet(list(C.relations) + [rel2], C.ranking)
    return ProlongedSystem(2, C, system.inequations)


def infinitesimal_constraints(g):
    """Vanishing constraints on (xi, eta) jets as (func, i, j) keys."""
    if isinstance(g, str):
        g = groupoid(g)
    return list(g.infinitesimal)
