"""Lie point-symmetry analysis: determining systems, dimension, signatures.

The determining system of y'' = f(x, y, p) comes from the classical
second-prolongation identity

    eta_xx + (2 eta_xy - xi_xx) p + (eta_yy - 2 xi_xy) p^2 - xi_yy p^3
    + (eta_y - 2 xi_x - 3 p xi_y) f - xi f_x - eta f_y
    - (eta_x + (eta_y - xi_x) p - xi_y p^2) f_p  =  0,

cleared of denominators and split by powers of p.  Solution dimensions
are counted by completing the linear system to a passive form: autoreduce
against solved forms, add cross-derivative compatibility conditions, and
count the parametric derivatives that remain.  No differential equation
is ever integrated.

Unknown derivatives are keyed (func, i, j) with func 0 = xi, 1 = eta and
i, j the x- and y-differentiation orders.  The completion ranking is
orderly: total order first, then x-count, then eta over xi.
"""

from __future__ import annotations

from .exprcore import Expr, Poly, ZERO, ONE, X, Y, P, as_expr, expr_from_poly, poly_lcm
from .groupoids import GROUPOID_IDS, infinitesimal_constraints

XI, ETA = 0, 1

JET_CAP = 6


class CompletionDiverged(Exception):
    """Completion still produced new information at the jet-order cap."""


class LinearPdeSystem:
    """Homogeneous linear equations in the (xi, eta) jets over Q(x, y)."""

    __slots__ = ("equations",)

    def __init__(self, equations):
        self.equations = [dict(e) for e in equations if e]

    def __repr__(self):
        return f"LinearPdeSystem({len(self.equations)} equations)"


def _rank_key(key):
    func, i, j = key
    return (i + j, i, func)


def determining_system(f):
    """Split the symmetry condition of y'' = f by powers of p."""
    f = as_expr(f)
    p = Expr.var(P)
    fx, fy, fp = f.diff(X), f.diff(Y), f.diff(P)
    coeffs = {
        (ETA, 2, 0): ONE,
        (ETA, 1, 1): 2 * p,
        (XI, 2, 0): -p,
        (ETA, 0, 2): p * p,
        (XI, 1, 1): -2 * p * p,
        (XI, 0, 2): -(p ** 3),
        (ETA, 0, 1): f - p * fp,
        (XI, 1, 0): -2 * f + p * fp,
        (XI, 0, 1): -3 * p * f + p * p * fp,
        (XI, 0, 0): -fx,
        (ETA, 0, 0): -fy,
        (ETA, 1, 0): -fp,
    }
    den = Poly.const(1)
    for c in coeffs.values():
        den = poly_lcm(den, c.den)
    den_e = expr_from_poly(den)
    by_pdeg = {}
    for key, c in coeffs.items():
        cleared = c * den_e
        assert cleared.is_poly
        for d, poly in cleared.num.coeffs_in(P).items():
            eq = by_pdeg.setdefault(d, {})
            cur = eq.get(key, ZERO)
            val = cur + expr_from_poly(poly)
            if val.is_zero:
                eq.pop(key, None)
            else:
                eq[key] = val
    return LinearPdeSystem([by_pdeg[d] for d in sorted(by_pdeg)])


# ---------------------------------------------------------------------------
# Passive completion
# ---------------------------------------------------------------------------

def _derive_form(rhs, dx, dy):
    """d^dx/dx^dx d^dy/dy^dy of a solved right-hand side (raw, unreduced)."""
    for direction, count in ((X, dx), (Y, dy)):
        for _ in range(count):
            out = {}
            for (func, i, j), c in rhs.items():
                dc = c.diff(direction)
                if not dc.is_zero:
                    k = (func, i, j)
                    out[k] = out.get(k, ZERO) + dc
                k2 = (func, i + (1 if direction is X else 0), j + (1 if direction is Y else 0))
                out[k2] = out.get(k2, ZERO) + c
            rhs = {k: c for k, c in out.items() if not c.is_zero}
    return rhs


def _reduce(eq, solved, cache=None):
    """Replace principal derivatives by derivatives of their solved forms."""
    eq = dict(eq)
    guard = 0
    while True:
        guard += 1
        if guard > 5000:
            raise RuntimeError("autoreduction did not terminate")
        principal = None
        for key in eq:
            for lead in solved:
                if key[0] == lead[0] and key[1] >= lead[1] and key[2] >= lead[2]:
                    if principal is None or _rank_key(key) > _rank_key(principal[0]):
                        principal = (key, lead)
        if principal is None:
            return {k: c for k, c in eq.items() if not c.is_zero}
        key, lead = principal
        coeff = eq.pop(key)
        if coeff.is_zero:
            continue
        theta = (lead, key[1] - lead[1], key[2] - lead[2])
        if cache is not None and theta in cache:
            repl = cache[theta]
        else:
            repl = _derive_form(solved[lead], theta[1], theta[2])
            if cache is not None:
                cache[theta] = repl
        for k, c in repl.items():
            eq[k] = eq.get(k, ZERO) + coeff * c
        eq = {k: c for k, c in eq.items() if not c.is_zero}


def dimension(sys, extra=()):
    """Solution-space dimension of the joined system (passive completion).

    extra is an iterable of (func, i, j) keys forced to vanish (the
    groupoid's infinitesimal constraints).  Raises CompletionDiverged if
    parametric derivatives survive at the jet-order cap.
    """
    queue = [dict(eq) for eq in sys.equations]
    queue.extend({key: ONE} for key in extra)
    solved = {}
    cache = {}
    while True:
        while queue:
            # solve for the highest-ranked information first; this keeps
            # coefficient growth in the solved forms tame
            queue.sort(key=lambda e: _rank_key(max(e, key=_rank_key)))
            eq = _reduce(queue.pop(), solved, cache)
            if not eq:
                continue
            leader = max(eq, key=_rank_key)
            if leader[1] + leader[2] > JET_CAP:
                raise CompletionDiverged("equation beyond the jet-order cap")
            inv = ONE / eq[leader]
            rhs = {k: -c * inv for k, c in eq.items() if k != leader}
            # any solved leader that is a derivative of the new one goes back
            requeue = [lead for lead in solved
                       if lead[0] == leader[0] and lead[1] >= leader[1]
                       and lead[2] >= leader[2]]
            solved[leader] = rhs
            cache.clear()
            for lead in requeue:
                if lead == leader:
                    continue
                form = solved.pop(lead)
                eq2 = dict(form)
                eq2[lead] = eq2.get(lead, ZERO) - ONE
                queue.append({k: -c for k, c in eq2.items()})
            for lead in list(solved):
                if lead == leader:
                    continue
                new_form = _reduce(solved[lead], solved, cache)
                if new_form != solved[lead]:
                    solved[lead] = new_form
                    for stale in [k for k in cache if k[0] == lead]:
                        del cache[stale]
        # integrability conditions between pairs of solved forms
        new = []
        leads = sorted(solved, key=_rank_key)
        for a in range(len(leads)):
            for b in range(a + 1, len(leads)):
                l1, l2 = leads[a], leads[b]
                if l1[0] != l2[0]:
                    continue
                mi, mj = max(l1[1], l2[1]), max(l1[2], l2[2])
                if mi + mj > JET_CAP:
                    continue
                if (mi, mj) == (l1[1], l1[2]) or (mi, mj) == (l2[1], l2[2]):
                    continue
                d1 = _derive_form(solved[l1], mi - l1[1], mj - l1[2])
                d2 = _derive_form(solved[l2], mi - l2[1], mj - l2[2])
                eq = dict(d1)
                for k, c in d2.items():
                    eq[k] = eq.get(k, ZERO) - c
                eq = _reduce(eq, solved, cache)
                if eq:
                    new.append(eq)
        if not new:
            break
        queue.extend(new)
    count = 0
    for func in (XI, ETA):
        for order in range(JET_CAP + 1):
            for i in range(order + 1):
                key = (func, i, order - i)
                principal = any(
                    key[0] == lead[0] and key[1] >= lead[1] and key[2] >= lead[2]
                    for lead in solved)
                if not principal:
                    if order == JET_CAP:
                        raise CompletionDiverged(
                            "parametric derivative at the jet-order cap")
                    count += 1
    return count


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

class Signature:
    """The 7-tuple of symmetry dimensions, presented ((d1,d3,d5),(d2,d4,d6),d7)."""

    __slots__ = ("d",)

    def __init__(self, d):
        d = tuple(int(v) for v in d)
        if len(d) != 7:
            raise ValueError("signature needs exactly 7 dimensions")
        self.d = d

    @property
    def triple1(self):
        return (self.d[0], self.d[2], self.d[4])

    @property
    def triple2(self):
        return (self.d[1], self.d[3], self.d[5])

    @property
    def d7(self):
        return self.d[6]

    def as_string(self):
        t1 = ",".join(map(str, self.triple1))
        t2 = ",".join(map(str, self.triple2))
        return f"(({t1}),({t2}),{self.d7})"

    @staticmethod
    def parse(text):
        body = text.strip().replace(" ", "")
        import re
        m = re.fullmatch(r"\(\((\d+),(\d+),(\d+)\),\((\d+),(\d+),(\d+)\),(\d+)\)", body)
        if m is None:
            raise ValueError(f"bad signature literal {text!r}")
        d1, d3, d5, d2, d4, d6, d7 = (int(g) for g in m.groups())
        return Signature((d1, d2, d3, d4, d5, d6, d7))

    def __eq__(self, other):
        return isinstance(other, Signature) and self.d == other.d

    def __hash__(self):
        return hash(self.d)

    def __repr__(self):
        return f"Signature({self.as_string()})"


def signature(f):
    """Compute all seven constrained symmetry dimensions of y'' = f."""
    sys = determining_system(f)
    d = [dimension(sys, infinitesimal_constraints(gid)) for gid in GROUPOID_IDS]
    sig = Signature(d)
    t1, t2, d7 = sig.triple1, sig.triple2, sig.d7
    if not (t1[0] <= t1[1] <= t1[2] <= d7 and t2[0] <= t2[1] <= t2[2] <= d7):
        raise RuntimeError(f"non-monotone signature {sig.as_string()}: computation bug")
    if d7 > 8:
        raise RuntimeError(f"d7 = {d7} exceeds the classical bound 8")
    return sig


def matches(s, t):
    """Signature pre-filter: equal d7 and an equal first or second triple."""
    return s.d7 == t.d7 and (s.triple1 == t.triple1 or s.triple2 == t.triple2)
