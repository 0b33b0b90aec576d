"""Differential-polynomial machinery over the fixed jet alphabet.

Rankings, relations solved for a power of a leader, triangular sets,
Ritt full reduction (with prolongation of relations through jet
derivatives), normal forms, dimension/degree counting, implicit total
and partial derivatives modulo a triangular set, and the invariant
degree-reduction step used when a necessary form is too fat.

All work happens at bounded jet order; the infinite ranking of the
differential setting is represented through the finitely many variables
actually present.
"""

from __future__ import annotations

from fractions import Fraction

from .exprcore import (
    Expr, Poly, VarId, ZERO, ONE, as_expr, expr_from_poly, poly_one,
    derive, total_derivative_Dx, poly_gcd, poly_lcm,
    KIND_BASE, KIND_JET, KIND_BARRED, KIND_TOKEN,
    base_var, jet_var, barred_var,
)


class DiffAlgError(Exception):
    pass


class LeaderOutsideUnknowns(DiffAlgError):
    """dim/deg was asked against an unknown set missing some leader."""


class SeparantVanishes(DiffAlgError):
    """A separant reduces to zero modulo the set (singular relation)."""


class CannotReduce(DiffAlgError):
    """The degree-reduction heuristic ran out of annihilators."""


class NotInvertibleModSet(DiffAlgError):
    """An element has no inverse in the quotient algebra of the set."""


# ---------------------------------------------------------------------------
# Rankings
# ---------------------------------------------------------------------------

class Ranking:
    """Ordered variable groups, highest first; ties by the fixed VarId order.

    A group selector is one of
      ("var", v)            exactly the variable v
      ("family", kind, nm)  every jet of that family (nm is the barred name
                            index, or None for the f-jets)
      ("kind", kind)        every variable of that kind
      ("rest",)             anything not claimed earlier
    """

    __slots__ = ("groups",)

    def __init__(self, groups, rest=True):
        self.groups = [tuple(g) for g in groups]
        if rest:
            self.groups.append((("rest",),))

    def group_index(self, v):
        for gi, selectors in enumerate(self.groups):
            for sel in selectors:
                tag = sel[0]
                if tag == "var":
                    if v == sel[1]:
                        return gi
                elif tag == "family":
                    if v.kind == sel[1] and (sel[1] != KIND_BARRED or v[1] == sel[2]):
                        return gi
                elif tag == "kind":
                    if v.kind == sel[1]:
                        return gi
                else:
                    return gi
        raise LeaderOutsideUnknowns(f"{v.display()} belongs to no ranking group")

    def key(self, v):
        """Sort key: larger key means higher rank."""
        return (-self.group_index(v), v)

    def outranks(self, v, w):
        return self.key(v) > self.key(w)

    def highest(self, vs):
        return max(vs, key=self.key)


def barred_group(name):
    return ("family", KIND_BARRED, ("xb", "yb", "pb", "ybb").index(name))


def ranking_prolongation():
    """Theta f > ybb > pb > yb > xb > everything else (Corollary-style)."""
    return Ranking([
        [("family", KIND_JET, None)],
        [barred_group("ybb")],
        [barred_group("pb")],
        [barred_group("yb")],
        [barred_group("xb")],
    ])


def ranking_necessary_form():
    """pb > yb > xb > tokens and sources (necessary-form elimination)."""
    return Ranking([
        [barred_group("pb")],
        [barred_group("yb")],
        [barred_group("xb")],
    ])


def ranking_source_elimination():
    """p > y > x > barred variables (pushforward inversion)."""
    return Ranking([
        [("var", base_var("p"))],
        [("var", base_var("y"))],
        [("var", base_var("x"))],
    ])


# ---------------------------------------------------------------------------
# Relations and triangular sets
# ---------------------------------------------------------------------------

def _is_derivative_of(w, v):
    """True iff w is a proper jet derivative of v (same family)."""
    if w.kind != v.kind:
        return False
    if w.kind == KIND_JET:
        wi, wj, wk = w.jet_orders
        vi, vj, vk = v.jet_orders
    elif w.kind == KIND_BARRED:
        if w[1] != v[1]:
            return False
        wi, wj, wk = w.jet_orders
        vi, vj, vk = v.jet_orders
    else:
        return False
    return wi >= vi and wj >= vj and wk >= vk and (wi, wj, wk) != (vi, vj, vk)


class Relation:
    """c_d v^d + ... + c_0 = 0, coefficients free of the leader v."""

    __slots__ = ("leader", "coeffs")

    def __init__(self, leader, coeffs):
        coeffs = tuple(as_expr(c) for c in coeffs)
        if not coeffs or coeffs[0].is_zero:
            raise ValueError("relation must have a non-zero initial")
        if any(leader in c.vars() for c in coeffs):
            raise ValueError("relation coefficients must be free of the leader")
        self.leader = leader
        self.coeffs = coeffs

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def initial(self):
        return self.coeffs[0]

    @staticmethod
    def from_expr(e, leader):
        """Build the relation num(e) = 0 solved in the given leader."""
        e = as_expr(e)
        num = e.num
        d = num.degree_in(leader)
        if d == 0:
            raise ValueError(f"{leader.display()} does not occur in the relation")
        by_deg = num.coeffs_in(leader)
        coeffs = [expr_from_poly(by_deg.get(i, Poly.const(0))) for i in range(d, -1, -1)]
        return Relation(leader, coeffs)

    def poly(self):
        """Denominator-cleared polynomial form (Poly over all variables)."""
        den = poly_one()
        for c in self.coeffs:
            den = poly_lcm(den, c.den)
        out = Poly.const(0)
        d = self.degree
        for i, c in enumerate(self.coeffs):
            e = d - i
            term = c.num * den.divexact(c.den)
            out = out + term.mul_mono(((self.leader, e),) if e else ())
        return out

    def separant(self):
        d = self.degree
        out = ZERO
        for i, c in enumerate(self.coeffs[:-1]):
            e = d - i
            out = out + c * e * Expr.var(self.leader) ** (e - 1)
        return out

    def as_expr(self):
        out = ZERO
        d = self.degree
        for i, c in enumerate(self.coeffs):
            out = out + c * Expr.var(self.leader) ** (d - i)
        return out

    def solved(self):
        """For degree-1 relations, the leader as an Expr of lower variables."""
        if self.degree != 1:
            raise ValueError("only degree-1 relations can be solved explicitly")
        return -self.coeffs[1] / self.coeffs[0]

    def monic(self):
        c0 = self.coeffs[0]
        if c0 == ONE:
            return self
        return Relation(self.leader, [c / c0 for c in self.coeffs])

    def canonical(self):
        """Cleared, content-free, sign-normalized polynomial coefficients."""
        from .exprcore import _frac_gcd
        p = self.poly()
        by_deg = p.coeffs_in(self.leader)
        d = max(by_deg)
        polys = [by_deg.get(i, Poly.const(0)) for i in range(d, -1, -1)]
        g = Poly.const(0)
        for q in polys:
            g = poly_gcd(g, q)
        polys = [q.divexact(g) for q in polys]
        content = None
        for q in polys:
            if not q.is_zero:
                c = q.rat_content()
                content = c if content is None else _frac_gcd(content, c)
        if content not in (None, 1):
            polys = [q.scale(1 / content) for q in polys]
        if polys[0].leading()[1] < 0:
            polys = [-q for q in polys]
        return Relation(self.leader, [expr_from_poly(q) for q in polys])

    def subs(self, bindings):
        return [c.subs(bindings) for c in self.coeffs]

    def __eq__(self, other):
        return (isinstance(other, Relation) and self.leader == other.leader
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.leader, self.coeffs))

    def __repr__(self):
        lead = f"{self.leader.display()}^{self.degree}" if self.degree > 1 else self.leader.display()
        return f"Relation({lead}: {self.as_expr()!s} = 0)"


class TriangularSet:
    """Relations with pairwise distinct leaders, sorted by increasing rank."""

    __slots__ = ("relations", "ranking", "inequations")

    def __init__(self, relations, ranking, inequations=()):
        relations = sorted(relations, key=lambda r: ranking.key(r.leader))
        leaders = [r.leader for r in relations]
        if len(set(leaders)) != len(leaders):
            raise ValueError("triangular set has repeated leaders")
        self.relations = tuple(relations)
        self.ranking = ranking
        self.inequations = tuple(inequations)

    def leaders(self):
        return [r.leader for r in self.relations]

    def relation_for(self, v):
        for r in self.relations:
            if r.leader == v:
                return r
        raise KeyError(f"no relation with leader {v.display()}")

    def degree(self):
        out = 1
        for r in self.relations:
            out *= r.degree
        return out

    def replace(self, relation):
        rels = [relation if r.leader == relation.leader else r for r in self.relations]
        return TriangularSet(rels, self.ranking, self.inequations)

    def lower_than(self, v):
        """Sub-set of relations whose leaders rank strictly below v."""
        key = self.ranking.key(v)
        rels = [r for r in self.relations if self.ranking.key(r.leader) < key]
        return TriangularSet(rels, self.ranking)

    def canonical(self):
        return TriangularSet([r.canonical() for r in self.relations],
                             self.ranking, self.inequations)

    def same_relations(self, other):
        a = {r.leader: r.canonical() for r in self.relations}
        b = {r.leader: r.canonical() for r in other.relations}
        return a == b

    def __repr__(self):
        return "TriangularSet[" + "; ".join(repr(r) for r in self.relations) + "]"


# ---------------------------------------------------------------------------
# Ritt full reduction
# ---------------------------------------------------------------------------

def _prem_tracked(target, rel_poly, v):
    """Pseudo-remainder of target by rel_poly in v, returning (rem, lc, k)."""
    db = rel_poly.degree_in(v)
    lc = rel_poly.coeffs_in(v)[db]
    r = target
    k = 0
    dr = r.degree_in(v)
    while not r.is_zero and dr >= db:
        top = r.coeffs_in(v)[dr]
        shift = ((v, dr - db),) if dr > db else ()
        r = r * lc - rel_poly * top.mul_mono(shift)
        k += 1
        ndr = r.degree_in(v)
        if not r.is_zero and ndr >= dr:
            raise RuntimeError("pseudo-division failed to descend")
        dr = ndr
    return r, lc, k


def _derive_poly(p, directions):
    e = expr_from_poly(p)
    for d in directions:
        e = derive(e, d)
    assert e.is_poly
    return e.num


def _derivation_word(w, v):
    """Directions taking leader v to its derivative w."""
    wi, wj, wk = w.jet_orders
    vi, vj, vk = v.jet_orders
    return "x" * (wi - vi) + "y" * (wj - vj) + "p" * (wk - vk)


def ritt_full_reduce(target, C):
    """Ritt full reduction of a polynomial modulo a triangular set.

    Returns (remainder, h) with h * target = remainder modulo the ideal
    generated by C and the jet derivatives of its relations; h is the
    accumulated product of initials and separants, h != 0.  The remainder
    has degree in each leader v strictly below deg(v's relation) and
    contains no proper derivative of any leader.
    """
    if isinstance(target, Expr):
        if not target.is_poly:
            raise ValueError("ritt_full_reduce expects a polynomial target")
        target = target.num
    rels = [(r.leader, r.degree, r.poly()) for r in C.relations]
    h = poly_one()
    guard = 0
    while True:
        guard += 1
        if guard > 10000:
            raise RuntimeError("reduction did not terminate")
        best = None
        for w in target.vars():
            for leader, deg, poly in rels:
                if w == leader:
                    if target.degree_in(w) < deg:
                        continue
                    cand = (C.ranking.key(w), w, leader, deg, poly, False)
                elif _is_derivative_of(w, leader):
                    cand = (C.ranking.key(w), w, leader, deg, poly, True)
                else:
                    continue
                if best is None or cand[0] > best[0]:
                    best = cand
                elif cand[0] == best[0] and C.ranking.key(cand[2]) > C.ranking.key(best[2]):
                    best = cand
        if best is None:
            return target, expr_from_poly(h)
        _, w, leader, deg, poly, is_deriv = best
        if is_deriv:
            word = _derivation_word(w, leader)
            poly = _derive_poly(poly, word)
        target, lc, k = _prem_tracked(target, poly, w)
        if k:
            h = h * lc ** k


def normal_form(target, C):
    """normal_form(f) = remainder / h as a canonical Expr."""
    rem, h = ritt_full_reduce(target, C)
    if h.is_zero:
        raise ZeroDivisionError("vanishing reduction multiplier: corrupt set")
    return expr_from_poly(rem) / h


def normal_form_rational(e, C):
    """Normal form of a rational expression: reduce numerator and denominator."""
    e = as_expr(e)
    rn, hn = ritt_full_reduce(e.num, C)
    rd, hd = ritt_full_reduce(e.den, C)
    if rd.is_zero:
        raise ZeroDivisionError("denominator lies in the ideal of the set")
    return (expr_from_poly(rn) * hd) / (expr_from_poly(rd) * hn)


# ---------------------------------------------------------------------------
# Quotient-algebra arithmetic for zero-dimensional monic towers
# ---------------------------------------------------------------------------

def _reduced_basis(C):
    """All monomials in the leaders below the relation degrees."""
    basis = [()]
    for r in C.relations:
        basis = [m + ((r.leader, e),) if e else m
                 for m in basis for e in range(r.degree)]
    return [tuple(sorted(m, reverse=True)) for m in basis]


def _poly_to_vector(p, C, basis_index):
    rem, hc = ritt_full_reduce(p, C)
    vec = {}
    leaders = set(C.leaders())
    for mono, coeff in rem.terms.items():
        inside = tuple((v, e) for v, e in mono if v in leaders)
        outside = tuple((v, e) for v, e in mono if v not in leaders)
        idx = basis_index.get(inside)
        if idx is None:
            raise RuntimeError("reduction left a non-basis monomial")
        vec[idx] = vec.get(idx, ZERO) + expr_from_poly(Poly({outside: coeff})) / hc
    return vec


def invert_mod(element, C):
    """Inverse of an Expr in the quotient algebra of a monic triangular set.

    C must be monic (all initials 1) with every relation's coefficients
    reduced; the coefficient field is the Exprs in non-leader variables.
    Raises NotInvertibleModSet when the element is a zero divisor.
    """
    element = as_expr(element)
    if not element.is_poly:
        return invert_mod(expr_from_poly(element.num), C) * expr_from_poly(element.den)
    basis = _reduced_basis(C)
    n = len(basis)
    basis_index = {m: i for i, m in enumerate(basis)}
    cols = []
    for m in basis:
        prod = element.num.mul_mono(m)
        cols.append(_poly_to_vector(prod, C, basis_index))
    # solve  M u = e_0  over the Expr field
    mat = [[cols[j].get(i, ZERO) for j in range(n)] for i in range(n)]
    rhs = [ONE if i == basis_index[()] else ZERO for i in range(n)]
    u = _solve_linear(mat, rhs)
    if u is None:
        raise NotInvertibleModSet("element is not invertible modulo the set")
    out = ZERO
    for j, m in enumerate(basis):
        if not u[j].is_zero:
            out = out + u[j] * expr_from_poly(Poly({m: Fraction(1)}))
    return out


def _solve_linear(mat, rhs):
    """Gaussian elimination over the Expr field; None if singular."""
    n = len(mat)
    m = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not m[r][col].is_zero:
                piv = r
                break
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        inv = ONE / m[col][col]
        m[col] = [c * inv for c in m[col]]
        for r in range(n):
            if r != col and not m[r][col].is_zero:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def reduce_all_the_way(e, C):
    """Rewrite a rational Expr into the quotient algebra of a monic tower.

    Unlike normal_form_rational this inverts the reduced denominator via
    the multiplication matrix, so the result is a polynomial in the
    leaders over the coefficient field (no leaders in denominators).
    """
    e = as_expr(e)
    rn, hn = ritt_full_reduce(e.num, C)
    rd, hd = ritt_full_reduce(e.den, C)
    if rd.is_zero:
        raise ZeroDivisionError("denominator lies in the ideal of the set")
    leaders = set(C.leaders())
    num = expr_from_poly(rn) * hd
    den = expr_from_poly(rd) * hn
    if leaders & den.vars():
        out = num * invert_mod(den, C)
    else:
        out = num / den
    rem, h = ritt_full_reduce(out.num, C)
    return expr_from_poly(rem) / (h * expr_from_poly(out.den))


# ---------------------------------------------------------------------------
# Dimension / degree
# ---------------------------------------------------------------------------

def dim_and_deg(C, unknowns):
    """(dim, deg): free unknowns among the tracked ones, product of degrees."""
    unknowns = set(unknowns)
    leaders = set(C.leaders())
    if not leaders <= unknowns:
        missing = ", ".join(v.display() for v in leaders - unknowns)
        raise LeaderOutsideUnknowns(f"leaders outside the unknown set: {missing}")
    return len(unknowns - leaders), C.degree()


# ---------------------------------------------------------------------------
# Implicit derivatives modulo a triangular set
# ---------------------------------------------------------------------------

def _implicit_derivative(C, v, var_image, cache):
    rel = C.relation_for(v)
    sep = rel.separant()
    sep_nf = normal_form_rational(sep, C)
    if sep_nf.is_zero:
        raise SeparantVanishes(f"separant of {v.display()} vanishes modulo the set")
    d = rel.degree
    total = ZERO
    for i, c in enumerate(rel.coeffs):
        dc = _chain_derive(c, C, var_image, cache)
        if not dc.is_zero:
            total = total + dc * Expr.var(v) ** (d - i)
    result = -total / sep
    return normal_form_rational(result, C)


def _chain_derive(e, C, var_image, cache):
    out = ZERO
    leaders = set(C.leaders())
    for w in e.vars():
        if w in leaders:
            img = cache.get(w)
            if img is None:
                img = _implicit_derivative(C, w, var_image, cache)
                cache[w] = img
        else:
            img = var_image(w)
        if not img.is_zero:
            out = out + e.diff(w) * img
    return out


def implicit_total_derivative(C, v, f):
    """D_x of a leader v implicitly, chaining through lower leaders."""
    f = as_expr(f)

    def image(w):
        from .exprcore import _dx_image
        if w.kind == KIND_BARRED and (w[3], w[4], w[5]) != (0, 0, 0):
            raise ValueError(f"barred jet {w.display()} is not a leader of the set")
        if w.kind == KIND_BARRED:
            raise ValueError(f"barred variable {w.display()} is not a leader of the set")
        return _dx_image(w, f)

    return _implicit_derivative(C, v, image, {})


def implicit_partial(C, v, direction):
    """Implicit d/dx, d/dy or d/dp of a leader modulo the set."""
    didx = {"x": 0, "y": 1, "p": 2}[direction]

    def image(w):
        if w.kind == KIND_BASE:
            return ONE if w[1] == didx else ZERO
        if w.kind == KIND_TOKEN:
            return ZERO
        raise ValueError(f"unexpected variable {w.display()} in implicit partial")

    return _implicit_derivative(C, v, image, {})


# ---------------------------------------------------------------------------
# Degree reduction by invariant derivations
# ---------------------------------------------------------------------------

def degree_reduce(C, v, annihilators, target_degree=1):
    """Lower the degree of v's relation using derivations that kill v.

    Each annihilator X satisfies X(v) = 0, so applying X to the monic
    relation v^d + c_{d-1} v^{d-1} + ... + c_0 = 0 yields a relation of
    degree <= d-1 whose coefficients are X of the old ones.  Annihilators
    are tried in the supplied order; rounds repeat until the target degree
    is reached.  Raises CannotReduce when no annihilator makes progress.
    """
    rel = C.relation_for(v).monic()
    while rel.degree > target_degree:
        progressed = False
        for ann in annihilators:
            derived = [ann(c) for c in rel.coeffs[1:]]
            top = next((i for i, c in enumerate(derived) if not c.is_zero), None)
            if top is None or len(derived) - top - 1 < 1:
                continue
            new_rel = Relation(v, derived[top:]).monic()
            if new_rel.degree >= rel.degree:
                continue
            rel = new_rel
            progressed = True
            break
        if not progressed:
            raise CannotReduce(
                f"no annihilator lowers the degree of {v.display()} below {rel.degree}")
    return C.replace(rel)
