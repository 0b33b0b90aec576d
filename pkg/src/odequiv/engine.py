"""Target table, necessary forms, specialization, pushforward, solver.

A TargetEntry packages one target equation: right-hand side, signature,
groupoid, symmetry degree, normalizations for the frame parameter, and
the necessary form of the change of coordinates as a triangular set over
invariant tokens.  chgt_coords builds such forms from scratch;
specialize_entry instantiates them on a concrete source equation;
verify checks a candidate transformation symbolically; newdsolve is the
solver loop (signature filter, specialize, verify).
"""

from __future__ import annotations

from fractions import Fraction

from .exprcore import (
    Expr, Poly, VarId, ZERO, ONE, X, Y, P, A, XB, YB, PB,
    as_expr, expr_from_poly, poly_gcd, poly_resultant, total_derivative_Dx,
    KIND_BASE, KIND_BARRED, KIND_TOKEN, barred_var, token_var,
    DivisionByZeroExpr,
)
from .odeparse import parse_expr, print_expr, OdeSyntaxError
from .diffalg import (
    Relation, TriangularSet, ranking_necessary_form, ranking_source_elimination,
    ritt_full_reduce, normal_form_rational, reduce_all_the_way, invert_mod,
    dim_and_deg, implicit_total_derivative, implicit_partial, degree_reduce,
    SeparantVanishes, CannotReduce, NotInvertibleModSet, LeaderOutsideUnknowns,
)
from .groupoids import groupoid, GROUPOID_IDS
from .symmetry import Signature, signature, matches
from . import cartan
from .cartan import (
    specialize, specialize_expr, normalize_parameter, functionally_independent,
    token_derivation, NotLinearInParameter, ParameterAbsent, CartanError,
)


class EngineError(Exception):
    pass


class NotIndependent(EngineError):
    """The chosen invariants are functionally dependent on this target."""


class NotInvertible(EngineError):
    """A rational rewrite through the transformation does not exist."""


class TableSyntaxError(EngineError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EntryInconsistent(EngineError):
    def __init__(self, entry_id, reason):
        super().__init__(f"entry {entry_id}: {reason}")
        self.entry_id = entry_id
        self.reason = reason


class NoCandidate:
    """Sentinel: the entry cannot be specialized on this source equation."""

    __slots__ = ("reason",)

    def __init__(self, reason):
        self.reason = reason

    def __bool__(self):
        return False

    def __repr__(self):
        return f"NoCandidate({self.reason})"


_TO_BAR = {X: Expr.var(XB), Y: Expr.var(YB), P: Expr.var(PB)}
_TO_SOURCE = {XB: Expr.var(X), YB: Expr.var(Y), PB: Expr.var(P)}


def source_to_bar(e):
    return as_expr(e).subs(_TO_BAR)


def bar_to_source(e):
    return as_expr(e).subs(_TO_SOURCE)


# ---------------------------------------------------------------------------
# Entries
# ---------------------------------------------------------------------------

class TargetEntry:
    """One target equation with its precomputed matching data."""

    __slots__ = ("id", "name", "rhs", "signature", "groupoid", "symmetry_degree",
                 "normalizations", "necessary_form", "invariants")

    def __init__(self, id, name, rhs, signature, groupoid, symmetry_degree=None,
                 normalizations=(), necessary_form=None, invariants=()):
        self.id = id
        self.name = name
        self.rhs = rhs
        self.signature = signature
        self.groupoid = groupoid
        self.symmetry_degree = symmetry_degree
        self.normalizations = tuple(normalizations)
        self.necessary_form = necessary_form
        self.invariants = tuple(invariants)

    def __repr__(self):
        return f"TargetEntry({self.id}: y'' = {print_expr(self.rhs)})"


class TransformationBranch:
    """A specialized necessary form over (xb, yb, pb) with source coefficients.

    relations is the full algebraic triangular set (all branches at once);
    explicit maps barred variables to closed-form Exprs where a rational
    branch could be extracted; branch_note records those choices.
    """

    __slots__ = ("relations", "explicit", "branch_note", "a_value")

    def __init__(self, relations, explicit, branch_note, a_value=None):
        self.relations = relations
        self.explicit = dict(explicit)
        self.branch_note = branch_note
        self.a_value = a_value

    def degree(self):
        return self.relations.degree()

    def __repr__(self):
        return f"TransformationBranch({self.relations!r})"


# ---------------------------------------------------------------------------
# Univariate arithmetic over a monic triangular tower
# ---------------------------------------------------------------------------

def _upoly_from_expr(e, v, lower):
    """View a polynomial Expr as dict degree -> reduced Expr coefficient."""
    e = as_expr(e)
    num = e.num
    out = {}
    for d, poly in num.coeffs_in(v).items():
        c = reduce_all_the_way(expr_from_poly(poly) / expr_from_poly(e.den), lower)
        if not c.is_zero:
            out[d] = c
    return out


def _upoly_reduce(u, lower):
    out = {}
    for d, c in u.items():
        c = reduce_all_the_way(c, lower)
        if not c.is_zero:
            out[d] = c
    return out


def _upoly_monic(u, lower):
    top = max(u)
    lead = u[top]
    if lead == ONE:
        return u
    inv = invert_mod(lead, lower) if lower.relations else ONE / lead
    return _upoly_reduce({d: c * inv for d, c in u.items()}, lower)


def _upoly_rem(a, b, lower):
    """Remainder of a by monic b (both dicts), coefficients reduced."""
    a = dict(a)
    db = max(b)
    while a:
        da = max(a)
        if da < db:
            return a
        lead = a.pop(da)
        if lead.is_zero:
            continue
        for d, c in b.items():
            if d == db:
                continue
            k = d + da - db
            val = a.get(k, ZERO) - lead * c
            val = reduce_all_the_way(val, lower) if lower.relations else val
            if val.is_zero:
                a.pop(k, None)
            else:
                a[k] = val
        a = {d: c for d, c in a.items() if not c.is_zero}
    return a


def _tower_gcd(upolys, lower):
    """Monic gcd of univariate polynomials over the quotient of the tower."""
    upolys = [u for u in (dict(u) for u in upolys) if u]
    if not upolys:
        return {}
    g = _upoly_monic(upolys[0], lower)
    for u in upolys[1:]:
        b = _upoly_monic(dict(u), lower)
        while b:
            if max(g) < max(b):
                g, b = b, g
            r = _upoly_rem(g, b, lower)
            g = b
            b = _upoly_monic(r, lower) if r else {}
        g = _upoly_monic(g, lower)
    return g


def _upoly_to_relation(u, v):
    d = max(u)
    coeffs = [u.get(i, ZERO) for i in range(d, -1, -1)]
    return Relation(v, coeffs)


# ---------------------------------------------------------------------------
# ChgtCoords: necessary form of the change of coordinates
# ---------------------------------------------------------------------------

def _squarefree_in(poly, v):
    d = poly.degree_in(v)
    if d <= 1:
        return poly
    g = poly_gcd(poly, poly.diff(v))
    if g.is_const:
        return poly
    return poly.divexact(g)


def _strip(poly, v):
    """Squarefree part in v with monomial and rational content removed."""
    mono = poly.mono_content()
    if mono:
        from .exprcore import _mono_div
        poly = Poly({_mono_div(m, mono): c for m, c in poly.terms.items()})
    poly = _squarefree_in(poly, v).primitive()
    cont = poly.coeffs_in(v)
    gc = Poly.const(0)
    for q in cont.values():
        gc = poly_gcd(gc, q)
    if not gc.is_const:
        poly = poly.divexact(gc)
    return poly.primitive()


def chgt_coords(fbar, g, invariant_exprs, symmetry_degree, normalizations=()):
    """Compute the necessary form of the change of coordinates.

    invariant_exprs are three expressions over invariant tokens (single
    tokens or rational combinations); normalizations fix the frame
    parameter on the target side first.  Returns a triangular set over
    (xb, yb, pb) with coefficients rational in the tokens, of total degree
    symmetry_degree (after degree reduction by the groupoid's annihilating
    derivations).  Raises NotIndependent or CannotReduce.
    """
    fbar = as_expr(fbar)
    if isinstance(g, str):
        g = groupoid(g)
    a_val = None
    for constraint in normalizations:
        a_val = normalize_parameter(constraint, fbar)
        break
    values = []
    for T in invariant_exprs:
        value = specialize_expr(as_expr(T), fbar, a_val)
        if A in value.vars():
            raise CartanError(
                f"invariant {print_expr(as_expr(T))} keeps the frame parameter; "
                "add a normalization")
        values.append(value)
    if not functionally_independent(values):
        raise NotIndependent("specialized invariants are functionally dependent")

    taus = [token_var(f"_tau{k}") for k in range(3)]
    eqs = []
    for value, tau in zip(values, taus):
        bar_value = source_to_bar(value)
        eqs.append((bar_value - Expr.var(tau)).num)

    ranking = ranking_necessary_form()

    # eliminate pb
    with_p = [q for q in eqs if q.degree_in(PB) > 0]
    p_free = [q for q in eqs if q.degree_in(PB) == 0]
    for i in range(len(with_p)):
        for j in range(i + 1, len(with_p)):
            r = poly_resultant(with_p[i], with_p[j], PB)
            if not r.is_zero:
                p_free.append(_strip(r, YB if r.degree_in(YB) else XB))
    # xb-only candidates
    xb_only = [q for q in p_free if q.degree_in(YB) == 0]
    with_y = [q for q in p_free if q.degree_in(YB) > 0]
    for i in range(len(with_y)):
        for j in range(i + 1, len(with_y)):
            r = poly_resultant(with_y[i], with_y[j], YB)
            if not r.is_zero:
                xb_only.append(r)
    if not xb_only or not with_y or not with_p:
        raise CannotReduce("system does not determine all of xb, yb, pb")
    rx_poly = Poly.const(0)
    for q in xb_only:
        rx_poly = poly_gcd(rx_poly, _strip(q, XB))
    rx_poly = _strip(rx_poly, XB)
    if rx_poly.degree_in(XB) == 0:
        raise CannotReduce("xb eliminant degenerated to a constant")
    empty = TriangularSet([], ranking)
    rel_x = _upoly_to_relation(
        _upoly_monic(_upoly_from_expr(expr_from_poly(rx_poly), XB, empty), empty), XB)
    lower_x = TriangularSet([rel_x], ranking)

    uys = [_upoly_from_expr(expr_from_poly(q), YB, lower_x) for q in with_y]
    gy = _tower_gcd(uys, lower_x)
    if not gy or max(gy) == 0:
        raise CannotReduce("yb eliminant degenerated")
    rel_y = _upoly_to_relation(gy, YB)
    lower_xy = TriangularSet([rel_x, rel_y], ranking)

    ups = [_upoly_from_expr(expr_from_poly(q), PB, lower_xy) for q in with_p]
    gp = _tower_gcd(ups, lower_xy)
    if not gp or max(gp) == 0:
        raise CannotReduce("pb eliminant degenerated")
    rel_p = _upoly_to_relation(gp, PB)

    C = TriangularSet([rel_x, rel_y, rel_p], ranking)
    # back-substitute the actual invariant expressions for the placeholders
    tau_map = {tau: as_expr(T) for tau, T in zip(taus, invariant_exprs)}
    C = TriangularSet(
        [Relation(r.leader, [c.subs(tau_map) for c in r.coeffs]) for r in C.relations],
        ranking)

    # degree reduction toward the symmetry degree
    while C.degree() > symmetry_degree:
        progressed = False
        for rel in C.relations:
            if rel.degree < 2:
                continue
            ann_ids = g.annihilators.get(rel.leader.barred_name, ())
            if not ann_ids:
                continue
            anns = [token_derivation(i) for i in ann_ids]
            try:
                C = degree_reduce(C, rel.leader, anns, target_degree=rel.degree - 1)
            except CannotReduce:
                continue
            progressed = True
            break
        if not progressed:
            raise CannotReduce(
                f"necessary form stuck at degree {C.degree()}, want {symmetry_degree}")
    if C.degree() != symmetry_degree:
        raise CannotReduce(
            f"necessary form has degree {C.degree()}, want {symmetry_degree}")
    return C


# ---------------------------------------------------------------------------
# Specialization of an entry on a source equation
# ---------------------------------------------------------------------------

def _nth_root_poly(poly, n):
    """Exact n-th root of a Poly, or None."""
    if poly.is_zero:
        return poly
    if poly.is_const:
        c = poly.const_value()
        num = _int_nth_root(c.numerator, n)
        den = _int_nth_root(c.denominator, n)
        if num is None or den is None:
            return None
        return Poly.const(Fraction(num, den))
    if len(poly.terms) == 1:
        (mono, coeff), = poly.terms.items()
        if any(e % n for _, e in mono):
            return None
        root_mono = tuple((v, e // n) for v, e in mono)
        c = _nth_root_poly(Poly.const(coeff), n)
        if c is None:
            return None
        return Poly({root_mono: c.const_value()})
    g = poly_gcd(poly, poly.diff(min(poly.vars())))
    if g.is_const:
        return None
    for cand in (g, poly.divexact(g)):
        try:
            q = poly.divexact(cand ** n)
        except ValueError:
            continue
        if q.is_const:
            c = _nth_root_poly(q, n)
            if c is not None:
                return cand.scale(c.const_value())
    return None


def _int_nth_root(m, n):
    neg = m < 0
    if neg and n % 2 == 0:
        return None
    m = abs(m)
    r = round(m ** (1.0 / n))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** n == m:
            return -cand if neg else cand
    return None


def nth_root_expr(e, n):
    """Rational n-th root of an Expr by perfect-power detection, or None."""
    e = as_expr(e)
    num = _nth_root_poly(e.num, n)
    den = _nth_root_poly(e.den, n)
    if num is None or den is None:
        return None
    return expr_from_poly(num) / expr_from_poly(den)


def specialize_entry(entry, f):
    """Substitute the source's invariant values into the necessary form.

    Returns a TransformationBranch, or NoCandidate when the entry cannot
    apply (parameter normalization unsolvable, vanishing initials, or
    functionally dependent specialized invariants).
    """
    f = as_expr(f)
    if entry.necessary_form is None:
        return NoCandidate("entry ships no necessary form")
    a_val = None
    try:
        for constraint in entry.normalizations:
            a_val = normalize_parameter(constraint, f)
            break
        token_values = {}
        for rel in entry.necessary_form.relations:
            for c in rel.coeffs:
                for v in c.vars():
                    if v.kind == KIND_TOKEN and v not in token_values:
                        token_values[v] = specialize(v, f)
    except (ParameterAbsent, DivisionByZeroExpr) as err:
        return NoCandidate(str(err))

    def _specialize_coeff(c):
        out = c.subs(token_values)
        if a_val is not None and A in out.vars():
            out = out.subs({A: a_val})
        return out
    if entry.invariants:
        try:
            values = [specialize_expr(T, f, a_val) for T in entry.invariants]
        except (DivisionByZeroExpr, CartanError) as err:
            return NoCandidate(str(err))
        if not functionally_independent(values):
            return NoCandidate("specialized invariants are dependent on the source")

    ranking = entry.necessary_form.ranking
    relations = []
    try:
        for rel in entry.necessary_form.relations:
            coeffs = [_specialize_coeff(c) for c in rel.coeffs]
            if coeffs[0].is_zero:
                return NoCandidate(
                    f"initial of the {rel.leader.display()} relation vanishes")
            relations.append(Relation(rel.leader, coeffs))
    except (DivisionByZeroExpr, ParameterAbsent) as err:
        return NoCandidate(str(err))

    # autoreduce bottom-up and canonicalize; common a-powers cancel here
    reduced = []
    for rel in relations:
        lower = TriangularSet(reduced, ranking)
        if reduced:
            rem, _h = ritt_full_reduce(rel.poly(), lower)
        else:
            rem = rel.poly()
        if rem.degree_in(rel.leader) < 1:
            return NoCandidate(
                f"relation for {rel.leader.display()} degenerates after reduction")
        canon = Relation.from_expr(expr_from_poly(rem), rel.leader).canonical()
        if any(A in c.vars() for c in canon.coeffs):
            return NoCandidate(
                f"frame parameter does not cancel from the "
                f"{rel.leader.display()} relation")
        reduced.append(canon)
    C = TriangularSet(reduced, ranking)

    explicit = {}
    notes = []
    for rel in C.relations:
        if rel.degree == 1:
            value = rel.solved().subs(explicit)
            explicit[rel.leader] = value
        else:
            rel_m = rel.monic()
            lowered = [c.subs(explicit) for c in rel_m.coeffs]
            if all(c.is_zero for c in lowered[1:-1]):
                root = nth_root_expr(-lowered[-1], rel.degree)
                if root is not None:
                    explicit[rel.leader] = root
                    notes.append(
                        f"{rel.leader.display()} taken as the rational root of a "
                        f"degree-{rel.degree} relation")
    note = "; ".join(notes) if notes else "all relations kept algebraic"
    return TransformationBranch(C, explicit, note, a_val)


def split_branches(branch):
    """Split one quadratic relation with rational roots into explicit branches.

    Returns a list of TransformationBranch.  Relations of degree >= 3 (or
    quadratics with irrational roots) stay algebraic and come back as the
    single input branch.
    """
    C = branch.relations
    for rel in C.relations:
        if rel.degree != 2:
            continue
        rel_m = rel.monic()
        b = rel_m.coeffs[1].subs(branch.explicit)
        c = rel_m.coeffs[2].subs(branch.explicit)
        disc = b * b - 4 * c
        s = nth_root_expr(disc, 2)
        if s is None:
            continue
        out = []
        for root in ((-b + s) / 2, (-b - s) / 2):
            new_rel = Relation.from_expr(Expr.var(rel.leader) - root, rel.leader)
            newC = C.replace(new_rel)
            explicit = {}
            for other in newC.relations:
                if other.leader == rel.leader:
                    explicit[other.leader] = root.subs(explicit)
                elif other.degree == 1:
                    explicit[other.leader] = other.solved().subs(explicit)
            out.append(TransformationBranch(
                newC, explicit,
                f"{branch.branch_note}; split {rel.leader.display()} branch",
                branch.a_value))
        return out
    return [branch]


# ---------------------------------------------------------------------------
# Pushforward of an ODE along a point transformation
# ---------------------------------------------------------------------------

def pushforward(f, xi, eta):
    """Rewrite y'' = f in the coordinates xb = xi(x, y), yb = eta(x, y).

    Returns the new right-hand side as an Expr in (xb, yb, pb).  Raises
    NotInvertible when the source variables cannot be eliminated
    rationally.
    """
    f = as_expr(f)
    xi = as_expr(xi)
    eta = as_expr(eta)
    dxxi = total_derivative_Dx(xi, f)
    if dxxi.is_zero:
        raise NotInvertible("D_x xi vanishes identically")
    pexpr = total_derivative_Dx(eta, f) / dxxi
    fbar_src = total_derivative_Dx(pexpr, f) / dxxi

    ranking = ranking_source_elimination()
    ax = (xi - Expr.var(XB)).num
    ay = (eta - Expr.var(YB)).num
    ap = (pexpr - Expr.var(PB)).num
    if ax.degree_in(Y) == 0 and ax.degree_in(X) > 0:
        x_poly, y_poly = ax, ay
    elif ay.degree_in(Y) == 0 and ay.degree_in(X) > 0:
        x_poly, y_poly = ay, ax
    else:
        r = poly_resultant(ax, ay, Y)
        x_poly = _strip(r, X) if not r.is_zero else None
        y_poly = ax if 0 < ax.degree_in(Y) <= ay.degree_in(Y) else ay
        if x_poly is None or x_poly.degree_in(X) == 0:
            raise NotInvertible("cannot isolate x from the transformation")
    if y_poly.degree_in(Y) == 0:
        raise NotInvertible("cannot isolate y from the transformation")
    try:
        lower0 = TriangularSet([], ranking)
        ux = _upoly_monic(_upoly_from_expr(expr_from_poly(x_poly), X, lower0), lower0)
        rel_x = _upoly_to_relation(ux, X)
        lower_x = TriangularSet([rel_x], ranking)
        uy = _upoly_monic(_upoly_from_expr(expr_from_poly(y_poly), Y, lower_x), lower_x)
        rel_y = _upoly_to_relation(uy, Y)
        lower_xy = TriangularSet([rel_x, rel_y], ranking)
        up = _upoly_monic(_upoly_from_expr(expr_from_poly(ap), P, lower_xy), lower_xy)
        rel_p = _upoly_to_relation(up, P)
        C = TriangularSet([rel_x, rel_y, rel_p], ranking)
        out = reduce_all_the_way(fbar_src, C)
    except (NotInvertibleModSet, ZeroDivisionError) as err:
        raise NotInvertible(str(err)) from None
    if out.vars() & {X, Y, P}:
        raise NotInvertible("source variables survive the elimination")
    return out


def compose(outer, inner):
    """Compose two point transformations given as (xi, eta) pairs."""
    xi2, eta2 = (as_expr(outer[0]), as_expr(outer[1]))
    xi1, eta1 = (as_expr(inner[0]), as_expr(inner[1]))
    binding = {X: xi1, Y: eta1}
    return xi2.subs(binding), eta2.subs(binding)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def _reduces_to_zero(e, C):
    e = as_expr(e)
    rem, _h = ritt_full_reduce(e.num, C)
    return rem.is_zero


def verify_detail(f, branch, entry):
    """(ok, reason): groupoid membership, contact and ODE conditions."""
    f = as_expr(f)
    C = branch.relations
    g = groupoid(entry.groupoid)
    try:
        jets = {}
        for w in ("xb", "yb"):
            leader = barred_var(w)
            for direction in ("x", "y", "p"):
                jets[(w, direction)] = implicit_partial(C, leader, direction)
        for rel in g.defining:
            expr = rel.as_expr()
            sub = {}
            for v in expr.vars():
                if v.kind == KIND_BARRED and v.jet_orders != (0, 0, 0):
                    i, j, k = v.jet_orders
                    if i + j + k != 1:
                        return False, f"defining relation of order > 1: {v.display()}"
                    direction = "x" if i else ("y" if j else "p")
                    sub[v] = jets[(v.barred_name, direction)]
            if not _reduces_to_zero(expr.subs(sub), C):
                return False, f"groupoid relation fails: {rel!r}"
        ineq = g.inequation
        sub = {}
        for v in ineq.vars():
            if v.kind == KIND_BARRED and v.jet_orders != (0, 0, 0):
                i, j, k = v.jet_orders
                direction = "x" if i else ("y" if j else "p")
                sub[v] = jets[(v.barred_name, direction)]
        ineq_val = normal_form_rational(ineq.subs(sub).num, C)
        if ineq_val.is_zero:
            return False, "invertibility inequation vanishes"
        dxx = implicit_total_derivative(C, XB, f)
        dxy = implicit_total_derivative(C, YB, f)
        dxp = implicit_total_derivative(C, PB, f)
        contact = Expr.var(PB) * dxx - dxy
        if not _reduces_to_zero(contact.num, C):
            return False, "contact condition fails"
        fbar_on_bars = source_to_bar(entry.rhs)
        ode = dxp - fbar_on_bars * dxx
        if not _reduces_to_zero(ode.num, C):
            return False, "transformed equation does not match the target"
    except SeparantVanishes as err:
        return False, f"separant vanishes: {err}"
    return True, "verified"


def verify(f, branch, entry):
    """True iff the branch maps y'' = f to the entry's equation, inside its groupoid."""
    ok, _reason = verify_detail(f, branch, entry)
    return ok


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

def newdsolve(f, table):
    """Signature filter then specialize-and-verify; all hits in table order."""
    f = as_expr(f)
    sig = signature(f)
    out = []
    for entry in table:
        if not matches(sig, entry.signature):
            continue
        branch = specialize_entry(entry, f)
        if isinstance(branch, NoCandidate):
            continue
        if verify(f, branch, entry):
            out.append((entry.id, branch))
    return out


# ---------------------------------------------------------------------------
# Table file format
# ---------------------------------------------------------------------------

_TABLE_KEYS = ("name", "rhs", "signature", "groupoid", "symdeg")


def parse_table(text):
    """Parse the line-oriented table format; returns a list of TargetEntry."""
    entries = []
    current = None
    fields = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[entry"):
            if current is not None:
                raise TableSyntaxError("nested [entry] block", lineno)
            if not line.endswith("]"):
                raise TableSyntaxError("malformed [entry ...] header", lineno)
            current = line[len("[entry"):-1].strip()
            if not current:
                raise TableSyntaxError("empty entry id", lineno)
            fields = {"normalize": [], "relation": [], "invariants": []}
            continue
        if line == "end":
            if current is None:
                raise TableSyntaxError("'end' outside an entry block", lineno)
            entries.append(_build_entry(current, fields, lineno))
            current = None
            fields = None
            continue
        if current is None:
            raise TableSyntaxError(f"content outside an entry block: {line!r}", lineno)
        key, eq, value = line.partition("=")
        if not eq:
            raise TableSyntaxError(f"expected key=value, got {line!r}", lineno)
        key = key.strip()
        value = value.strip()
        try:
            if key in ("name",):
                fields[key] = value
            elif key == "rhs":
                fields[key] = parse_expr(value)
            elif key == "signature":
                fields[key] = Signature.parse(value)
            elif key == "groupoid":
                if value not in GROUPOID_IDS:
                    raise TableSyntaxError(f"unknown groupoid {value!r}", lineno)
                fields[key] = value
            elif key == "symdeg":
                fields[key] = int(value)
            elif key == "normalize":
                lhs, _, rhs = value.partition(" = ")
                if not _:
                    raise TableSyntaxError("normalize needs '<expr> = <expr>'", lineno)
                fields["normalize"].append((parse_expr(lhs), parse_expr(rhs)))
            elif key == "invariants":
                fields["invariants"] = [parse_expr(part.strip())
                                        for part in value.split(";") if part.strip()]
            elif key == "relation":
                head, _, rhs = value.partition(" = ")
                if not _:
                    raise TableSyntaxError("relation needs '<var>^<d> = <expr>'", lineno)
                var_name, _, deg_text = head.strip().partition("^")
                if var_name not in ("xb", "yb", "pb"):
                    raise TableSyntaxError(f"bad relation leader {var_name!r}", lineno)
                deg = int(deg_text) if deg_text else 1
                leader = barred_var(var_name)
                rel_expr = Expr.var(leader) ** deg - parse_expr(rhs)
                rel = Relation.from_expr(rel_expr, leader)
                if rel.degree != deg:
                    raise TableSyntaxError(
                        f"declared degree {deg} but relation has degree {rel.degree}",
                        lineno)
                fields["relation"].append(rel)
            else:
                raise TableSyntaxError(f"unknown key {key!r}", lineno)
        except (OdeSyntaxError, ValueError) as err:
            raise TableSyntaxError(str(err), lineno) from None
    if current is not None:
        raise TableSyntaxError("unterminated entry block", len(text.splitlines()))
    return entries


def _build_entry(entry_id, fields, lineno):
    for key in ("name", "rhs", "signature", "groupoid"):
        if key not in fields:
            raise TableSyntaxError(f"entry {entry_id} is missing {key}=", lineno)
    necessary = None
    if fields["relation"]:
        necessary = TriangularSet(fields["relation"], ranking_necessary_form())
    return TargetEntry(
        entry_id, fields["name"], fields["rhs"], fields["signature"],
        fields["groupoid"], fields.get("symdeg"), fields["normalize"],
        necessary, fields["invariants"])


def save_table(entries):
    """Serialize entries in the canonical table format."""
    lines = []
    for entry in entries:
        lines.append(f"[entry {entry.id}]")
        lines.append(f"name={entry.name}")
        lines.append(f"rhs={print_expr(entry.rhs)}")
        lines.append(f"signature={entry.signature.as_string()}")
        lines.append(f"groupoid={entry.groupoid}")
        if entry.symmetry_degree is not None:
            lines.append(f"symdeg={entry.symmetry_degree}")
        for lhs, rhs in entry.normalizations:
            lines.append(f"normalize={print_expr(lhs)} = {print_expr(rhs)}")
        if entry.invariants:
            lines.append("invariants=" + "; ".join(print_expr(t) for t in entry.invariants))
        if entry.necessary_form is not None:
            for rel in entry.necessary_form.relations:
                rel_m = rel.monic()
                rhs = ZERO
                d = rel_m.degree
                for i, c in enumerate(rel_m.coeffs[1:], start=1):
                    rhs = rhs - c * Expr.var(rel.leader) ** (d - i)
                lines.append(
                    f"relation={rel.leader.display()}^{d} = {print_expr(rhs)}")
        lines.append("end")
        lines.append("")
    return "\n".join(lines)


def check_entry(entry):
    """Verify the stored invariants of one entry; returns a list of problems."""
    problems = []
    try:
        sig = signature(entry.rhs)
        if sig != entry.signature:
            problems.append(
                f"stored signature {entry.signature.as_string()} != computed {sig.as_string()}")
    except Exception as err:
        problems.append(f"signature recomputation failed: {err}")
    if entry.necessary_form is not None:
        try:
            dim, deg = dim_and_deg(entry.necessary_form, {XB, YB, PB})
            if dim != 0:
                problems.append(f"necessary form has dim {dim}, want 0")
            if entry.symmetry_degree is not None and deg != entry.symmetry_degree:
                problems.append(
                    f"necessary form degree {deg} != stored symmetry degree "
                    f"{entry.symmetry_degree}")
        except LeaderOutsideUnknowns as err:
            problems.append(str(err))
    return problems


def load_table(path, check=True):
    """Load and validate a table file.

    Returns (entries, problems) where problems maps entry ids to the list
    of consistency failures; inconsistent entries are still returned so a
    caller can report them all.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    entries = parse_table(text)
    problems = {}
    if check:
        for entry in entries:
            bad = check_entry(entry)
            if bad:
                problems[entry.id] = bad
    return entries, problems


def default_table_path():
    from importlib.resources import files
    return str(files("odequiv").joinpath("data/targets.table"))
