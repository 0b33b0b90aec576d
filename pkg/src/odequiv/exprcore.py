"""Exact multivariate rational-function arithmetic over a fixed jet alphabet.

Everything downstream (reduction, symmetry counting, invariant frames) relies
on one canonical value type:

  Expr = num / den

where num and den are sparse multivariate polynomials with Fraction
coefficients, gcd(num, den) = 1 and den monic under the fixed monomial
order.  Two Exprs are mathematically equal iff their stored forms are
identical, so == is semantic equality.

Variables (VarId) come in four kinds, totally ordered once and for all:

  base   x < y < p < a < y2          (y2 is the second-order prolongation slot)
  jet    f_{i,j,k}  = d^i/dx^i d^j/dy^j d^k/dp^k of the right-hand side f,
         graded-lex on (i,j,k); f itself is jet(0,0,0); i+j+k <= 8
  barred xb, yb, pb, ybb and their (i,j,k)-jets (functions of x, y, p)
  token  opaque invariant names ("I1_31", "X", ...), ordered by name

The monomial order is graded-lex over that variable order; it is fixed and
not configurable.  Coefficients are exact rationals; there is no floating
point in this module.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as _int_gcd

JET_ORDER_CAP = 8


class ExprError(Exception):
    """Base class for kernel errors."""


class DivisionByZeroExpr(ExprError):
    """A denominator normalized to the zero polynomial."""


class PoleAtPoint(ExprError):
    """Evaluation point lies on a pole of the expression."""


class UnboundVariable(ExprError):
    """Evaluation point is missing a variable that occurs in the expression."""


class JetOrderExceeded(ExprError):
    """An operation tried to create a jet symbol of total order > 8."""


# ---------------------------------------------------------------------------
# Variables
# ---------------------------------------------------------------------------

KIND_BASE, KIND_JET, KIND_BARRED, KIND_TOKEN = 0, 1, 2, 3

_BASE_NAMES = ("x", "y", "p", "a", "y2")
_BARRED_NAMES = ("xb", "yb", "pb", "ybb")


class VarId(tuple):
    """A variable, stored as a comparable key tuple (kind first).

    The tuple layout per kind:
      base   (0, index)
      jet    (1, i+j+k, i, j, k)
      barred (2, name_index, i+j+k, i, j, k)
      token  (3, name)
    Plain tuple comparison realizes the fixed total order.
    """

    __slots__ = ()

    @property
    def kind(self):
        return self[0]

    @property
    def jet_orders(self):
        if self[0] == KIND_JET:
            return self[2], self[3], self[4]
        if self[0] == KIND_BARRED:
            return self[3], self[4], self[5]
        raise ValueError(f"{self} carries no jet orders")

    @property
    def barred_name(self):
        return _BARRED_NAMES[self[1]]

    @property
    def token_name(self):
        return self[1]

    def display(self):
        """Surface name used by the printer (ASCII, parser-compatible)."""
        k = self[0]
        if k == KIND_BASE:
            return _BASE_NAMES[self[1]]
        if k == KIND_JET:
            i, j, m = self[2], self[3], self[4]
            if i == j == m == 0:
                return "f"
            return "f_" + "x" * i + "y" * j + "p" * m
        if k == KIND_BARRED:
            i, j, m = self[3], self[4], self[5]
            name = _BARRED_NAMES[self[1]]
            if i == j == m == 0:
                return name
            return name + "_" + "x" * i + "y" * j + "p" * m
        return self[1]

    def __repr__(self):
        return f"VarId({self.display()})"


_var_cache: dict = {}


def _mk(key):
    v = _var_cache.get(key)
    if v is None:
        v = VarId(key)
        _var_cache[key] = v
    return v


def base_var(name):
    return _mk((KIND_BASE, _BASE_NAMES.index(name)))


def jet_var(i, j, k):
    if i < 0 or j < 0 or k < 0:
        raise ValueError("jet orders must be non-negative")
    if i + j + k > JET_ORDER_CAP:
        raise JetOrderExceeded(f"jet order {i + j + k} exceeds cap {JET_ORDER_CAP}")
    return _mk((KIND_JET, i + j + k, i, j, k))


def barred_var(name, i=0, j=0, k=0):
    if i + j + k > JET_ORDER_CAP:
        raise JetOrderExceeded(f"jet order {i + j + k} exceeds cap {JET_ORDER_CAP}")
    return _mk((KIND_BARRED, _BARRED_NAMES.index(name), i + j + k, i, j, k))


def token_var(name):
    return _mk((KIND_TOKEN, name))


X = base_var("x")
Y = base_var("y")
P = base_var("p")
A = base_var("a")
Y2 = base_var("y2")
F = jet_var(0, 0, 0)
XB = barred_var("xb")
YB = barred_var("yb")
PB = barred_var("pb")
YBB = barred_var("ybb")


# ---------------------------------------------------------------------------
# Monomials: tuples of (VarId, exp) sorted by descending variable.
# (degree, monomial) under plain tuple comparison is exactly graded-lex.
# ---------------------------------------------------------------------------

_EMPTY = ()


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        v1, e1 = m1[i]
        v2, e2 = m2[j]
        if v1 > v2:
            out.append(m1[i]); i += 1
        elif v2 > v1:
            out.append(m2[j]); j += 1
        else:
            out.append((v1, e1 + e2)); i += 1; j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def _mono_deg(m):
    return sum(e for _, e in m)


def _mono_key(m):
    return (_mono_deg(m), m)


def _mono_div(m1, m2):
    """m1 / m2, or None if m2 does not divide m1."""
    if not m2:
        return m1
    d = dict(m1)
    for v, e in m2:
        have = d.get(v, 0)
        if have < e:
            return None
        if have == e:
            del d[v]
        else:
            d[v] = have - e
    return tuple(sorted(d.items(), reverse=True))


def _mono_pow(m, n):
    return tuple((v, e * n) for v, e in m)


def _frac_gcd(a, b):
    """gcd of two Fractions: gcd of numerators over lcm of denominators."""
    num = _int_gcd(a.numerator, b.numerator)
    den = (a.denominator * b.denominator) // _int_gcd(a.denominator, b.denominator)
    return Fraction(num, den)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

class Poly:
    """Sparse multivariate polynomial, dict monomial -> Fraction (no zeros)."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms):
        self.terms = terms
        self._hash = None

    @staticmethod
    def const(c):
        c = Fraction(c)
        return Poly({} if c == 0 else {_EMPTY: c})

    @staticmethod
    def var(v, exp=1):
        if exp == 0:
            return _P_ONE
        return Poly({((v, exp),): Fraction(1)})

    # -- predicates ---------------------------------------------------------

    @property
    def is_zero(self):
        return not self.terms

    @property
    def is_const(self):
        t = self.terms
        return not t or (len(t) == 1 and _EMPTY in t)

    def const_value(self):
        if not self.terms:
            return Fraction(0)
        return self.terms[_EMPTY]

    def vars(self):
        out = set()
        for m in self.terms:
            for v, _ in m:
                out.add(v)
        return out

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(out)

    def __sub__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = -c
            else:
                s = s - c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(out)

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        a, b = self.terms, other.terms
        if not a or not b:
            return _P_ZERO
        if len(a) > len(b):
            a, b = b, a
        out = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                s = out.get(m)
                if s is None:
                    out[m] = c
                else:
                    s = s + c
                    if s:
                        out[m] = s
                    else:
                        del out[m]
        return Poly(out)

    def scale(self, c):
        if c == 0:
            return _P_ZERO
        return Poly({m: v * c for m, v in self.terms.items()})

    def mul_mono(self, mono, c=Fraction(1)):
        return Poly({_mono_mul(m, mono): v * c for m, v in self.terms.items()})

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power on Poly")
        result = _P_ONE
        square = self
        while n:
            if n & 1:
                result = result * square
            n >>= 1
            if n:
                square = square * square
        return result

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash(frozenset(self.terms.items()))
        return h

    # -- structure ----------------------------------------------------------

    def total_degree(self):
        return max((_mono_deg(m) for m in self.terms), default=0)

    def degree_in(self, v):
        d = 0
        for m in self.terms:
            for var, e in m:
                if var == v and e > d:
                    d = e
        return d

    def leading(self):
        """(monomial, coeff) of the graded-lex leading term."""
        m = max(self.terms, key=_mono_key)
        return m, self.terms[m]

    def coeffs_in(self, v):
        """View as univariate in v: dict exponent -> coefficient Poly."""
        out = {}
        for m, c in self.terms.items():
            e = 0
            rest = m
            for var, exp in m:
                if var == v:
                    e = exp
                    rest = tuple(t for t in m if t[0] != v)
                    break
            bucket = out.setdefault(e, {})
            bucket[rest] = bucket.get(rest, Fraction(0)) + c
        return {e: Poly({m: c for m, c in terms.items() if c}) for e, terms in out.items()}

    @staticmethod
    def from_coeffs_in(v, coeffs):
        out = _P_ZERO
        for e, poly in coeffs.items():
            out = out + poly.mul_mono(((v, e),) if e else _EMPTY)
        return out

    def diff(self, v):
        out = {}
        for m, c in self.terms.items():
            for idx, (var, e) in enumerate(m):
                if var == v:
                    if e == 1:
                        newm = m[:idx] + m[idx + 1:]
                    else:
                        newm = m[:idx] + ((var, e - 1),) + m[idx + 1:]
                    s = out.get(newm)
                    out[newm] = c * e if s is None else s + c * e
                    break
        return Poly({m: c for m, c in out.items() if c})

    def eval(self, point):
        total = Fraction(0)
        for m, c in self.terms.items():
            val = c
            for v, e in m:
                try:
                    val *= point[v] ** e
                except KeyError:
                    raise UnboundVariable(f"no value for {v.display()}") from None
            total += val
        return total

    # -- content and division ----------------------------------------------

    def mono_content(self):
        """Largest monomial dividing every term."""
        it = iter(self.terms)
        try:
            first = next(it)
        except StopIteration:
            return _EMPTY
        common = dict(first)
        for m in it:
            if not common:
                break
            d = dict(m)
            for v in list(common):
                e = d.get(v, 0)
                if e == 0:
                    del common[v]
                else:
                    common[v] = min(common[v], e)
        return tuple(sorted(common.items(), reverse=True))

    def rat_content(self):
        """Positive Fraction c with self/c having coprime integer coefficients."""
        c = Fraction(0)
        for v in self.terms.values():
            c = _frac_gcd(c, v) if c else abs(v)
            if c == 1:
                break
        return c if c else Fraction(1)

    def primitive(self):
        """self divided by rational content, leading coefficient positive."""
        if not self.terms:
            return self
        c = self.rat_content()
        if self.leading()[1] < 0:
            c = -c
        if c == 1:
            return self
        return Poly({m: v / c for m, v in self.terms.items()})

    def divexact(self, other):
        """Exact polynomial division; raises ValueError on non-divisibility."""
        if other.is_zero:
            raise ZeroDivisionError("divexact by zero polynomial")
        if other.is_const:
            return self.scale(1 / other.const_value())
        rem = dict(self.terms)
        out = {}
        lm, lc = other.leading()
        while rem:
            m = max(rem, key=_mono_key)
            q = _mono_div(m, lm)
            if q is None:
                raise ValueError("not an exact division")
            c = rem[m] / lc
            out[q] = c
            for m2, c2 in other.terms.items():
                mm = _mono_mul(q, m2)
                s = rem.get(mm, Fraction(0)) - c * c2
                if s:
                    rem[mm] = s
                else:
                    rem.pop(mm, None)
        return Poly(out)

    def __repr__(self):
        return f"Poly({expr_from_poly(self)!s})"

    def __str__(self):
        return str(expr_from_poly(self))


_P_ZERO = Poly({})
_P_ONE = Poly({_EMPTY: Fraction(1)})


def poly_one():
    return _P_ONE


def poly_zero():
    return _P_ZERO


# ---------------------------------------------------------------------------
# Polynomial gcd: monomial fast path + content recursion + subresultant PRS
# ---------------------------------------------------------------------------

def _prem(a, b, v):
    """Standard pseudo-remainder lc(b)^(delta+1) * a mod b w.r.t. v."""
    db = b.degree_in(v)
    lb = b.coeffs_in(v)[db]
    delta = a.degree_in(v) - db
    r = a
    k = 0
    dr = r.degree_in(v)
    while not r.is_zero and dr >= db:
        lr = r.coeffs_in(v)[dr]
        r = r * lb - b * lr.mul_mono(((v, dr - db),) if dr > db else _EMPTY)
        k += 1
        new_dr = r.degree_in(v)
        if not r.is_zero and new_dr >= dr:
            raise RuntimeError("pseudo-division failed to descend")
        dr = new_dr
    if k < delta + 1:
        r = r * lb ** (delta + 1 - k)
    return r


def _content_in(poly, v):
    coeffs = list(poly.coeffs_in(v).values())
    c = coeffs[0]
    for q in coeffs[1:]:
        if c.is_const:
            break
        c = poly_gcd(c, q)
    return _P_ONE if c.is_const else c


def _prs_gcd(a, b, v):
    """gcd of two v-primitive Polys, primitive part in v of the last PRS term."""
    if a.degree_in(v) < b.degree_in(v):
        a, b = b, a
    g = _P_ONE
    h = _P_ONE
    while True:
        delta = a.degree_in(v) - b.degree_in(v)
        r = _prem(a, b, v)
        if r.is_zero:
            break
        if r.degree_in(v) == 0:
            return _P_ONE
        a, b = b, r.divexact(g * h ** delta)
        g = a.coeffs_in(v)[a.degree_in(v)]
        if delta == 1:
            h = g
        elif delta > 1:
            h = (g ** delta).divexact(h ** (delta - 1))
    return b.divexact(_content_in(b, v)).primitive()


_MOD_PRIME = 2147483647
_mod_rng_state = 0x5EED


def _eval_univ_mod(poly, v, point, p):
    """Coefficients of poly as a univariate in v over GF(p), or None."""
    out = {}
    for mono, coeff in poly.terms.items():
        num = coeff.numerator % p
        den = coeff.denominator % p
        if den == 0:
            return None
        val = num * pow(den, -1, p) % p
        e = 0
        for var, exp in mono:
            if var == v:
                e = exp
            else:
                val = val * pow(point[var], exp, p) % p
        out[e] = (out.get(e, 0) + val) % p
    return {e: c for e, c in out.items() if c}


def _gcd_is_one_mod(a, b, v):
    """True only when a certified degree-0 modular gcd proves gcd(a, b) = 1."""
    global _mod_rng_state
    p = _MOD_PRIME
    da, db = a.degree_in(v), b.degree_in(v)
    others = (a.vars() | b.vars()) - {v}
    for _ in range(3):
        point = {}
        for w in others:
            _mod_rng_state = (_mod_rng_state * 6364136223846793005 + 1442695040888963407) % (1 << 64)
            point[w] = _mod_rng_state % (p - 1) + 1
        ua = _eval_univ_mod(a, v, point, p)
        ub = _eval_univ_mod(b, v, point, p)
        if ua is None or ub is None:
            continue
        if not ua or not ub or max(ua) != da or max(ub) != db:
            continue
        fa = [ua.get(i, 0) for i in range(da + 1)]
        fb = [ub.get(i, 0) for i in range(db + 1)]
        while fb and any(fb):
            # fa mod fb over GF(p)
            while fb and fb[-1] == 0:
                fb.pop()
            if not fb:
                break
            if len(fa) < len(fb):
                fa, fb = fb, fa
                continue
            inv = pow(fb[-1], -1, p)
            while len(fa) >= len(fb) and any(fa):
                while fa and fa[-1] == 0:
                    fa.pop()
                if len(fa) < len(fb):
                    break
                factor = fa[-1] * inv % p
                shift = len(fa) - len(fb)
                for i, c in enumerate(fb):
                    fa[i + shift] = (fa[i + shift] - factor * c) % p
            fa, fb = fb, fa
        while fa and fa[-1] == 0:
            fa.pop()
        return len(fa) == 1
    return False


def poly_gcd(a, b):
    """gcd over Q, normalized primitive with positive leading coefficient."""
    if a.is_zero:
        return b.primitive()
    if b.is_zero:
        return a.primitive()
    if a.terms == b.terms:
        return a.primitive()
    ma = a.mono_content()
    mb = b.mono_content()
    common = {}
    if ma and mb:
        db = dict(mb)
        for v, e in ma:
            if v in db:
                common[v] = min(e, db[v])
    mono = tuple(sorted(common.items(), reverse=True))
    if ma:
        a = Poly({_mono_div(m, ma): c for m, c in a.terms.items()})
    if mb:
        b = Poly({_mono_div(m, mb): c for m, c in b.terms.items()})
    gmono = Poly({mono: Fraction(1)}) if mono else _P_ONE
    if a.is_const or b.is_const:
        return gmono
    shared = a.vars() & b.vars()
    if not shared:
        return gmono
    # any divisor of both lives in the shared variables, so degree-0 modular
    # gcds in every shared variable certify coprimality
    if all(_gcd_is_one_mod(a, b, w) for w in shared):
        return gmono
    v = min(shared, key=lambda w: (min(a.degree_in(w), b.degree_in(w)), w))
    ca = _content_in(a, v)
    cb = _content_in(b, v)
    ppa = a if ca.is_const else a.divexact(ca)
    ppb = b if cb.is_const else b.divexact(cb)
    g = poly_gcd(ca, cb) * _prs_gcd(ppa.primitive(), ppb.primitive(), v)
    return (g * gmono).primitive()


def poly_lcm(a, b):
    if a.is_zero or b.is_zero:
        return _P_ZERO
    return (a * b).divexact(poly_gcd(a, b)).primitive()


def poly_resultant(a, b, v):
    """Resultant of a and b w.r.t. v (subresultant PRS, exact up to sign)."""
    da, db = a.degree_in(v), b.degree_in(v)
    if da == 0 and db == 0:
        raise ValueError("resultant needs v in at least one argument")
    if da == 0:
        return a ** db
    if db == 0:
        return b ** da
    if da < db:
        a, b, da, db = b, a, db, da
    g = _P_ONE
    h = _P_ONE
    while True:
        delta = da - db
        r = _prem(a, b, v)
        if r.is_zero:
            return _P_ZERO
        a, b = b, r.divexact(g * h ** delta)
        da, db = db, b.degree_in(v)
        g = a.coeffs_in(v)[da]
        if delta == 1:
            h = g
        elif delta > 1:
            h = (g ** delta).divexact(h ** (delta - 1))
        if db == 0:
            lead = b.coeffs_in(v).get(0, _P_ZERO)
            if da == 1:
                return lead
            return (lead ** da).divexact(h ** (da - 1))


# ---------------------------------------------------------------------------
# Expr: canonical rational function
# ---------------------------------------------------------------------------

class Expr:
    """Canonical rational function num/den (gcd 1, den monic, den != 0)."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den, _normalized=False):
        if not _normalized:
            num, den = _cancel(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors -------------------------------------------------------

    @staticmethod
    def const(c):
        return Expr(Poly.const(c), _P_ONE, _normalized=True)

    @staticmethod
    def var(v):
        return Expr(Poly.var(v), _P_ONE, _normalized=True)

    # -- predicates ---------------------------------------------------------

    @property
    def is_zero(self):
        return self.num.is_zero

    @property
    def is_const(self):
        return self.num.is_const and self.den.is_const

    def const_value(self):
        if not self.is_const:
            raise ValueError(f"{self} is not constant")
        return self.num.const_value() / self.den.const_value()

    @property
    def is_poly(self):
        return self.den.is_const

    def vars(self):
        return self.num.vars() | self.den.vars()

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = as_expr(other)
        if self.den == other.den:
            return Expr(self.num + other.num, self.den)
        return Expr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_expr(other)
        if self.den == other.den:
            return Expr(self.num - other.num, self.den)
        return Expr(self.num * other.den - other.num * self.den, self.den * other.den)

    def __rsub__(self, other):
        return as_expr(other) - self

    def __neg__(self):
        return Expr(-self.num, self.den, _normalized=True)

    def __mul__(self, other):
        other = as_expr(other)
        return Expr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_expr(other)
        if other.num.is_zero:
            raise DivisionByZeroExpr("division by zero expression")
        return Expr(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return as_expr(other) / self

    def __pow__(self, n):
        n = int(n)
        if n == 0:
            return ONE
        if n < 0:
            if self.num.is_zero:
                raise DivisionByZeroExpr("zero to a negative power")
            return Expr(self.den ** (-n), self.num ** (-n))
        return Expr(self.num ** n, self.den ** n)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        return isinstance(other, Expr) and self.num == other.num and self.den == other.den

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash((self.num, self.den))
        return h

    # -- calculus ------------------------------------------------------------

    def diff(self, v):
        """Formal partial derivative treating all VarIds as independent."""
        dn = self.num.diff(v)
        dd = self.den.diff(v)
        if dd.is_zero:
            return Expr(dn, self.den)
        return Expr(dn * self.den - self.num * dd, self.den * self.den)

    def subs(self, bindings):
        """Simultaneous substitution VarId -> Expr."""
        if not bindings:
            return self
        num = _poly_subs(self.num, bindings)
        den = _poly_subs(self.den, bindings)
        if den.is_zero:
            raise DivisionByZeroExpr("substitution made a denominator vanish")
        return num / den

    def eval(self, point):
        """Exact rational value at a point binding every variable."""
        den = self.den.eval(point)
        if den == 0:
            raise PoleAtPoint("denominator vanishes at the evaluation point")
        return self.num.eval(point) / den

    def __repr__(self):
        from . import odeparse
        return f"Expr({odeparse.print_expr(self)})"

    def __str__(self):
        from . import odeparse
        return odeparse.print_expr(self)


def _cancel(num, den):
    if den.is_zero:
        raise DivisionByZeroExpr("zero denominator")
    if num.is_zero:
        return _P_ZERO, _P_ONE
    if den.is_const:
        c = den.const_value()
        if c != 1:
            num = num.scale(1 / c)
        return num, _P_ONE
    if len(den.terms) == 1 or len(num.terms) == 1:
        # monomial side: the gcd is the shared monomial content
        common = {}
        da = dict(num.mono_content())
        for v, e in den.mono_content():
            if v in da:
                common[v] = min(e, da[v])
        if common:
            mono = tuple(sorted(common.items(), reverse=True))
            num = Poly({_mono_div(m, mono): c for m, c in num.terms.items()})
            den = Poly({_mono_div(m, mono): c for m, c in den.terms.items()})
        if den.is_const:
            c = den.const_value()
            if c != 1:
                num = num.scale(1 / c)
            return num, _P_ONE
        lc = den.leading()[1]
        if lc != 1:
            num = num.scale(1 / lc)
            den = den.scale(1 / lc)
        return num, den
    g = poly_gcd(num, den)
    if not g.is_const or g.const_value() != 1:
        num = num.divexact(g)
        den = den.divexact(g)
    lc = den.leading()[1] if not den.is_const else den.const_value()
    if lc != 1:
        num = num.scale(1 / lc)
        den = den.scale(1 / lc)
    return num, den


ZERO = Expr.const(0)
ONE = Expr.const(1)


def as_expr(obj):
    if isinstance(obj, Expr):
        return obj
    if isinstance(obj, (int, Fraction)):
        return Expr.const(obj)
    if isinstance(obj, VarId):
        return Expr.var(obj)
    if isinstance(obj, Poly):
        return Expr(obj, _P_ONE)
    raise TypeError(f"cannot interpret {obj!r} as Expr")


def expr_from_poly(p):
    return Expr(p, _P_ONE, _normalized=True) if not p.is_zero else ZERO


def _poly_subs(poly, bindings):
    """Evaluate a Poly into Expr-land under a (partial) substitution."""
    total_num = _P_ZERO
    total_den = _P_ONE
    for m, c in poly.terms.items():
        tn = Poly.const(c)
        td = _P_ONE
        for v, e in m:
            b = bindings.get(v)
            if b is None:
                tn = tn.mul_mono(((v, e),))
            else:
                b = as_expr(b)
                tn = tn * b.num ** e
                td = td * b.den ** e
        if total_den == td:
            total_num = total_num + tn
        else:
            total_num = total_num * td + tn * total_den
            total_den = total_den * td
    return Expr(total_num, total_den)


# substitute returns Expr; keep a functional spelling for the public API
def substitute(e, bindings):
    """Simultaneous substitution; identity map returns e unchanged."""
    return as_expr(e).subs({v: as_expr(b) for v, b in bindings.items()})


def eval_at(e, point):
    """Exact rational value of e at the point (VarId -> Fraction)."""
    return as_expr(e).eval({v: Fraction(q) for v, q in point.items()})


def diff(e, v):
    return as_expr(e).diff(v)


# ---------------------------------------------------------------------------
# normalize: expression trees -> canonical Expr
# ---------------------------------------------------------------------------

def normalize(tree):
    """Canonicalize a tree of +, -, *, /, integer powers, rationals, VarIds.

    Accepts Exprs (idempotent), numbers, VarIds, and nested tuples of the
    shape (op, *args) with op in "+ - * / ^ neg".
    """
    if isinstance(tree, (Expr, int, Fraction, VarId, Poly)):
        return as_expr(tree)
    if isinstance(tree, tuple) and tree and isinstance(tree[0], str):
        op = tree[0]
        args = [normalize(t) for t in tree[1:]]
        if op == "+":
            out = args[0]
            for t in args[1:]:
                out = out + t
            return out
        if op == "-":
            if len(args) == 1:
                return -args[0]
            out = args[0]
            for t in args[1:]:
                out = out - t
            return out
        if op == "neg":
            return -args[0]
        if op == "*":
            out = args[0]
            for t in args[1:]:
                out = out * t
            return out
        if op == "/":
            out = args[0]
            for t in args[1:]:
                out = out / t
            return out
        if op == "^":
            return args[0] ** tree[2]
        raise ValueError(f"unknown operator {op!r}")
    raise TypeError(f"cannot normalize {tree!r}")


# ---------------------------------------------------------------------------
# Derivations: the Cartan total derivative and the structural partials
# ---------------------------------------------------------------------------

def _dx_image(v, f):
    """D_x applied to a single variable, where D_x = d/dx + p d/dy + f d/dp."""
    k = v.kind
    if k == KIND_BASE:
        if v == X:
            return ONE
        if v == Y:
            return Expr.var(P)
        if v == P:
            return f
        return ZERO
    if k == KIND_JET:
        i, j, m = v.jet_orders
        out = Expr.var(jet_var(i + 1, j, m)) + Expr.var(P) * Expr.var(jet_var(i, j + 1, m))
        return out + f * Expr.var(jet_var(i, j, m + 1))
    if k == KIND_BARRED:
        i, j, m = v.jet_orders
        name = v.barred_name
        out = Expr.var(barred_var(name, i + 1, j, m)) + Expr.var(P) * Expr.var(barred_var(name, i, j + 1, m))
        return out + f * Expr.var(barred_var(name, i, j, m + 1))
    return ZERO


def total_derivative_Dx(e, f):
    """Total derivative along the Cartan field of y'' = f(x, y, p).

    Jet symbols transport as D_x f_{i,j,k} = f_{i+1,j,k} + p f_{i,j+1,k}
    + f f_{i,j,k+1}; barred variables transport the same way (they are
    functions of x, y, p); a, y2 and invariant tokens are D_x-constants.
    """
    e = as_expr(e)
    f = as_expr(f)
    out = ZERO
    for v in e.vars():
        img = _dx_image(v, f)
        if not img.is_zero:
            out = out + e.diff(v) * img
    return out


def derive(e, direction):
    """Structural partial d/dx, d/dy or d/dp: jets and barred jets shift."""
    e = as_expr(e)
    didx = {"x": 0, "y": 1, "p": 2}[direction]
    shift = [(1, 0, 0), (0, 1, 0), (0, 0, 1)][didx]
    out = ZERO
    for v in e.vars():
        k = v.kind
        if k == KIND_BASE:
            if v[1] == didx:
                out = out + e.diff(v)
        elif k == KIND_JET:
            i, j, m = v.jet_orders
            w = jet_var(i + shift[0], j + shift[1], m + shift[2])
            out = out + e.diff(v) * Expr.var(w)
        elif k == KIND_BARRED:
            i, j, m = v.jet_orders
            w = barred_var(v.barred_name, i + shift[0], j + shift[1], m + shift[2])
            out = out + e.diff(v) * Expr.var(w)
    return out
