"""Shared grammar for ODEs, expressions and invariant tokens.

The one grammar used by the CLI and by the target-table loader:

    ode      = "y''" "=" expr ;
    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" [ "-" ] digits ] ;
    atom     = digits | name | "(" expr ")" ;
    name     = letter { letter | digit | "_" | "'" } ;

"^" binds tightest, then unary minus, then "*" and "/", then "+" and "-".
Implicit multiplication is not supported ("6y" is a syntax error); rationals
are written as divisions "a/b".

Recognized names:

    x y p a y2        base variables ("y'" is an alias for p)
    f f_x f_xp ...    jet symbols: letters after "_" are single
                      differentiations by x, y or p, order-insensitive
    xb yb pb ybb      barred variables (and their jets, e.g. yb_xy)
    I1 I2 I3 I1_31    invariant tokens: base digit in 1..3, word digits
                      in 1..4 (applied leftmost first)
    X                 the essential invariant (specializes to x)
"""

from __future__ import annotations

from fractions import Fraction

from .exprcore import (
    Expr, VarId, ZERO, as_expr, base_var, jet_var, barred_var, token_var,
    KIND_BASE, KIND_JET, KIND_BARRED, KIND_TOKEN, _mono_key,
)


class OdeSyntaxError(ValueError):
    """Input does not match the grammar; carries a 1-based column."""

    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


class HigherDerivative(OdeSyntaxError):
    """y''' or beyond (or y'' on the right-hand side) was encountered."""


class NotSecondOrder(OdeSyntaxError):
    """The left-hand side of an ODE is not exactly y''."""


class OdeInput:
    """A parsed second-order ODE y'' = rhs with rhs over x, y, p only."""

    __slots__ = ("rhs", "source_text")

    def __init__(self, rhs, source_text):
        self.rhs = rhs
        self.source_text = source_text

    def __repr__(self):
        return f"OdeInput(y'' = {print_expr(self.rhs)})"


class InvariantToken:
    """An invariant name: base I1/I2/I3 plus a derivation word, or X.

    The word lists derivation indices applied leftmost first: I1_31 is
    X1(X3(I1)).
    """

    __slots__ = ("base", "word")

    def __init__(self, base, word=()):
        self.base = base
        self.word = tuple(word)

    @property
    def name(self):
        if self.base == "X":
            return "X"
        w = "".join(str(d) for d in self.word)
        return f"I{self.base}" + (f"_{w}" if w else "")

    def var(self):
        return token_var(self.name)

    def __eq__(self, other):
        return isinstance(other, InvariantToken) and (self.base, self.word) == (other.base, other.word)

    def __hash__(self):
        return hash((self.base, self.word))

    def __repr__(self):
        return f"InvariantToken({self.name})"


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_OPS = set("+-*/^()=")


def _tokenize(text):
    """Yield (kind, value, column) with 1-based columns; kind in num/name/op/end."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        col = i + 1
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(("num", int(text[i:j]), col))
            i = j
        elif ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            out.append(("name", text[i:j], col))
            i = j
        elif ch in _OPS:
            out.append(("op", ch, col))
            i += 1
        else:
            raise OdeSyntaxError(f"unexpected character {ch!r}", col)
    out.append(("end", None, n + 1))
    return out


def _name_to_var(name, col):
    """Map a surface name to its VarId, validating ranges."""
    if name in ("x", "y", "p", "a", "y2"):
        return base_var(name)
    if name == "y'":
        return base_var("p")
    if name.startswith("y'"):
        if set(name[1:]) == {"'"}:
            raise HigherDerivative(f"{name} is beyond first order here", col)
        raise OdeSyntaxError(f"unknown name {name!r}", col)
    if name == "f":
        return jet_var(0, 0, 0)
    if name.startswith("f_"):
        return _jet_from_letters(name, name[2:], col, None)
    if name in ("xb", "yb", "pb", "ybb"):
        return barred_var(name)
    for b in ("xb", "yb", "pb", "ybb"):
        if name.startswith(b + "_"):
            return _jet_from_letters(name, name[len(b) + 1:], col, b)
    if name == "X":
        return token_var("X")
    if name.startswith("I"):
        tok = parse_invariant_token(name, _column=col)
        return tok.var()
    raise OdeSyntaxError(f"unknown name {name!r}", col)


def _jet_from_letters(full, letters, col, barred_name):
    i = j = k = 0
    for ch in letters:
        if ch == "x":
            i += 1
        elif ch == "y":
            j += 1
        elif ch == "p":
            k += 1
        else:
            raise OdeSyntaxError(f"bad differentiation letter {ch!r} in {full!r}", col)
    if i + j + k == 0:
        raise OdeSyntaxError(f"empty differentiation suffix in {full!r}", col)
    if barred_name is None:
        return jet_var(i, j, k)
    return barred_var(barred_name, i, j, k)


# ---------------------------------------------------------------------------
# Recursive-descent parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens, allowed=None):
        self.tokens = tokens
        self.pos = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, value, col = self.take()
        if kind != "op" or value != op:
            raise OdeSyntaxError(f"expected {op!r}", col)

    def expr(self):
        out = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.take()
                rhs = self.term()
                out = out + rhs if value == "+" else out - rhs
            else:
                return out

    def term(self):
        out = self.unary()
        while True:
            kind, value, col = self.peek()
            if kind == "op" and value in "*/":
                self.take()
                rhs = self.unary()
                if value == "*":
                    out = out * rhs
                else:
                    if rhs.is_zero:
                        raise OdeSyntaxError("division by zero", col)
                    out = out / rhs
            else:
                return out

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return -self.unary()
        return self.power()

    def power(self):
        out = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.take()
            sign = 1
            kind, value, col = self.peek()
            if kind == "op" and value == "-":
                self.take()
                sign = -1
                kind, value, col = self.peek()
            if kind != "num":
                raise OdeSyntaxError("expected integer exponent after '^'", col)
            self.take()
            if sign < 0 and out.is_zero:
                raise OdeSyntaxError("zero to a negative power", col)
            out = out ** (sign * value)
        return out

    def atom(self):
        kind, value, col = self.take()
        if kind == "num":
            return Expr.const(value)
        if kind == "name":
            v = _name_to_var(value, col)
            if self.allowed is not None and v not in self.allowed:
                raise OdeSyntaxError(f"name {value!r} is not allowed here", col)
            return Expr.var(v)
        if kind == "op" and value == "(":
            out = self.expr()
            self.expect_op(")")
            return out
        raise OdeSyntaxError("expected a number, name or '('", col)


def parse_expr(text, allowed=None):
    """Parse an expression in the shared grammar to a canonical Expr."""
    parser = _Parser(_tokenize(text), allowed=allowed)
    out = parser.expr()
    kind, _, col = parser.peek()
    if kind != "end":
        raise OdeSyntaxError("unexpected trailing input", col)
    return out


_ODE_VARS = frozenset({base_var("x"), base_var("y"), base_var("p")})


def parse_ode(text):
    """Parse "y'' = <expr over x, y, y'>" into an OdeInput."""
    tokens = _tokenize(text)
    kind, value, col = tokens[0]
    if kind != "name" or not value.startswith("y'"):
        raise NotSecondOrder("left-hand side must be y''", col)
    if value != "y''":
        raise (HigherDerivative if len(value) > 3 else NotSecondOrder)(
            f"left-hand side must be y'', got {value!r}", col)
    if len(tokens) < 2 or tokens[1][:2] != ("op", "="):
        raise OdeSyntaxError("expected '=' after y''", tokens[1][2] if len(tokens) > 1 else col)
    parser = _Parser(tokens, allowed=_ODE_VARS)
    parser.pos = 2
    rhs = parser.expr()
    kind, _, col = parser.peek()
    if kind != "end":
        raise OdeSyntaxError("unexpected trailing input", col)
    return OdeInput(rhs, text)


def parse_invariant_token(text, _column=1):
    """Parse I<digit>[_<digits>] or X into an InvariantToken."""
    if text == "X":
        return InvariantToken("X")
    if not text.startswith("I") or len(text) < 2:
        raise OdeSyntaxError(f"bad invariant token {text!r}", _column)
    head, _, tail = text[1:].partition("_")
    if not head.isdigit() or len(head) != 1 or head not in "123":
        raise OdeSyntaxError(f"invariant base out of range in {text!r}", _column)
    if "_" in text and (not tail or not tail.isdigit()):
        raise OdeSyntaxError(f"bad derivation word in {text!r}", _column)
    word = tuple(int(d) for d in tail) if tail else ()
    if any(d not in (1, 2, 3, 4) for d in word):
        raise OdeSyntaxError(f"derivation index out of range in {text!r}", _column)
    return InvariantToken(int(head), word)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

def _frac_str(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _term_str(mono, coeff):
    parts = []
    if coeff != 1 or not mono:
        parts.append(_frac_str(coeff))
    for v, e in mono:
        parts.append(v.display() if e == 1 else f"{v.display()}^{e}")
    return "*".join(parts)


def _poly_str(p):
    if p.is_zero:
        return "0"
    terms = sorted(p.terms.items(), key=lambda t: _mono_key(t[0]), reverse=True)
    out = []
    for mono, coeff in terms:
        mag = _term_str(mono, abs(coeff))
        if not out:
            out.append(f"-{mag}" if coeff < 0 else mag)
        else:
            out.append(f" - {mag}" if coeff < 0 else f" + {mag}")
    return "".join(out)


def print_expr(e):
    """Deterministic output; parse_expr(print_expr(e)) == e."""
    e = as_expr(e)
    num = e.num
    den = e.den
    if den.is_const:
        return _poly_str(num)
    num_str = _poly_str(num)
    if len(num.terms) > 1:
        num_str = f"({num_str})"
    den_str = _poly_str(den)
    mono, coeff = den.leading()
    if len(den.terms) > 1 or coeff != 1 or len(mono) > 1:
        den_str = f"({den_str})"
    return f"{num_str}/{den_str}"
