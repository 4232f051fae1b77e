"""Small expression language with truncated-Taylor (jet) evaluation.

Curve components and flow speeds are written as text like ``"sqrt(2)*u"``
or ``"1 - cos(s)"``.  ``parse`` turns text into an immutable AST and
``eval_jet`` evaluates it carrying derivatives up to a requested order, so
high-order curve derivatives are exact to rounding instead of suffering
finite-difference noise.

Grammar (whitespace-insensitive)::

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = "-" , unary | power ;
    power    = atom , [ "^" , exponent ] ;
    exponent = [ "-" ] , integer , [ "^" , exponent ] ;   (right associative)
    atom     = number | name | name , "(" , expr , ")" | "(" , expr , ")" ;

Precedence is ``^`` above unary minus above ``*``/``/`` above ``+``/``-``;
the binary operators associate left, ``^`` right.  Exponents must be
integer literals.  Known functions: sin, cos, sinh, cosh, exp, sqrt; the
name ``pi`` is a constant.

A Jet of order K stores the K+1 Taylor coefficients of a scalar function
at a point: ``coeffs[j]`` is the j-th derivative divided by j!.  The
coefficients may be numpy arrays, in which case one Jet carries the
expansion at every grid node simultaneously.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParseError, UnboundVariable

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp", "sqrt")
CONSTANTS = {"pi": math.pi}


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Lit, Var, Neg, BinOp, Pow, Call]


def variables(e: Expr) -> frozenset[str]:
    """Free variable names of an expression."""
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, Call):
        return variables(e.arg)
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            # Trailing whitespace matches zero-width with no group.
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}, found {text!r}" if text else f"expected {op!r}", pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {text!r}", pos)
        return e

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        # Integer literal, optionally negated; '^' chains associate right.
        sign = 1
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            sign = -1
            kind, text, pos = self.peek()
        if kind != "num" or not re.fullmatch(r"\d+", text):
            raise ParseError("exponent must be an integer literal", pos)
        self.advance()
        value = int(text)
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            value = value ** self.exponent()
        return sign * value

    def atom(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Lit(float(text))
        if kind == "name":
            if text in CONSTANTS:
                return Lit(CONSTANTS[text])
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"unexpected {text!r}" if text else "unexpected end of input", pos)


def parse(text: str) -> Expr:
    """Parse expression text into an AST; raises ParseError with an offset."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Printing (for diagnostics and parse/print round trips)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4, "atom": 5}


def _prec_of(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Pow):
        return _PREC["pow"]
    return _PREC["atom"]


def to_text(e: Expr) -> str:
    """Render an AST back to parseable text (minimal parentheses)."""
    if isinstance(e, Lit):
        v = e.value
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        if _prec_of(e.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        lhs = to_text(e.left)
        rhs = to_text(e.right)
        p = _PREC[e.op]
        if _prec_of(e.left) < p:
            lhs = f"({lhs})"
        # Left associativity: the right child needs parens at equal precedence.
        if _prec_of(e.right) <= p:
            rhs = f"({rhs})"
        return f"{lhs} {e.op} {rhs}"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if _prec_of(e.base) < _PREC["pow"]:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# Jets


class Jet:
    """Truncated Taylor expansion: coeffs[j] = (d^j f / dx^j) / j!.

    Coefficients are stored as a numpy array whose leading axis is the
    Taylor index; trailing axes (if any) are broadcast grid shape.
    Arithmetic truncates at the common order.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Jet":
        c = np.zeros((order + 1,) + shape)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    def derivative(self, j: int):
        """j-th derivative value (coefficient times j!)."""
        return self.coeffs[j] * math.factorial(j)

    # -- arithmetic --------------------------------------------------------

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs)

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.coeffs + other.coeffs)

    def __sub__(self, other: "Jet") -> "Jet":
        return Jet(self.coeffs - other.coeffs)

    def __mul__(self, other: "Jet") -> "Jet":
        a, b = self.coeffs, other.coeffs
        K = a.shape[0]
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(K):
            for j in range(k + 1):
                out[k] = out[k] + a[j] * b[k - j]
        return Jet(out)

    def __truediv__(self, other: "Jet") -> "Jet":
        a, b = self.coeffs, other.coeffs
        if np.any(b[0] == 0.0):
            raise DomainError("division by zero in jet arithmetic")
        K = a.shape[0]
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(K):
            acc = a[k] + np.zeros_like(out[k])
            for j in range(k):
                acc = acc - out[j] * b[k - j]
            out[k] = acc / b[0]
        return Jet(out)

    def powi(self, p: int) -> "Jet":
        """Integer power by repeated squaring; negative p via reciprocal."""
        if p < 0:
            one = Jet.constant(1.0, self.order, self.coeffs.shape[1:])
            return (one / self).powi(-p)
        result = Jet.constant(1.0, self.order, self.coeffs.shape[1:])
        base = self
        while p > 0:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    # -- elementary functions ----------------------------------------------
    # Standard Taylor recurrences: with u the argument jet and k f_k the
    # coefficient of x^(k-1) in f', each rule convolves u' with the result.

    def _sin_cos(self) -> tuple["Jet", "Jet"]:
        u = self.coeffs
        K = u.shape[0]
        s = np.zeros_like(u + 0.0)
        c = np.zeros_like(u + 0.0)
        s[0] = np.sin(u[0])
        c[0] = np.cos(u[0])
        for k in range(1, K):
            sk = np.zeros_like(s[0])
            ck = np.zeros_like(c[0])
            for j in range(1, k + 1):
                sk = sk + j * u[j] * c[k - j]
                ck = ck - j * u[j] * s[k - j]
            s[k] = sk / k
            c[k] = ck / k
        return Jet(s), Jet(c)

    def sin(self) -> "Jet":
        return self._sin_cos()[0]

    def cos(self) -> "Jet":
        return self._sin_cos()[1]

    def _sinh_cosh(self) -> tuple["Jet", "Jet"]:
        u = self.coeffs
        K = u.shape[0]
        s = np.zeros_like(u + 0.0)
        c = np.zeros_like(u + 0.0)
        s[0] = np.sinh(u[0])
        c[0] = np.cosh(u[0])
        for k in range(1, K):
            sk = np.zeros_like(s[0])
            ck = np.zeros_like(c[0])
            for j in range(1, k + 1):
                sk = sk + j * u[j] * c[k - j]
                ck = ck + j * u[j] * s[k - j]
            s[k] = sk / k
            c[k] = ck / k
        return Jet(s), Jet(c)

    def sinh(self) -> "Jet":
        return self._sinh_cosh()[0]

    def cosh(self) -> "Jet":
        return self._sinh_cosh()[1]

    def exp(self) -> "Jet":
        u = self.coeffs
        K = u.shape[0]
        e = np.zeros_like(u + 0.0)
        e[0] = np.exp(u[0])
        for k in range(1, K):
            acc = np.zeros_like(e[0])
            for j in range(1, k + 1):
                acc = acc + j * u[j] * e[k - j]
            e[k] = acc / k
        return Jet(e)

    def sqrt(self) -> "Jet":
        u = self.coeffs
        if np.any(u[0] < 0.0):
            raise DomainError("sqrt of a negative value in jet arithmetic")
        if u.shape[0] > 1 and np.any(u[0] == 0.0):
            raise DomainError("sqrt is not differentiable at zero")
        K = u.shape[0]
        s = np.zeros_like(u + 0.0)
        s[0] = np.sqrt(u[0])
        for k in range(1, K):
            acc = u[k] + np.zeros_like(s[0])
            for j in range(1, k):
                acc = acc - s[j] * s[k - j]
            s[k] = acc / (2.0 * s[0])
        return Jet(s)


_CALL_TABLE = {
    "sin": Jet.sin,
    "cos": Jet.cos,
    "sinh": Jet.sinh,
    "cosh": Jet.cosh,
    "exp": Jet.exp,
    "sqrt": Jet.sqrt,
}


def eval_jet(e: Expr, var: str, point, order: int, env: dict | None = None) -> Jet:
    """Evaluate an expression as a jet in ``var`` around ``point``.

    ``point`` may be a scalar or an array (one expansion per grid node).
    Other free variables take the constant values supplied in ``env``.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    env = env or {}
    point = np.asarray(point, dtype=float)
    shape = point.shape

    def ev(node: Expr) -> Jet:
        if isinstance(node, Lit):
            return Jet.constant(node.value, order, shape)
        if isinstance(node, Var):
            if node.name == var:
                return Jet.variable(point, order)
            if node.name in env:
                return Jet.constant(env[node.name], order, shape)
            raise UnboundVariable(f"variable {node.name!r} is not bound")
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, BinOp):
            lhs = ev(node.left)
            rhs = ev(node.right)
            if node.op == "+":
                return lhs + rhs
            if node.op == "-":
                return lhs - rhs
            if node.op == "*":
                return lhs * rhs
            return lhs / rhs
        if isinstance(node, Pow):
            return ev(node.base).powi(node.exponent)
        if isinstance(node, Call):
            return _CALL_TABLE[node.fn](ev(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)


def eval_scalar(e: Expr, **env):
    """Plain value of an expression; all variables bound through ``env``."""
    names = variables(e)
    if not names:
        return float(eval_jet(e, "_", 0.0, 0).coeffs[0])
    var = sorted(names)[0]
    point = np.asarray(env[var], dtype=float) if var in env else None
    if point is None:
        raise UnboundVariable(f"variable {var!r} is not bound")
    rest = {k: v for k, v in env.items() if k != var}
    out = eval_jet(e, var, point, 0, rest).coeffs[0]
    return float(out) if np.ndim(out) == 0 else out
