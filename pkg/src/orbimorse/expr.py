"""Expression language for invariant functions on a chart.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' exponent)?
    atom   := NUMBER | 'x<k>' | 'pi' | FUNC '(' expr ')' | '(' expr ')'

``exponent`` is an integer literal, optionally signed or parenthesized.
``FUNC`` is one of sin, cos, exp, sqrt.

Derivatives are computed by forward-mode propagation of second-order jets
(value, gradient, Hessian), vectorized over a batch of points.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier, VariableOutOfRange

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Pi, Neg, BinOp, Pow, Call]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*|\.\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


class _Tok(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, dim: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.dim = dim

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        t = self.take()
        if t.text != text:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", t.pos)

    def parse(self) -> Node:
        node = self.expr()
        if self.cur.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.cur.text!r}", self.cur.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.cur.text in ("+", "-") and self.cur.kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.cur.text in ("*", "/") and self.cur.kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.cur.kind == "op" and self.cur.text == "-":
            self.take()
            return Neg(self.unary())
        if self.cur.kind == "op" and self.cur.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = self.cur.text == "("
        if paren:
            self.take()
        sign = 1
        if self.cur.text in ("-", "+"):
            sign = -1 if self.take().text == "-" else 1
        t = self.take()
        if t.kind != "num" or not t.text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", t.pos)
        if paren:
            self.expect(")")
        return sign * int(t.text)

    def atom(self) -> Node:
        t = self.take()
        if t.kind == "num":
            return Num(Fraction(t.text))
        if t.kind == "name":
            name = t.text
            if name == "pi":
                return Pi()
            if name in FUNCTIONS:
                if self.cur.text != "(":
                    raise ExprSyntaxError(f"function {name!r} requires parentheses", self.cur.pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            m = re.fullmatch(r"x(\d+)", name)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.dim:
                    raise VariableOutOfRange(f"variable {name} exceeds dimension {self.dim}", t.pos)
                return Var(k - 1)
            raise UnknownIdentifier(f"unknown identifier {name!r}", t.pos)
        if t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"unexpected {found}", t.pos)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _format_number(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    den, k = q.denominator, 0
    while den % 10 == 0 or den % 2 == 0 or den % 5 == 0:
        if den % 10 == 0:
            den //= 10
        elif den % 2 == 0:
            den //= 2
        else:
            den //= 5
        k += 1
    if den != 1:
        # not produced by the parser; printed as a quotient
        return f"({q.numerator}/{q.denominator})"
    scaled = q * 10 ** k
    digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
    s = f"{digits[:-k]}.{digits[-k:]}".rstrip("0")
    return ("-" if q < 0 else "") + s


def to_text(node: Node) -> str:
    if isinstance(node, Num):
        return _format_number(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) < 5 or (isinstance(node.base, Num) and node.base.value < 0):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _PREC[node.op]
    left, right = to_text(node.left), to_text(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

class Jet:
    """Batch of second-order Taylor data: value ``(B,)``, gradient ``(B, n)``, Hessian ``(B, n, n)``.

    ``g`` and ``h`` are ``None`` when not requested.
    """

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g=None, h=None):
        self.v, self.g, self.h = v, g, h

    @classmethod
    def constant(cls, c: float, B: int, n: int, order: int) -> "Jet":
        return cls(np.full(B, float(c)),
                   np.zeros((B, n)) if order >= 1 else None,
                   np.zeros((B, n, n)) if order >= 2 else None)

    @classmethod
    def variable(cls, X: np.ndarray, k: int, order: int) -> "Jet":
        B, n = X.shape
        g = h = None
        if order >= 1:
            g = np.zeros((B, n))
            g[:, k] = 1.0
        if order >= 2:
            h = np.zeros((B, n, n))
        return cls(X[:, k].copy(), g, h)

    def chain(self, f0, f1, f2) -> "Jet":
        g = h = None
        if self.g is not None:
            g = f1[:, None] * self.g
        if self.h is not None:
            h = f1[:, None, None] * self.h + f2[:, None, None] * np.einsum("bi,bj->bij", self.g, self.g)
        return Jet(f0, g, h)

    def __add__(self, o: "Jet") -> "Jet":
        return Jet(self.v + o.v,
                   None if self.g is None else self.g + o.g,
                   None if self.h is None else self.h + o.h)

    def __sub__(self, o: "Jet") -> "Jet":
        return Jet(self.v - o.v,
                   None if self.g is None else self.g - o.g,
                   None if self.h is None else self.h - o.h)

    def __neg__(self) -> "Jet":
        return Jet(-self.v,
                   None if self.g is None else -self.g,
                   None if self.h is None else -self.h)

    def __mul__(self, o: "Jet") -> "Jet":
        g = h = None
        if self.g is not None:
            g = self.v[:, None] * o.g + o.v[:, None] * self.g
        if self.h is not None:
            cross = np.einsum("bi,bj->bij", self.g, o.g)
            h = (self.v[:, None, None] * o.h + o.v[:, None, None] * self.h
                 + cross + cross.transpose(0, 2, 1))
        return Jet(self.v * o.v, g, h)

    def reciprocal(self) -> "Jet":
        if np.any(self.v == 0):
            raise DomainError("division by zero")
        r = 1.0 / self.v
        return self.chain(r, -r * r, 2 * r * r * r)

    def power(self, k: int) -> "Jet":
        u = self.v
        if k < 0 and np.any(u == 0):
            raise DomainError("negative power of zero")
        if k == 0:
            return self.chain(np.ones_like(u), np.zeros_like(u), np.zeros_like(u))
        f0 = u ** k
        f1 = k * u ** (k - 1) if k != 1 else np.ones_like(u)
        if k in (1, 2):
            f2 = np.full_like(u, float(k * (k - 1)))
        else:
            f2 = k * (k - 1) * u ** (k - 2)
        return self.chain(f0, f1, f2)


def _jet(node: Node, X: np.ndarray, order: int) -> Jet:
    B, n = X.shape
    if isinstance(node, Num):
        return Jet.constant(float(node.value), B, n, order)
    if isinstance(node, Pi):
        return Jet.constant(np.pi, B, n, order)
    if isinstance(node, Var):
        return Jet.variable(X, node.index, order)
    if isinstance(node, Neg):
        return -_jet(node.operand, X, order)
    if isinstance(node, Pow):
        return _jet(node.base, X, order).power(node.exponent)
    if isinstance(node, BinOp):
        a = _jet(node.left, X, order)
        b = _jet(node.right, X, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a * b.reciprocal()
    if isinstance(node, Call):
        a = _jet(node.arg, X, order)
        u = a.v
        if node.func == "sin":
            s, c = np.sin(u), np.cos(u)
            return a.chain(s, c, -s)
        if node.func == "cos":
            s, c = np.sin(u), np.cos(u)
            return a.chain(c, -s, -c)
        if node.func == "exp":
            e = np.exp(u)
            return a.chain(e, e, e)
        if node.func == "sqrt":
            if np.any(u < 0):
                raise DomainError("sqrt of a negative number")
            if order >= 1 and np.any(u == 0):
                raise DomainError("sqrt is not differentiable at 0")
            r = np.sqrt(u)
            with np.errstate(divide="ignore"):
                d1 = 0.5 / r
            return a.chain(r, d1, -0.25 / (r * u) if order >= 2 else d1)
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

class Expression:
    """A parsed function ``R^dim -> R``."""

    def __init__(self, root: Node, dim: int, text: str | None = None):
        self.root = root
        self.dim = dim
        self.text = text if text is not None else to_text(root)

    def __str__(self):
        return to_text(self.root)

    def __repr__(self):
        return f"Expression({self.text!r}, dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root and self.dim == other.dim

    def __hash__(self):
        return hash((self.root, self.dim))

    def jet(self, X, order: int = 2) -> Jet:
        """Value and derivatives at a batch of points ``X`` of shape ``(B, dim)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"points must have {self.dim} coordinates")
        with np.errstate(over="ignore", invalid="ignore"):
            return _jet(self.root, X, order)

    def values(self, X) -> np.ndarray:
        return self.jet(X, 0).v

    def gradients(self, X) -> np.ndarray:
        return self.jet(X, 1).g


def parse(text: str, dim: int) -> Expression:
    """Parse expression text over variables ``x1..x{dim}``."""
    return Expression(_Parser(text, dim).parse(), dim, text)


def evaluate(e: Expression, x) -> float:
    return float(e.jet(np.asarray(x, dtype=float)[None, :], 0).v[0])


def gradient(e: Expression, x) -> np.ndarray:
    return e.jet(np.asarray(x, dtype=float)[None, :], 1).g[0]


def hessian(e: Expression, x) -> np.ndarray:
    H = e.jet(np.asarray(x, dtype=float)[None, :], 2).h[0]
    return 0.5 * (H + H.T)


class InvarianceReport(NamedTuple):
    invariant: bool
    worst: float
    worst_point: np.ndarray | None
    worst_generator: int | None


def sample_points(dim: int, samples: int, box=(-1.0, 1.0), seed: int = 0) -> np.ndarray:
    """Deterministic quasi-random points (scrambled Halton) in ``box^dim``."""
    pts = qmc.Halton(d=dim, scramble=True, seed=seed).random(samples)
    lo, hi = box
    return lo + (hi - lo) * pts


def check_invariance(e: Expression, G, samples: int = 64, tol: float = 1e-9,
                     box=None, include_lattice: bool = True) -> InvarianceReport:
    """Check ``f(g x) == f(x)`` for every generator ``g`` of ``G`` at sample points.

    With a lattice, unit translations are checked too and points are drawn
    from the unit cube.
    """
    if G.dim != e.dim:
        raise ValueError("group and expression dimensions differ")
    if box is None:
        box = (0.0, 1.0) if G.lattice else (-1.0, 1.0)
    X = sample_points(e.dim, samples, box)
    f0 = e.values(X)
    maps = [G.elements[i].apply for i in G.generators]
    if G.lattice and include_lattice:
        for k in range(e.dim):
            shift = np.eye(e.dim)[k]
            maps.append(lambda Y, s=shift: Y + s)
    worst, where, which = 0.0, None, None
    for k, m in enumerate(maps):
        err = np.abs(e.values(m(X)) - f0)
        if err.size and not np.all(np.isfinite(err)):
            return InvarianceReport(False, float("inf"), None, k)
        i = int(np.argmax(err)) if err.size else 0
        if err.size and err[i] > worst:
            worst, where, which = float(err[i]), X[i], k
    return InvarianceReport(worst <= tol, worst, where, which)
