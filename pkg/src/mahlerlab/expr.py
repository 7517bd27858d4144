"""Rational expression trees over (x, y, z) with dual-number derivatives.

Carrier for the decomposition entries f_j, g_j and their tau-pullbacks.
Evaluation works on plain complex scalars or numpy arrays; directional
derivatives come from forward-mode dual arithmetic, so there is no step
size to tune anywhere.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = ["Dual", "RationalExpr", "parse_expr", "ExprParseError"]


class ExprParseError(ValueError):
    pass


class Dual:
    """First-order dual number a + b*eps over complex scalars or arrays."""

    __slots__ = ("val", "eps")

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val + o.val, self.eps + o.eps)
        return Dual(self.val + o, self.eps)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val - o.val, self.eps - o.eps)
        return Dual(self.val - o, self.eps)

    def __rsub__(self, o):
        return Dual(o - self.val, -self.eps)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val * o.val, self.val * o.eps + self.eps * o.val)
        return Dual(self.val * o, self.eps * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val / o.val, (self.eps * o.val - self.val * o.eps) / (o.val * o.val))
        return Dual(self.val / o, self.eps / o)

    def __rtruediv__(self, o):
        return Dual(o / self.val, -o * self.eps / (self.val * self.val))

    def __pow__(self, n: int):
        n = int(n)
        if n == 0:
            one = self.val * 0 + 1.0
            return Dual(one, self.val * 0)
        v = self.val ** n
        return Dual(v, n * self.val ** (n - 1) * self.eps)


class RationalExpr:
    """Expression tree node; operators {+, -, *, /, integer power}."""

    __slots__ = ("op", "args", "value", "name")

    def __init__(self, op, args=(), value=None, name=None):
        self.op = op
        self.args = tuple(args)
        self.value = value
        self.name = name

    # constructors
    @classmethod
    def const(cls, c):
        return cls("const", value=Fraction(c))

    @classmethod
    def var(cls, name):
        return cls("var", name=name)

    def __add__(self, o):
        return RationalExpr("+", (self, _coerce(o)))

    def __radd__(self, o):
        return RationalExpr("+", (_coerce(o), self))

    def __sub__(self, o):
        return RationalExpr("-", (self, _coerce(o)))

    def __rsub__(self, o):
        return RationalExpr("-", (_coerce(o), self))

    def __mul__(self, o):
        return RationalExpr("*", (self, _coerce(o)))

    def __rmul__(self, o):
        return RationalExpr("*", (_coerce(o), self))

    def __truediv__(self, o):
        return RationalExpr("/", (self, _coerce(o)))

    def __rtruediv__(self, o):
        return RationalExpr("/", (_coerce(o), self))

    def __neg__(self):
        return RationalExpr("neg", (self,))

    def __pow__(self, n):
        return RationalExpr("pow", (self,), value=int(n))

    # evaluation

    def eval(self, point):
        """Evaluate at a point: mapping var -> complex scalar or ndarray."""
        op = self.op
        if op == "const":
            return complex(self.value)
        if op == "var":
            return point[self.name]
        a = self.args[0].eval(point)
        if op == "neg":
            return -a
        if op == "pow":
            return a ** self.value
        b = self.args[1].eval(point)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        raise AssertionError(op)

    def eval_dual(self, point, direction):
        """Value and directional derivative along ``direction`` (same keys)."""
        duals = {
            k: Dual(point[k], direction.get(k, 0.0)) for k in point
        }
        out = self._eval_dual(duals)
        if isinstance(out, Dual):
            return out
        return Dual(out, 0.0 * out)

    def _eval_dual(self, duals):
        op = self.op
        if op == "const":
            return complex(self.value)
        if op == "var":
            return duals[self.name]
        a = self.args[0]._eval_dual(duals)
        if op == "neg":
            return -a
        if op == "pow":
            if not isinstance(a, Dual):
                return a ** self.value
            return a ** self.value
        b = self.args[1]._eval_dual(duals)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        raise AssertionError(op)

    # structure

    def subs(self, mapping) -> "RationalExpr":
        """Substitute variables by expressions (used for the tau pullback)."""
        op = self.op
        if op == "const":
            return self
        if op == "var":
            return mapping.get(self.name, self)
        args = tuple(a.subs(mapping) for a in self.args)
        return RationalExpr(op, args, value=self.value, name=self.name)

    def tau(self) -> "RationalExpr":
        """Pullback along (x, y, z) -> (1/x, 1/y, 1/z)."""
        one = RationalExpr.const(1)
        return self.subs({v: one / RationalExpr.var(v) for v in self.free_vars()})

    def free_vars(self) -> set:
        if self.op == "var":
            return {self.name}
        if self.op == "const":
            return set()
        out = set()
        for a in self.args:
            out |= a.free_vars()
        return out

    def __repr__(self):
        return f"RationalExpr({self.to_string()!r})"

    def to_string(self) -> str:
        op = self.op
        if op == "const":
            return str(self.value)
        if op == "var":
            return self.name
        if op == "neg":
            return f"-({self.args[0].to_string()})"
        if op == "pow":
            return f"({self.args[0].to_string()})^{self.value}"
        a, b = (x.to_string() for x in self.args)
        return f"({a}{op}{b})"


def _coerce(v):
    if isinstance(v, RationalExpr):
        return v
    return RationalExpr.const(v)


# parser shares the grammar of poly.parse_poly


def parse_expr(text: str) -> RationalExpr:
    sc = _Scanner(text)
    node = _sum(sc)
    if sc.peek():
        raise ExprParseError(f"trailing input: {text[sc.pos:]!r}")
    return node


class _Scanner:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def peek(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self):
        ch = self.peek()
        self.pos += 1
        return ch

    def number(self):
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return int(self.text[start : self.pos])


def _sum(sc):
    node = _product(sc)
    while True:
        ch = sc.peek()
        if ch == "+":
            sc.take()
            node = node + _product(sc)
        elif ch == "-":
            sc.take()
            node = node - _product(sc)
        else:
            return node


def _product(sc):
    node = _power(sc)
    while True:
        ch = sc.peek()
        if ch == "*":
            sc.take()
            node = node * _power(sc)
        elif ch == "/":
            sc.take()
            node = node / _power(sc)
        elif ch == "(" or ch.isalpha():
            node = node * _power(sc)
        else:
            return node


def _power(sc):
    base = _atom(sc)
    if sc.peek() == "^":
        sc.take()
        sign = 1
        if sc.peek() == "-":
            sc.take()
            sign = -1
        if not sc.peek().isdigit():
            raise ExprParseError("exponent must be an integer")
        return base ** (sign * sc.number())
    return base


def _atom(sc):
    ch = sc.peek()
    if ch == "(":
        sc.take()
        node = _sum(sc)
        if sc.take() != ")":
            raise ExprParseError("unbalanced parentheses")
        return node
    if ch == "-":
        sc.take()
        return -_power(sc)
    if ch == "+":
        sc.take()
        return _power(sc)
    if ch.isdigit():
        n = sc.number()
        if sc.peek() == "/":
            # rational constant like 3/2 only when followed by a digit
            save = sc.pos
            sc.take()
            if sc.peek().isdigit():
                d = sc.number()
                return RationalExpr.const(Fraction(n, d))
            sc.pos = save
        return RationalExpr.const(n)
    if ch.isalpha():
        return RationalExpr.var(sc.take())
    raise ExprParseError(f"unexpected character {ch!r}")
