"""Multivariate Laurent polynomials with exact rational coefficients.

The text format accepted by :func:`parse_poly` covers the monomial strings
used throughout the identity registry: ``+ - * ^``, parentheses, integer or
rational constants, and negative exponents, e.g. ``(1+x)*(1+y)*(x+y) + z``
or ``x^-2*y + 3/2``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

__all__ = ["LaurentPoly", "parse_poly", "PolyParseError"]

_CANONICAL_VARS = ("x", "y", "z")


class PolyParseError(ValueError):
    pass


class LaurentPoly:
    """Laurent polynomial: map from integer exponent vectors to Fractions.

    Instances are immutable in practice; all arithmetic returns new objects.
    Zero polynomials keep an empty term map.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Iterable[str], terms: Mapping[tuple, Fraction]):
        self.variables = tuple(variables)
        clean = {}
        nv = len(self.variables)
        for exps, c in terms.items():
            c = Fraction(c)
            if c == 0:
                continue
            exps = tuple(int(e) for e in exps)
            if len(exps) != nv:
                raise ValueError("exponent vector length mismatch")
            clean[exps] = clean.get(exps, Fraction(0)) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, c, variables=()):
        c = Fraction(c)
        if c == 0:
            return cls(variables, {})
        return cls(variables, {(0,) * len(tuple(variables)): c})

    @classmethod
    def var(cls, name, variables):
        variables = tuple(variables)
        e = [0] * len(variables)
        e[variables.index(name)] = 1
        return cls(variables, {tuple(e): Fraction(1)})

    # -- structure ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        a, b = self.aligned(other)
        return a.terms == b.terms

    def __hash__(self):
        return hash((self.variables, tuple(sorted(self.terms.items()))))

    def aligned(self, other: "LaurentPoly"):
        """Embed both polynomials into a common variable tuple."""
        if self.variables == other.variables:
            return self, other
        names = [v for v in _CANONICAL_VARS if v in set(self.variables) | set(other.variables)]
        extra = [v for v in list(self.variables) + list(other.variables) if v not in names]
        for v in extra:
            if v not in names:
                names.append(v)
        return self.embed(names), other.embed(names)

    def embed(self, variables) -> "LaurentPoly":
        variables = tuple(variables)
        idx = [variables.index(v) for v in self.variables]
        out = {}
        for exps, c in self.terms.items():
            e = [0] * len(variables)
            for i, ex in zip(idx, exps):
                e[i] = ex
            out[tuple(e)] = c
        return LaurentPoly(variables, out)

    def drop_unused(self) -> "LaurentPoly":
        used = [i for i in range(len(self.variables)) if any(e[i] for e in self.terms)]
        names = tuple(self.variables[i] for i in used)
        return LaurentPoly(
            names, {tuple(e[i] for i in used): c for e, c in self.terms.items()}
        )

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.constant(other, self.variables)
        a, b = self.aligned(other)
        out = dict(a.terms)
        for e, c in b.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return LaurentPoly(a.variables, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.constant(other, self.variables)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return LaurentPoly(self.variables, {e: c * other for e, c in self.terms.items()})
        a, b = self.aligned(other)
        out = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(i + j for i, j in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return LaurentPoly(a.variables, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            return self * Fraction(q.denominator, q.numerator)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        if not other.is_monomial():
            raise PolyParseError("Laurent division only by monomials")
        ((exps, c),) = other.terms.items()
        inv = LaurentPoly(other.variables, {tuple(-e for e in exps): 1 / Fraction(c)})
        return self * inv

    def __pow__(self, n: int):
        n = int(n)
        if n < 0:
            if not self.is_monomial():
                raise PolyParseError("negative power of a non-monomial")
            ((exps, c),) = self.terms.items()
            base = LaurentPoly(self.variables, {tuple(-e for e in exps): 1 / Fraction(c)})
            return base ** (-n)
        out = LaurentPoly.constant(1, self.variables)
        p = self
        while n:
            if n & 1:
                out = out * p
            p = p * p
            n >>= 1
        return out

    def subs_inverse(self, names=None) -> "LaurentPoly":
        """Substitute v -> 1/v for the given variables (all by default)."""
        names = set(self.variables if names is None else names)
        flip = [v in names for v in self.variables]
        out = {}
        for exps, c in self.terms.items():
            e = tuple(-x if f else x for x, f in zip(exps, flip))
            out[e] = c
        return LaurentPoly(self.variables, out)

    def derivative(self, name: str) -> "LaurentPoly":
        i = self.variables.index(name)
        out = {}
        for exps, c in self.terms.items():
            k = exps[i]
            if k == 0:
                continue
            e = list(exps)
            e[i] = k - 1
            e = tuple(e)
            out[e] = out.get(e, Fraction(0)) + c * k
        return LaurentPoly(self.variables, out)

    def normalized_monomial(self) -> "LaurentPoly":
        """Multiply by the monomial clearing all negative exponents."""
        if not self.terms:
            return self
        mins = [min(e[i] for e in self.terms) for i in range(len(self.variables))]
        shift = tuple(-min(m, 0) for m in mins)
        if not any(shift):
            return self
        return LaurentPoly(
            self.variables,
            {tuple(e + s for e, s in zip(exps, shift)): c for exps, c in self.terms.items()},
        )

    # -- views ----------------------------------------------------------

    def degree_in(self, name: str) -> int:
        if not self.terms:
            raise ValueError("zero polynomial has no degree")
        i = self.variables.index(name)
        return max(e[i] for e in self.terms)

    def min_degree_in(self, name: str) -> int:
        i = self.variables.index(name)
        return min(e[i] for e in self.terms)

    def coeffs_in(self, name: str) -> dict:
        """Coefficients as Laurent polynomials in the remaining variables."""
        i = self.variables.index(name)
        rest = tuple(v for v in self.variables if v != name)
        buckets: dict[int, dict] = {}
        for exps, c in self.terms.items():
            k = exps[i]
            e = tuple(x for j, x in enumerate(exps) if j != i)
            buckets.setdefault(k, {})[e] = c
        return {k: LaurentPoly(rest, t) for k, t in buckets.items()}

    def leading_coeff_in(self, name: str) -> "LaurentPoly":
        return self.coeffs_in(name)[self.degree_in(name)]

    # -- evaluation -----------------------------------------------------

    def eval(self, point: Mapping[str, complex]) -> complex:
        total = 0j
        for exps, c in self.terms.items():
            v = complex(c)
            for name, e in zip(self.variables, exps):
                if e:
                    v *= point[name] ** e
            total += v
        return total

    def eval_grid(self, point: Mapping[str, np.ndarray]) -> np.ndarray:
        """Vectorized evaluation; point values may be numpy arrays."""
        shape = None
        for v in point.values():
            if isinstance(v, np.ndarray):
                shape = v.shape
                break
        total = np.zeros(shape if shape is not None else (), dtype=complex)
        for exps, c in self.terms.items():
            v = complex(c)
            term = None
            for name, e in zip(self.variables, exps):
                if e:
                    p = point[name] ** e
                    term = p if term is None else term * p
            total = total + (v if term is None else v * term)
        return total

    # -- formatting -------------------------------------------------------

    def __repr__(self):
        return f"LaurentPoly({self.to_string()!r})"

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, c in sorted(self.terms.items()):
            bits = []
            if c == -1 and any(exps):
                bits.append("-")
            elif c != 1 or not any(exps):
                bits.append(str(c) + "*" if any(exps) else str(c))
            mono = "*".join(
                f"{v}^{e}" if e != 1 else v
                for v, e in zip(self.variables, exps)
                if e
            )
            parts.append("".join(bits) + mono)
        s = " + ".join(parts).replace("+ -", "- ")
        return s


# ---------------------------------------------------------------------------
# parser


class _Scanner:
    def __init__(self, text: str):
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


def _parse_sum(sc: _Scanner, variables):
    node = _parse_product(sc, variables)
    while True:
        ch = sc.peek()
        if ch == "+":
            sc.take()
            node = node + _parse_product(sc, variables)
        elif ch == "-":
            sc.take()
            node = node - _parse_product(sc, variables)
        else:
            return node


def _parse_product(sc: _Scanner, variables):
    node = _parse_power(sc, variables)
    while True:
        ch = sc.peek()
        if ch == "*":
            sc.take()
            node = node * _parse_power(sc, variables)
        elif ch == "/":
            sc.take()
            node = node / _parse_power(sc, variables)
        elif ch == "(" or ch.isalpha():
            # implicit multiplication: 2x, (1+x)(1+y)
            node = node * _parse_power(sc, variables)
        else:
            return node


def _parse_power(sc: _Scanner, variables):
    base = _parse_atom(sc, variables)
    if sc.peek() == "^":
        sc.take()
        sign = 1
        if sc.peek() == "-":
            sc.take()
            sign = -1
        if not sc.peek().isdigit():
            raise PolyParseError("exponent must be an integer")
        return base ** (sign * sc.number())
    return base


def _parse_atom(sc: _Scanner, variables):
    ch = sc.peek()
    if ch == "(":
        sc.take()
        node = _parse_sum(sc, variables)
        if sc.take() != ")":
            raise PolyParseError("unbalanced parentheses")
        return node
    if ch == "-":
        sc.take()
        return -_parse_power(sc, variables)
    if ch == "+":
        sc.take()
        return _parse_power(sc, variables)
    if ch.isdigit():
        return LaurentPoly.constant(sc.number(), variables)
    if ch.isalpha():
        name = sc.take()
        if name not in variables:
            raise PolyParseError(f"unknown variable {name!r}")
        return LaurentPoly.var(name, variables)
    raise PolyParseError(f"unexpected character {ch!r} at {sc.pos}")


def parse_poly(text: str, variables=_CANONICAL_VARS, keep_all_vars=False) -> LaurentPoly:
    """Parse the monomial text format into a LaurentPoly.

    Unused variables are dropped from the result unless ``keep_all_vars``.
    """
    sc = _Scanner(text)
    node = _parse_sum(sc, tuple(variables))
    if sc.peek():
        raise PolyParseError(f"trailing input at position {sc.pos}: {text[sc.pos:]!r}")
    return node if keep_all_vars else node.drop_unused()
