"""Dilogarithm family: Li2, the Bloch-Wigner function D, the five-term
relation, and derivatives of odd quadratic Dirichlet L-functions at s = -1.

Everything here is branch-safe: principal log/arg throughout, and D is
single-valued on the whole Riemann sphere by construction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, pi

__all__ = [
    "INFINITY",
    "li2",
    "bloch_wigner",
    "five_term_defect",
    "QuadraticCharacter",
    "chi_minus3",
    "chi_minus4",
    "dirichlet_lprime_minus1",
    "D_MAX",
]

#: Distinguished point at infinity on the projective line.
INFINITY = float("inf")

#: Maximum of |D| on the sphere, attained at the primitive sixth root of unity.
D_MAX = 1.0149416064096536

_PI2_6 = pi * pi / 6.0

_SERIES_RADIUS = 0.5
_INVERSION_RADIUS = 2.0


def _bernoulli_floats(n: int) -> list[float]:
    # exact recurrence sum_{j<=m} C(m+1,j) B_j = 0, then rounded to float
    bs = [Fraction(1)]
    for m in range(1, n + 1):
        acc = Fraction(0)
        c = 1  # binomial C(m+1, j), updated after use
        for j in range(m):
            acc += c * bs[j]
            c = c * (m + 1 - j) // (j + 1)
        bs.append(-acc / (m + 1))
    return [float(b) for b in bs]


_BERNOULLI = _bernoulli_floats(96)


def _li2_series(z: complex) -> complex:
    # plain power series, |z| <= 1/2: geometric tail, <= 52 terms
    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(1, 200):
        term *= z
        piece = term / (k * k)
        total += piece
        if abs(piece) < 1e-18 * (1.0 + abs(total)):
            break
    return total


def _li2_log_series(z: complex) -> complex:
    # Bernoulli acceleration in u = -log(1-z); converges for |u| < 2*pi,
    # which covers the annulus 1/2 < |z| < 2 left by the other branches
    u = -cmath.log(1.0 - z)
    total = 0.0 + 0.0j
    upow = u
    fact = 1.0
    for n, b in enumerate(_BERNOULLI):
        if n > 0:
            upow *= u
            fact *= n
        piece = b * upow / ((n + 1) * fact)
        total += piece
        # odd-index Bernoulli numbers vanish; only even terms witness convergence
        if n >= 4 and n % 2 == 0 and abs(piece) < 1e-18 * (1.0 + abs(total)):
            break
    return total


def li2(z: complex) -> complex:
    """Principal dilogarithm Li2(z), analytic off [1, infinity).

    Series evaluation for |z| <= 1/2, the inversion identity for |z| >= 2,
    and a Bernoulli-accelerated log series on the remaining annulus.  On the
    cut the value is the lower half-plane limit (matching arg(-x) = +pi).
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("li2 requires a finite argument")
    if z == 0:
        return 0.0 + 0.0j
    if z == 1:
        return complex(_PI2_6)
    r = abs(z)
    if r <= _SERIES_RADIUS:
        return _li2_series(z)
    if r >= _INVERSION_RADIUS:
        lg = cmath.log(-z)
        return -li2(1.0 / z) - _PI2_6 - 0.5 * lg * lg
    if abs(1.0 - z) <= _SERIES_RADIUS:
        # Euler reflection; the log product vanishes as z -> 1
        w = 1.0 - z
        corr = cmath.log(z) * cmath.log(w) if w != 0 else 0.0
        return _PI2_6 - corr - _li2_series(w)
    return _li2_log_series(z)


def bloch_wigner(z) -> float:
    """Bloch-Wigner dilogarithm D(z) = Im Li2(z) + arg(1-z) log|z|.

    Single-valued and real-analytic off {0, 1, infinity}, continuous on all
    of P^1(C) with D(0) = D(1) = D(infinity) = 0.  For |z| >= 1 the defining
    branch is D(z) = -D(1/z).
    """
    if z is None:
        return 0.0
    if isinstance(z, complex):
        if math.isnan(z.real) or math.isnan(z.imag):
            raise ValueError("bloch_wigner: NaN is not a point of P^1")
        if math.isinf(z.real) or math.isinf(z.imag):
            return 0.0
    else:
        x = float(z)
        if math.isnan(x):
            raise ValueError("bloch_wigner: NaN is not a point of P^1")
        if math.isinf(x):
            return 0.0
        z = complex(x)
    if z.imag == 0.0:
        return 0.0
    r = abs(z)
    if r > 1.0:
        return -bloch_wigner(1.0 / z)
    if abs(1.0 - z) < 1e-300:
        return li2(z).imag
    return li2(z).imag + cmath.phase(1.0 - z) * math.log(r)


class DegenerateArgumentError(ValueError):
    """Raised when an operation receives an argument outside its domain."""


def five_term_defect(x: complex, y: complex) -> float:
    """Defect of the five-term relation at (x, y); zero up to roundoff.

    D(x) + D(y) + D(1-xy) + D((1-x)/(1-xy)) + D((1-y)/(1-xy)).
    """
    x = complex(x)
    y = complex(y)
    xy = x * y
    for w, what in ((x, "x"), (y, "y")):
        if abs(w) < 1e-13 or abs(w - 1.0) < 1e-13:
            raise DegenerateArgumentError(f"five_term_defect: {what} in {{0, 1}}")
    if abs(1.0 - xy) < 1e-13:
        raise DegenerateArgumentError("five_term_defect: xy = 1 is degenerate")
    return (
        bloch_wigner(x)
        + bloch_wigner(y)
        + bloch_wigner(1.0 - xy)
        + bloch_wigner((1.0 - x) / (1.0 - xy))
        + bloch_wigner((1.0 - y) / (1.0 - xy))
    )


@dataclass(frozen=True)
class QuadraticCharacter:
    """Quadratic Dirichlet character given by an explicit value table.

    ``values[k]`` is the character at ``k mod modulus``; entries lie in
    {-1, 0, +1}.  Tables are validated on construction: completely
    multiplicative, and zero exactly on residues sharing a factor with the
    modulus.
    """

    modulus: int
    values: tuple[int, ...]

    def __post_init__(self):
        f = self.modulus
        if f < 2 or len(self.values) != f:
            raise ValueError("character table must list one value per residue")
        for k, v in enumerate(self.values):
            if v not in (-1, 0, 1):
                raise ValueError("character values must lie in {-1, 0, +1}")
            if (v == 0) != (gcd(k, f) > 1):
                raise ValueError("character must vanish exactly off (Z/f)^*")
        for a in range(f):
            for b in range(f):
                if self.values[(a * b) % f] != self.values[a] * self.values[b]:
                    raise ValueError("character table is not multiplicative")

    def __call__(self, k: int) -> int:
        return self.values[k % self.modulus]

    @property
    def is_odd(self) -> bool:
        return self(self.modulus - 1) == -1


def chi_minus3() -> QuadraticCharacter:
    """The odd quadratic character of conductor 3."""
    return QuadraticCharacter(3, (0, 1, -1))


def chi_minus4() -> QuadraticCharacter:
    """The odd quadratic character of conductor 4."""
    return QuadraticCharacter(4, (0, 1, 0, -1))


def dirichlet_lprime_minus1(chi: QuadraticCharacter) -> float:
    """L'(chi, -1) = (f / 4 pi) * sum_k chi(k) D(e^{2 pi i k / f}).

    Requires an odd quadratic character; strictly positive for the conductor
    3 and 4 characters.
    """
    if not isinstance(chi, QuadraticCharacter):
        raise TypeError("dirichlet_lprime_minus1 expects a QuadraticCharacter")
    if not chi.is_odd:
        raise DegenerateArgumentError("character must be odd: chi(-1) = -1")
    f = chi.modulus
    acc = 0.0
    for k in range(1, f + 1):
        c = chi(k)
        if c:
            acc += c * bloch_wigner(cmath.exp(2j * pi * k / f))
    return f * acc / (4.0 * pi)
