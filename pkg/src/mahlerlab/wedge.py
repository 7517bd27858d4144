"""Wedge decompositions x^y^z = sum_j c_j f_j ^ (1-f_j) ^ g_j.

Construction for the cyclotomic family A(x) + B(x) y + C(x) z, the
(1/x, 1/y, 1/z) pullback, and numeric certification: a decomposition is
accepted when the 2-form identity eta(x, y, z) = sum c_j eta(f_j, 1-f_j, g_j)
holds pointwise at random samples of the surface, which is exactly what
every downstream boundary integral consumes.

Cyclotomic reduction, with g any bystander function (all equalities up to
2-torsion, which the eta pairing cannot see):

    x ^ g ^ Phi_1      = -x ^ (1-x) ^ g
    x ^ g ^ Phi_n      = -(1/n) x^n ^ (1-x^n) ^ g - sum_{d|n, d<n} x ^ g ^ Phi_d
    x ^ g ^ Phi_{2m}   = -(1/m) (-x^m) ^ (1+x^m) ^ g
                          - sum_{d|2m, d not | m, d<2m} x ^ g ^ Phi_d

the even form mirroring the worked examples' hand reductions (so n = 2
emits -(-x) ^ (1+x) ^ g and n = 4 a single half-weight term).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .expr import RationalExpr, parse_expr
from .forms import TangentSample, eval_eta
from .mahler import fiber_roots
from .poly import LaurentPoly, parse_poly

__all__ = [
    "Decomposition",
    "tau_pull",
    "lambda_decomposition",
    "cyclotomic_decompose",
    "decomposition_defect",
    "load_decompositions",
    "NonCyclotomicError",
    "SamplingError",
]

_DATA = Path(__file__).parent / "data" / "decompositions"


class NonCyclotomicError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass
class Decomposition:
    """Ordered terms (c, f, g) representing sum_j c_j {f_j}_2 (x) g_j."""

    terms: list

    def __post_init__(self):
        clean = []
        for c, f, g in self.terms:
            c = Fraction(c)
            if not isinstance(f, RationalExpr):
                f = parse_expr(str(f))
            if not isinstance(g, RationalExpr):
                g = parse_expr(str(g))
            if f.op == "const" and f.value == 1:
                raise ValueError("decomposition entry f = 1 is degenerate")
            clean.append((c, f, g))
        self.terms = clean

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        return Decomposition(self.terms + other.terms)


def tau_pull(d: Decomposition) -> Decomposition:
    """Substitute (x, y, z) -> (1/x, 1/y, 1/z) in every entry."""
    return Decomposition([(c, f.tau(), g.tau()) for c, f, g in d.terms])


def lambda_decomposition(d: Decomposition) -> Decomposition:
    """The symmetrized decomposition xi + xi* feeding the boundary formula."""
    return d + tau_pull(d)


# ---------------------------------------------------------------------------
# cyclotomic machinery (univariate, exact)


def _poly_trim(c):
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _poly_trim(out)


def _poly_divmod(a, b):
    a = list(a)
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    while len(a) >= len(b) and _poly_trim(list(a)):
        k = len(a) - len(b)
        f = a[-1] / b[-1]
        q[k] = f
        for i, bi in enumerate(b):
            a[i + k] -= f * bi
        _poly_trim(a)
    return _poly_trim(q), _poly_trim(a)


def _cyclotomic(n):
    num = [Fraction(-1)] + [Fraction(0)] * (n - 1) + [Fraction(1)]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            num, r = _poly_divmod(num, _cyclotomic(d))
            assert not r
    return num


def _coeff_list(P: LaurentPoly):
    """Fraction coefficient list (low to high) for a polynomial in x."""
    P = P.drop_unused()
    if len(P.variables) > 1:
        raise NonCyclotomicError("input must be univariate in x")
    if not P.variables:
        ((e, c),) = P.terms.items() if P.terms else (((), Fraction(0)),)
        return [Fraction(c)], 0
    shift = -min(0, P.min_degree_in(P.variables[0]))
    Q = P.normalized_monomial() if shift else P
    deg = Q.degree_in(Q.variables[0])
    out = [Fraction(0)] * (deg + 1)
    for (e,), c in Q.terms.items():
        out[e] = c
    return out, -shift


def _factor_cyclotomic(P: LaurentPoly, maxn: int = 64):
    """(sign, x-power, {n: exponent}) or NonCyclotomicError."""
    coeffs, xshift = _coeff_list(P)
    if not _poly_trim(list(coeffs)):
        raise NonCyclotomicError("zero polynomial")
    k = 0
    while coeffs[0] == 0:
        coeffs = coeffs[1:]
        k += 1
    exps = {}
    n = 1
    while len(coeffs) > 1:
        if n > maxn:
            raise NonCyclotomicError("non-cyclotomic factor remains")
        phi = _cyclotomic(n)
        q, r = _poly_divmod(list(coeffs), phi)
        if q and not r:
            exps[n] = exps.get(n, 0) + 1
            coeffs = q
        else:
            n += 1
    const = coeffs[0]
    if const not in (1, -1):
        raise NonCyclotomicError(f"leftover constant {const} is not a unit")
    return int(const), k + xshift, exps


def _reduce_cyclotomic(n: int, g: RationalExpr, c: Fraction, out: list):
    """Terms of c * (x ^ g ^ Phi_n), pushed onto ``out``."""
    x = RationalExpr.var("x")
    if n == 1:
        out.append((-c, x, g))
        return
    if n % 2 == 0:
        m = n // 2
        xm = x ** m if m > 1 else x
        out.append((Fraction(-c, m), -xm, g))
        for d in range(1, n):
            if n % d == 0 and m % d != 0:
                _reduce_cyclotomic(d, g, -c, out)
    else:
        out.append((Fraction(-c, n), x ** n, g))
        for d in range(1, n):
            if n % d == 0:
                _reduce_cyclotomic(d, g, -c, out)


def cyclotomic_decompose(A, B, C) -> Decomposition:
    """Decomposition for P = A(x) + B(x) y + C(x) z, cyclotomic A, B, C.

    Implements the standard rewriting x^y^z = x^y^(A/C) + (-By/A)^(1+By/A)^x
    - x^(B/A)^(1+By/A) followed by the recursive cyclotomic reduction of the
    univariate wedges.  Every emitted f is +-x^k, the -By/A primitive, or
    1 - (+-x^k); powers of x inside A, B, C contribute nothing (repeated
    slot), and unit constants are invisible to the 2-form check.
    """
    A = parse_poly(A) if isinstance(A, str) else A
    B = parse_poly(B) if isinstance(B, str) else B
    C = parse_poly(C) if isinstance(C, str) else C
    _, _, exps_a = _factor_cyclotomic(A)
    _, _, exps_b = _factor_cyclotomic(B)
    _, _, exps_c = _factor_cyclotomic(C)
    terms: list = []
    y = RationalExpr.var("y")
    # part 1: x ^ y ^ (A/C)
    part1 = dict(exps_a)
    for n, e in exps_c.items():
        part1[n] = part1.get(n, 0) - e
    for n, e in sorted(part1.items()):
        if e:
            _reduce_cyclotomic(n, y, Fraction(e), terms)
    # part 2: the mixed primitive (-By/A) ^ (1 + By/A) ^ x
    a_expr = parse_expr(_poly_string(A))
    b_expr = parse_expr(_poly_string(B))
    if A == LaurentPoly.constant(1, A.variables):
        quot = b_expr * y
    else:
        quot = b_expr * y / a_expr
    gmix = RationalExpr.const(1) + quot
    terms.append((Fraction(1), -quot, RationalExpr.var("x")))
    # part 3: x ^ (B/A) ^ (1 + By/A)
    part3 = dict(exps_b)
    for n, e in exps_a.items():
        part3[n] = part3.get(n, 0) - e
    for n, e in sorted(part3.items()):
        if e:
            _reduce_cyclotomic(n, gmix, Fraction(e), terms)
    return Decomposition(terms)


def _poly_string(P: LaurentPoly) -> str:
    s = P.to_string()
    return s.replace("^", "^")


# ---------------------------------------------------------------------------
# numeric certification


def _surface_samples(P: LaurentPoly, n: int, seed: int):
    """Random points of the surface near the torus, with two tangents each."""
    P3 = P.drop_unused().embed(("x", "y", "z"))
    rng = random.Random(seed)
    Px = P3.derivative("x")
    Py = P3.derivative("y")
    Pz = P3.derivative("z")
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > 60 * n:
            raise SamplingError("could not draw enough admissible samples")
        t = rng.uniform(-np.pi, np.pi)
        s = rng.uniform(-np.pi, np.pi)
        x = (1 + rng.uniform(-0.1, 0.1)) * np.exp(1j * t)
        y = (1 + rng.uniform(-0.1, 0.1)) * np.exp(1j * s)
        try:
            roots = fiber_roots(P3, x, y)
        except Exception:
            continue
        z = roots[rng.randrange(len(roots))]
        if abs(z) < 1e-6 or abs(z) > 1e6:
            continue
        pt = {"x": x, "y": y, "z": z}
        gz = Pz.eval(pt)
        if abs(gz) < 1e-8:
            continue
        u = (1.0, 0.0, -Px.eval(pt) / gz)
        v = (0.0, 1.0, -Py.eval(pt) / gz)
        # mix the coordinate tangents into two generic directions
        a1, a2 = complex(rng.gauss(0, 1), rng.gauss(0, 1)), complex(
            rng.gauss(0, 1), rng.gauss(0, 1)
        )
        b1, b2 = complex(rng.gauss(0, 1), rng.gauss(0, 1)), complex(
            rng.gauss(0, 1), rng.gauss(0, 1)
        )
        t1 = tuple(a1 * uu + a2 * vv for uu, vv in zip(u, v))
        t2 = tuple(b1 * uu + b2 * vv for uu, vv in zip(u, v))
        out.append(TangentSample((x, y, z), (t1, t2)))
    return out


_X, _Y, _Z = (RationalExpr.var(v) for v in ("x", "y", "z"))
_ONE = RationalExpr.const(1)


def decomposition_defect(P: LaurentPoly, d: Decomposition, samples: int = 100,
                         seed: int = 0, target=None) -> float:
    """max |eta(x,y,z) - sum_j c_j eta(f_j, 1-f_j, g_j)| over surface samples.

    ``target`` overrides the left-hand side (used by the tau-symmetry
    check, where it is eta(1/x, 1/y, 1/z)).  Correct decompositions stay
    below 1e-8 times the sample scale; a single flipped sign shows up at
    unit scale.
    """
    if target is None:
        target = (_X, _Y, _Z)
    worst = 0.0
    pts = _surface_samples(P, samples, seed)
    for smp in pts:
        try:
            lhs = eval_eta(*target, smp)
            rhs = 0.0
            for c, f, g in d.terms:
                rhs += float(c) * eval_eta(f, _ONE - f, g, smp)
        except Exception:
            continue  # resample policy: excluded-locus hits are skipped
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# shipped decompositions


def load_decompositions(path=None) -> dict:
    """Registry decompositions: key -> (polynomial, Decomposition, note)."""
    base = Path(path) if path else _DATA
    out = {}
    for fp in sorted(base.glob("*.json")):
        row = json.loads(fp.read_text())
        d = Decomposition(
            [(Fraction(t["c"]), t["f"], t["g"]) for t in row["terms"]]
        )
        out[row["key"]] = (row["polynomial"], d, row.get("note", ""))
    return out
