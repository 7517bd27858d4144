"""Formal Bloch-group arithmetic on dilogarithm symbols.

Residue elements u_p are assembled from curve dossiers (divisor tables and
entry values transcribed from the worked examples), normalized with the
degenerate conventions {0}_2 = {1}_2 = {inf}_2 = 0, the 2-torsion kill
{-1}_2 = 0, and the inversion rule {1/z}_2 = -{z}_2 (both consequences of
the five-term relations; the full relation lattice is out of scope, so
sums that agree only modulo deeper relations may normalize differently).

Triviality is decided numerically by the Bloch-Wigner function at all
embeddings, with a three-state verdict: sums supported on real arguments
are reported inconclusive because D vanishes there regardless of the
Bloch-group class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .specialfn import bloch_wigner
from .expr import parse_expr

__all__ = [
    "AlgebraicPoint",
    "FormalDilogSum",
    "DProfile",
    "CurveDossier",
    "residue_element",
    "normalize",
    "d_profile",
    "galois_expand",
    "dossier_residue_sum",
    "load_dossiers",
    "MissingValueError",
]

_DATA = Path(__file__).parent / "data" / "dossiers"

DEGENERATE = ("0", "1", "inf", "degenerate")


class MissingValueError(KeyError):
    """The dossier lacks a valuation or entry value needed for u_p."""


@dataclass(frozen=True)
class AlgebraicPoint:
    """Algebraic number: integer minimal polynomial plus one complex
    approximation per embedding kept by the containing dossier point."""

    minpoly: tuple  # integer coefficients, low to high, positive leading
    embeddings: tuple

    def __post_init__(self):
        mp = tuple(int(c) for c in self.minpoly)
        if not mp or mp[-1] == 0:
            raise ValueError("minimal polynomial needs a nonzero leading term")
        object.__setattr__(self, "minpoly", mp)
        object.__setattr__(
            self, "embeddings", tuple(complex(e) for e in self.embeddings)
        )
        scale = max(abs(c) for c in mp)
        for e in self.embeddings:
            val = sum(c * e**k for k, c in enumerate(mp))
            if abs(val) > 1e-10 * scale * max(1.0, abs(e)) ** (len(mp) - 1):
                raise ValueError(f"embedding {e} does not satisfy the minpoly")
        for i, e1 in enumerate(self.embeddings):
            for e2 in self.embeddings[i + 1 :]:
                if abs(e1 - e2) < 1e-12:
                    raise ValueError("embeddings must be pairwise distinct")

    @classmethod
    def rational(cls, q: Fraction):
        q = Fraction(q)
        return cls((-q.numerator, q.denominator), (complex(q),))

    def inverse(self) -> "AlgebraicPoint":
        mp = tuple(reversed(self.minpoly))
        if mp[-1] < 0:
            mp = tuple(-c for c in mp)
        return AlgebraicPoint(mp, tuple(1 / e for e in self.embeddings))

    def same_number(self, other: "AlgebraicPoint", tol=1e-8) -> bool:
        if _normalize_minpoly(self.minpoly) != _normalize_minpoly(other.minpoly):
            return False
        if len(self.embeddings) != len(other.embeddings):
            return False
        return all(
            abs(a - b) <= tol for a, b in zip(self.embeddings, other.embeddings)
        )


def _normalize_minpoly(mp):
    g = 0
    for c in mp:
        g = math.gcd(g, abs(int(c)))
    g = g or 1
    out = tuple(int(c) // g for c in mp)
    if out[-1] < 0:
        out = tuple(-c for c in out)
    return out


@dataclass
class FormalDilogSum:
    """Rational-coefficient formal sum of dilogarithm symbols {z}_2."""

    terms: list  # (Fraction, AlgebraicPoint | degenerate marker string)

    def __post_init__(self):
        self.terms = [
            (Fraction(c), arg) for c, arg in self.terms if Fraction(c) != 0 or True
        ]

    def __add__(self, other):
        return FormalDilogSum(self.terms + other.terms)

    def __len__(self):
        return len(self.terms)

    def is_empty(self):
        return not self.terms


def normalize(s: FormalDilogSum) -> FormalDilogSum:
    """Drop degenerate symbols, kill 2-torsion arguments, canonicalize
    inversion representatives, merge equal arguments, drop zeros."""
    worked = []
    for c, arg in s.terms:
        c = Fraction(c)
        if c == 0:
            continue
        if isinstance(arg, str):
            if arg in DEGENERATE:
                continue
            arg = AlgebraicPoint.rational(Fraction(arg))
        z0 = arg.embeddings[0]
        # z = 1/z (z^2 = 1): {z}_2 is 2-torsion, zero in the Q-vector space
        if all(abs(e * e - 1) < 1e-10 for e in arg.embeddings):
            continue
        if not _canonical_rep(z0):
            arg = arg.inverse()
            c = -c
        worked.append((c, arg))
    merged: list = []
    for c, arg in worked:
        for k, (c2, arg2) in enumerate(merged):
            if arg.same_number(arg2):
                merged[k] = (c2 + c, arg2)
                break
        else:
            merged.append((c, arg))
    return FormalDilogSum([(c, a) for c, a in merged if c != 0])


def _canonical_rep(z0: complex) -> bool:
    r = abs(z0)
    if abs(r - 1.0) > 1e-9:
        return r > 1.0
    return z0.imag > 1e-12 or (abs(z0.imag) <= 1e-12 and z0.real >= 0)


@dataclass
class DProfile:
    """D-values of a formal sum, one per compatible embedding choice."""

    values: list
    verdict: str  # trivial | nontrivial | inconclusive

    @property
    def is_numerically_trivial(self) -> bool:
        return max((abs(v) for v in self.values), default=0.0) <= 1e-9


def d_profile(s: FormalDilogSum) -> DProfile:
    """Evaluate sum c_i D(arg_i) for each compatible embedding column.

    Arguments carrying several embeddings must agree on the count (they
    come from one residue field and move together); rational entries
    broadcast.  Normalizes first, so exact formal cancellations report as
    trivial rather than inconclusive.
    """
    s = normalize(s)
    if s.is_empty():
        return DProfile([0.0], "trivial")
    counts = {len(a.embeddings) for _, a in s.terms if len(a.embeddings) > 1}
    if len(counts) > 1:
        raise ValueError("incompatible embedding data across arguments")
    n = counts.pop() if counts else 1
    values = []
    for k in range(n):
        acc = 0.0
        for c, a in s.terms:
            e = a.embeddings[k] if len(a.embeddings) > 1 else a.embeddings[0]
            acc += float(c) * bloch_wigner(e)
        values.append(acc)
    if max(abs(v) for v in values) > 1e-9:
        return DProfile(values, "nontrivial")
    return DProfile(values, "inconclusive")


def galois_expand(s: FormalDilogSum) -> FormalDilogSum:
    """Replace each symbol by the sum over all of its stored embeddings.

    This is the geometric-point expansion used by the global residue sum:
    a closed point contributes one symbol per embedding of its residue
    field.
    """
    out = []
    for c, a in s.terms:
        if isinstance(a, str):
            out.append((c, a))
            continue
        for e in a.embeddings:
            out.append((c, AlgebraicPoint(a.minpoly, (e,))))
    return FormalDilogSum(out)


# ---------------------------------------------------------------------------
# dossiers


@dataclass
class CurveDossier:
    """Divisor and value tables for one worked example.

    ``divisors`` maps printed function names to (point, valuation) lists;
    each decomposition term records its g-divisor (and tau-side divisor)
    as an integer combination of those names, plus the entry values f_j(p)
    and (f_j o tau)(p) wherever some valuation is nonzero.
    """

    curve: str
    polynomial: str
    decomposition: str
    points: dict  # name -> {"x": spec, "y": spec} (specs may be partial)
    divisors: dict  # name -> {point: valuation}
    terms: list  # dicts: c, f, g, g_div, g_tau_div, f_values, f_tau_values
    note: str = ""

    def point_names(self):
        return list(self.points)

    def valuation(self, combo, point) -> int:
        v = 0
        for name, mult in combo:
            if name not in self.divisors:
                raise MissingValueError(f"divisor table lacks {name!r}")
            v += mult * self.divisors[name].get(point, 0)
        return v

    def total_degree(self, name) -> int:
        return sum(self.divisors[name].values())


def _parse_value(spec):
    """Value spec -> AlgebraicPoint or a degenerate marker string."""
    if isinstance(spec, str):
        if spec in DEGENERATE:
            return spec
        return AlgebraicPoint.rational(Fraction(spec))
    return AlgebraicPoint(
        tuple(spec["minpoly"]),
        tuple(complex(re, im) for re, im in spec["embeddings"]),
    )


def residue_element(dossier: CurveDossier, point: str) -> FormalDilogSum:
    """u_p = sum_j c_j (v_p(g_j) {f_j(p)}_2 + v_p(g_j o tau) {f_j o tau(p)}_2),
    returned in normalized form."""
    if point not in dossier.points:
        raise MissingValueError(f"unknown point {point!r}")
    terms = []
    for j, row in enumerate(dossier.terms):
        c = Fraction(row["c"])
        for side, values_key in (("g_div", "f_values"), ("g_tau_div", "f_tau_values")):
            v = dossier.valuation(row[side], point)
            if v == 0:
                continue
            vals = row.get(values_key, {})
            if point in vals:
                arg = _parse_value(vals[point])
            else:
                arg = _eval_entry(dossier, row["f"], side.endswith("tau_div"), point)
            terms.append((c * v, arg))
    return normalize(FormalDilogSum(terms))


def _eval_entry(dossier, f_string, tau, point):
    """Evaluate the entry at the point's stored coordinates, if possible."""
    coords = dossier.points[point]
    expr = parse_expr(f_string)
    if tau:
        expr = expr.tau()
    specs = {}
    for var in ("x", "y"):
        if var not in coords or coords[var] in DEGENERATE:
            raise MissingValueError(
                f"no stored value for entry {f_string!r} at {point!r}"
            )
        specs[var] = _parse_value(coords[var])
    nemb = max(len(s.embeddings) for s in specs.values())
    embs = []
    for k in range(nemb):
        pt = {
            v: (s.embeddings[k] if len(s.embeddings) > 1 else s.embeddings[0])
            for v, s in specs.items()
        }
        pt["z"] = 0j  # entries never involve z on the surface
        try:
            embs.append(expr.eval(pt))
        except ZeroDivisionError as e:
            raise MissingValueError(
                f"entry {f_string!r} indeterminate at {point!r}; store its value"
            ) from e
    val0 = embs[0]
    for tag, target in (("0", 0.0), ("1", 1.0)):
        if all(abs(e - target) < 1e-10 for e in embs):
            return tag
    if any(abs(e) > 1e8 for e in embs):
        return "inf"
    # recognize rationals, else build a quadratic minimal polynomial
    fr = Fraction(val0.real).limit_denominator(10**6)
    if all(abs(e - complex(fr)) < 1e-9 for e in embs):
        return AlgebraicPoint.rational(fr)
    if len(embs) == 2:
        tr = Fraction((embs[0] + embs[1]).real).limit_denominator(10**6)
        nm = Fraction((embs[0] * embs[1]).real).limit_denominator(10**6)
        den = math.lcm(tr.denominator, nm.denominator)
        mp = (int(nm * den), -int(tr * den), den)
        return AlgebraicPoint(mp, tuple(embs))
    raise MissingValueError(
        f"cannot identify the algebraic value of {f_string!r} at {point!r}"
    )


def dossier_residue_sum(dossier: CurveDossier) -> FormalDilogSum:
    """Galois-expanded sum of u_p over every dossier point (geometric sum)."""
    total = FormalDilogSum([])
    for name in dossier.point_names():
        total = total + galois_expand(residue_element(dossier, name))
    return normalize(total)


def load_dossiers(path=None) -> dict[str, CurveDossier]:
    base = Path(path) if path else _DATA
    out = {}
    for fp in sorted(base.glob("*.json")):
        row = json.loads(fp.read_text())
        divisors = {
            name: {p: int(v) for p, v in table}
            for name, table in row["divisors"].items()
        }
        out[row["curve"]] = CurveDossier(
            curve=row["curve"],
            polynomial=row["polynomial"],
            decomposition=row.get("decomposition", ""),
            points={p["name"]: p for p in row["points"]},
            divisors=divisors,
            terms=row["terms"],
            note=row.get("note", ""),
        )
    return out
