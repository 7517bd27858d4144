"""Identity database and the end-to-end verification pipeline.

Each identity row records the measure polynomial, the curve label and/or
odd quadratic characters on the right-hand side, the conjectured rational
coefficients, and its status: proven, conjectural, or theorem-inapplicable
(with the reason).  verify_identity measures the left side by quadrature,
assembles the right side from the L-value engines, and either checks the
stated coefficients or fits the elliptic one by rational recovery.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import chains
from .elliptic import load_curves, lprime_minus1
from .mahler import leading_coeff_measure, mahler_measure
from .poly import parse_poly
from .specialfn import (
    QuadraticCharacter,
    chi_minus3,
    chi_minus4,
    dirichlet_lprime_minus1,
)

__all__ = [
    "IdentitySpec",
    "VerificationReport",
    "load_identities",
    "verify_identity",
    "recover_rational",
]

_DATA = Path(__file__).parent / "data"


@dataclass(frozen=True)
class IdentitySpec:
    """One table row: m(P) = a L'(E, -1) + sum b L'(chi, -1)."""

    key: str
    polynomial: str
    curve: str | None
    a: Fraction | None
    chi_terms: tuple  # ((modulus, Fraction), ...)
    status: str  # proven | conjectural | theorem-inapplicable
    slow: bool = False
    note: str = ""

    def __post_init__(self):
        if self.status not in ("proven", "conjectural", "theorem-inapplicable"):
            raise ValueError(f"bad status {self.status!r}")
        if self.curve is None and not self.chi_terms:
            raise ValueError("identity needs at least one right-hand term")


@dataclass
class VerificationReport:
    key: str
    status: str
    m_value: float
    m_error: float
    m_tilde: float
    curve_term: float | None  # L'(E, -1)
    chi_values: dict
    stated_a: Fraction | None
    fitted_a: Fraction | None
    residual: float
    tolerance: float
    verdict: str  # PASS | FAIL | INCONCLUSIVE
    loop_count: int | None = None
    singular_points: list = field(default_factory=list)
    elapsed: float = 0.0

    def to_dict(self):
        out = dict(self.__dict__)
        out["stated_a"] = str(self.stated_a) if self.stated_a is not None else None
        out["fitted_a"] = str(self.fitted_a) if self.fitted_a is not None else None
        out["singular_points"] = [
            [x.real, x.imag, y.real, y.imag] for x, y in self.singular_points
        ]
        return out


def _character(modulus: int) -> QuadraticCharacter:
    if modulus == 3:
        return chi_minus3()
    if modulus == 4:
        return chi_minus4()
    raise ValueError(f"no registry character of modulus {modulus}")


def load_identities(path=None) -> dict[str, IdentitySpec]:
    path = Path(path) if path else _DATA / "identities.json"
    out = {}
    for row in json.loads(path.read_text()):
        spec = IdentitySpec(
            key=row["key"],
            polynomial=row["polynomial"],
            curve=row.get("curve"),
            a=Fraction(row["a"]) if row.get("a") is not None else None,
            chi_terms=tuple(
                (int(m), Fraction(b)) for m, b in row.get("chi_terms", [])
            ),
            status=row["status"],
            slow=row.get("slow", False),
            note=row.get("note", ""),
        )
        out[spec.key] = spec
    return out


def recover_rational(v: float, max_den: int = 10**4) -> Fraction | None:
    """Continued-fraction convergent p/q, q <= max_den, within 1e-4 relative.

    Returns None when no convergent meets the accuracy gate.
    """
    if max_den > 10**4:
        raise ValueError("denominator cap is 10^4")
    if not math.isfinite(v):
        return None
    gate = 1e-4 * max(1.0, abs(v))
    # walk the continued fraction, keeping convergents within the cap
    p0, q0, p1, q1 = 0, 1, 1, 0
    x = v
    for _ in range(64):
        a = math.floor(x)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > max_den:
            break
        if abs(v - p1 / q1) <= gate:
            return Fraction(p1, q1)
        frac = x - a
        if abs(frac) < 1e-15:
            break
        x = 1.0 / frac
    return None


def verify_identity(spec: IdentitySpec, tol: float = 1e-3, seed: int = 0,
                    boundary_diagnostics: bool = False,
                    registry_dir=None) -> VerificationReport:
    """Measure both sides of the identity and report the verdict.

    The check is |m(P) - m(P~) - a L'(E,-1) - sum b L'(chi,-1)| <= tol * |m|.
    Rows without a stated ``a`` get one fitted by rational recovery on the
    residual.  Theorem-inapplicable rows are still measured; the report is
    the numeric evidence, not a proof.
    """
    t0 = time.time()
    P = parse_poly(spec.polynomial)
    quad_tol = max(1e-9, tol / 100.0)
    m, m_err = mahler_measure(P, tol=quad_tol)
    try:
        m_tilde = leading_coeff_measure(P)
    except ValueError:
        m_tilde = 0.0
    curves = load_curves(registry_dir and Path(registry_dir) / "curves.json")
    lp = None
    if spec.curve:
        lp = lprime_minus1(curves[spec.curve])
    chi_vals = {}
    rhs = 0.0
    for modulus, b in spec.chi_terms:
        val = dirichlet_lprime_minus1(_character(modulus))
        chi_vals[modulus] = val
        rhs += float(b) * val
    stated_a = spec.a
    fitted_a = None
    if stated_a is not None and spec.curve:
        rhs += float(stated_a) * lp
    elif spec.curve:
        fitted_a = recover_rational((m - m_tilde - rhs) / lp)
        if fitted_a is not None:
            rhs += float(fitted_a) * lp
    residual = m - m_tilde - rhs
    scale = max(abs(m), 1e-12)
    budget = m_err + 1e-7  # quadrature plus L-value tails
    if abs(residual) <= tol * scale:
        verdict = "PASS"
    elif abs(residual) <= 3 * budget:
        verdict = "INCONCLUSIVE"
    else:
        verdict = "FAIL"
    report = VerificationReport(
        key=spec.key,
        status=spec.status,
        m_value=m,
        m_error=m_err,
        m_tilde=m_tilde,
        curve_term=lp,
        chi_values=chi_vals,
        stated_a=stated_a,
        fitted_a=fitted_a,
        residual=residual,
        tolerance=tol * scale,
        verdict=verdict,
        elapsed=time.time() - t0,
    )
    if boundary_diagnostics:
        try:
            paths = chains.trace_boundary(P, step=4e-3, grid=128)
            report.loop_count = len(paths)
            report.singular_points = chains.detect_singular_boundary(P, paths)
        except ValueError:
            report.loop_count = None
    report.elapsed = time.time() - t0
    return report
