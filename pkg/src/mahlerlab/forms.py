"""Goncharov's explicit 1- and 2-forms theta, rho, eta.

Pointwise values on tangent frames come from forward-mode dual numbers
(exact to roundoff, no step sizes); d log|g| and d arg g are the real and
imaginary parts of dg/g along a direction.  Path integrals run composite
trapezoid sums over the traced samples with one Richardson halving.

    theta(f, g) = log|f| dlog|g| - log|g| dlog|f|
    rho(f, g)   = -D(f) darg g + (1/3) log|g| theta(1-f, f)
    eta(f, g, h)= sum_cyc log|f| ((1/3) dlog|g| ^ dlog|h| - darg g ^ darg h)

with d rho(f, g) = eta(f, 1-f, g) on the surface, which the test suite
checks by Stokes on small coordinate squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import BoundaryPath, ExcludedPointError
from .expr import RationalExpr
from .mahler import leading_coeff_measure
from .poly import LaurentPoly
from .specialfn import bloch_wigner

__all__ = [
    "TangentSample",
    "eval_theta",
    "eval_rho",
    "eval_eta",
    "integrate_rho",
    "residue_formula",
    "mahler_via_boundary",
    "DegenerateSampleError",
]

TWO_PI = 2.0 * math.pi
VARS = ("x", "y", "z")


class DegenerateSampleError(ValueError):
    """An entry hit a zero or pole at the evaluation point."""


@dataclass
class TangentSample:
    """Evaluation frame: a base point and one or two tangent directions.

    Directions are complex coordinate vectors; for samples on a surface
    P = 0 they should satisfy |dP(tangent)| <= 1e-8 * scale.
    """

    point: tuple[complex, complex, complex]
    tangents: tuple

    def as_dicts(self):
        pt = dict(zip(VARS, self.point))
        dirs = [dict(zip(VARS, t)) for t in self.tangents]
        return pt, dirs

    def validate_on(self, P: LaurentPoly, tol: float = 1e-8):
        pt = dict(zip(VARS, self.point))
        grads = {v: P.embed(VARS).derivative(v).eval(pt) for v in VARS}
        scale = max(1.0, max(abs(g) for g in grads.values()))
        for t in self.tangents:
            pairing = sum(grads[v] * tv for v, tv in zip(VARS, t))
            if abs(pairing) > tol * scale * max(1.0, max(abs(c) for c in t)):
                raise ValueError("tangent does not annihilate dP")


def _val_and_dlog(expr: RationalExpr, pt, direction):
    """(value, d expr / expr) along one direction, via dual numbers."""
    d = expr.eval_dual(pt, direction)
    val = d.val
    if np.any(np.abs(val) < 1e-300):
        raise DegenerateSampleError("expression vanishes at the base point")
    return val, d.eps / val


def eval_theta(f: RationalExpr, g: RationalExpr, at: TangentSample) -> float:
    """theta(f, g) = log|f| dlog|g| - log|g| dlog|f| on the given tangent."""
    pt, dirs = at.as_dicts()
    fv, fl = _val_and_dlog(f, pt, dirs[0])
    gv, gl = _val_and_dlog(g, pt, dirs[0])
    if abs(fv) < 1e-12 or abs(gv) < 1e-12:
        raise DegenerateSampleError("theta too close to a zero or pole")
    return math.log(abs(fv)) * gl.real - math.log(abs(gv)) * fl.real


def eval_rho(f: RationalExpr, g: RationalExpr, at: TangentSample) -> float:
    """rho(f, g) = -D(f) darg g + (1/3) log|g| theta(1 - f, f)."""
    pt, dirs = at.as_dicts()
    u = dirs[0]
    fd = f.eval_dual(pt, u)
    gd = g.eval_dual(pt, u)
    fv, gv = fd.val, gd.val
    if abs(gv) < 1e-300 or abs(fv) < 1e-300 or abs(1 - fv) < 1e-300:
        raise DegenerateSampleError("rho evaluated at a degenerate point")
    darg_g = (gd.eps / gv).imag
    dlog_f = fd.eps / fv
    dlog_1mf = -fd.eps / (1.0 - fv)
    theta = math.log(abs(1 - fv)) * dlog_f.real - math.log(abs(fv)) * dlog_1mf.real
    return -bloch_wigner(complex(fv)) * darg_g + math.log(abs(gv)) * theta / 3.0


def eval_eta(f: RationalExpr, g: RationalExpr, h: RationalExpr,
             at: TangentSample) -> float:
    """The 2-form eta(f, g, h) on the sample's tangent bivector."""
    if len(at.tangents) != 2:
        raise ValueError("eta needs two tangent directions")
    pt, dirs = at.as_dicts()
    u, v = dirs
    vals = []
    for expr in (f, g, h):
        du = expr.eval_dual(pt, u)
        dv = expr.eval_dual(pt, v)
        if np.any(np.abs(du.val) < 1e-300):
            raise DegenerateSampleError("eta entry vanishes at base point")
        vals.append((du.val, du.eps / du.val, dv.eps / dv.val))
    total = 0.0
    for i in range(3):
        fv = vals[i][0]
        _, gu, gv2 = vals[(i + 1) % 3]
        _, hu, hv2 = vals[(i + 2) % 3]
        wedge_log = gu.real * hv2.real - gv2.real * hu.real
        wedge_arg = gu.imag * hv2.imag - gv2.imag * hu.imag
        total = total + np.log(np.abs(fv)) * (wedge_log / 3.0 - wedge_arg)
    return total


# ---------------------------------------------------------------------------
# path integration


def _path_arrays(path: BoundaryPath):
    pts = path.samples
    n = len(pts)
    if path.closed:
        nxt = np.roll(pts, -1, axis=0)
        prv = np.roll(pts, 1, axis=0)
        tangent = 0.5 * (nxt - prv)
    else:
        tangent = np.empty_like(pts)
        tangent[1:-1] = 0.5 * (pts[2:] - pts[:-2])
        tangent[0] = pts[1] - pts[0]
        tangent[-1] = pts[-1] - pts[-2]
    return pts, tangent


def _rho_sum_on_samples(terms, pts, tangent):
    """Vectorized sum_j c_j rho(f_j, g_j) evaluated at every sample."""
    pt = {v: pts[:, k] for k, v in enumerate(VARS)}
    dr = {v: tangent[:, k] for k, v in enumerate(VARS)}
    total = np.zeros(len(pts))
    for c, f, g in terms:
        fd = f.eval_dual(pt, dr)
        gd = g.eval_dual(pt, dr)
        fv = np.asarray(fd.val, dtype=complex) + np.zeros(len(pts), complex)
        gv = np.asarray(gd.val, dtype=complex) + np.zeros(len(pts), complex)
        feps = np.asarray(fd.eps, dtype=complex) + np.zeros(len(pts), complex)
        geps = np.asarray(gd.eps, dtype=complex) + np.zeros(len(pts), complex)
        bad = (
            (np.abs(fv) < 1e-8)
            | (np.abs(1 - fv) < 1e-8)
            | (np.abs(gv) < 1e-8)
            | ~np.isfinite(fv)
            | ~np.isfinite(gv)
        )
        if np.any(bad):
            raise ExcludedPointError(
                "decomposition entry has a zero/pole too close to the path"
            )
        darg_g = (geps / gv).imag
        theta = (
            np.log(np.abs(1 - fv)) * (feps / fv).real
            + np.log(np.abs(fv)) * (feps / (1 - fv)).real
        )
        dvals = np.array([bloch_wigner(complex(w)) for w in fv])
        total = total + float(c) * (
            -dvals * darg_g + np.log(np.abs(gv)) * theta / 3.0
        )
    return total


def integrate_rho(path: BoundaryPath, decomposition) -> tuple[float, float]:
    """Integral of sum_j c_j rho(f_j, g_j) along the path.

    Composite midpoint-tangent sums at full and half sampling with one
    Richardson extrapolation; returns (value, error estimate).  Raises
    ExcludedPointError when any entry's zeros or poles touch the path
    (indent the path upstream instead of regularizing here).
    """
    terms = list(decomposition.terms)
    pts, tangent = _path_arrays(path)
    vals = _rho_sum_on_samples(terms, pts, tangent)
    s_full = float(np.sum(vals))
    half = pts[::2]
    hpath = BoundaryPath(half, path.closed, path.orientation_sign)
    hpts, htan = _path_arrays(hpath)
    s_half = float(np.sum(_rho_sum_on_samples(terms, hpts, htan)))
    value = s_full + (s_full - s_half) / 3.0
    err = abs(s_full - s_half) / 3.0 + 1e-12 * (1 + abs(value))
    return value, err


def residue_formula(decomposition, f_values, valuations) -> float:
    """Closed-form residue -2 pi sum_j c_j v_j D(f_j(p)).

    ``f_values`` are the entry values f_j(p) at the point (supply 0, 1 or
    infinity for degenerate entries; D kills them), ``valuations`` the
    orders v_p(g_j), aligned with the decomposition terms.
    """
    terms = list(decomposition.terms)
    if not (len(terms) == len(f_values) == len(valuations)):
        raise ValueError("terms, values and valuations must align")
    acc = 0.0
    for (c, _f, _g), fv, v in zip(terms, f_values, valuations):
        if v == 0:
            continue
        acc += float(c) * v * bloch_wigner(fv)
    return -TWO_PI * acc


def mahler_via_boundary(P: LaurentPoly, decomposition, paths) -> tuple[float, float]:
    """Boundary formula: m(P) = m(P~) - (1/8 pi^2) integral of rho over the loops.

    ``decomposition`` must already be the symmetrized one (the original
    terms plus their (1/x,1/y,1/z) pullbacks); the chain module's traced
    loops supply the boundary with its torus orientation.
    """
    base = leading_coeff_measure(P)
    total = 0.0
    err = 0.0
    for path in paths:
        v, e = integrate_rho(path, decomposition)
        total += v
        err += e
    value = base - total / (8 * math.pi**2)
    return value, err / (8 * math.pi**2) + 1e-12
