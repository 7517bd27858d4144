"""Numerical Mahler measures via Jensen reduction in the last variable.

The n-torus integral is reduced by Jensen's formula in z.  Three engines:

* 1 variable: exact (leading coefficient plus log+ of the roots);
* fibers linear in both y and z: the inner circle integral has a closed
  form in terms of Li2 on arcs, leaving a single adaptive t-integral;
* everything else: nested adaptive Gauss-Legendre panels with dyadic
  refinement, vectorized over the inner circle.

All integrands have at worst logarithmic singularities along curves, which
the greedy panel refinement localizes.
"""

from __future__ import annotations

import cmath
import heapq
import math
from functools import lru_cache

import numpy as np

from .poly import LaurentPoly
from .specialfn import li2

__all__ = [
    "fiber_roots",
    "mahler_measure",
    "leading_coeff_measure",
    "FiberDegeneracyError",
    "BudgetExceededError",
]

TWO_PI = 2.0 * math.pi


class FiberDegeneracyError(ValueError):
    """Leading coefficient of the fiber polynomial vanished at this node."""


class BudgetExceededError(RuntimeError):
    """Refinement cap hit; carries the best estimate obtained so far."""

    def __init__(self, value: float, err_estimate: float):
        super().__init__(
            f"quadrature budget exceeded: value={value!r} err={err_estimate!r}"
        )
        self.value = value
        self.err_estimate = err_estimate


# ---------------------------------------------------------------------------
# root finding on fibers


def _aberth(coeffs, tol=1e-12, maxit=100):
    """All roots of a polynomial (low-to-high coefficients) by Aberth."""
    c = np.asarray(coeffs, dtype=complex)
    d = len(c) - 1
    radius = 1.0 + max(abs(c[:-1] / c[-1])) if d > 0 else 1.0
    roots = radius * np.exp(
        2j * math.pi * (np.arange(d) + 0.25) / d
    )
    dc = c[1:] * np.arange(1, d + 1)
    for _ in range(maxit):
        p = np.polyval(c[::-1], roots)
        dp = np.polyval(dc[::-1], roots)
        newton = np.where(dp != 0, p / np.where(dp == 0, 1, dp), 0)
        pair = roots[:, None] - roots[None, :]
        np.fill_diagonal(pair, np.inf)
        denom = 1.0 - newton * np.sum(1.0 / pair, axis=1)
        step = newton / denom
        roots = roots - step
        if np.all(np.abs(step) <= tol * (1 + np.abs(roots))):
            break
    return roots


def fiber_roots(P: LaurentPoly, x0: complex, y0: complex) -> list[complex]:
    """Roots in the last variable of P at the fiber over (x0, y0).

    Companion-matrix eigenvalues for degree <= 4, Aberth iteration beyond;
    each root is replayed through the fiber polynomial and must leave a
    residual below 1e-10 times the coefficient scale.
    """
    zname = P.variables[-1]
    point = dict(zip(P.variables[:-1], (x0, y0)))
    Q = P.normalized_monomial()
    coeffs_map = Q.coeffs_in(zname)
    deg = max(coeffs_map)
    c = np.zeros(deg + 1, dtype=complex)
    for k, pk in coeffs_map.items():
        c[k] = pk.eval(point) if pk.variables else pk.eval({})
    scale = np.max(np.abs(c))
    if deg == 0 or scale == 0:
        raise FiberDegeneracyError("fiber has no positive degree in z")
    if abs(c[deg]) <= 1e-14 * scale:
        raise FiberDegeneracyError(
            f"leading z-coefficient vanishes at ({x0!r}, {y0!r})"
        )
    if deg <= 4:
        roots = np.roots(c[::-1])
    else:
        roots = _aberth(c)
    for r in roots:
        resid = abs(np.polyval(c[::-1], r))
        if resid > 1e-10 * scale * max(1.0, abs(r)) ** deg:
            raise FiberDegeneracyError(f"root residual {resid} too large")
    return list(roots)


# ---------------------------------------------------------------------------
# adaptive 1d panels


@lru_cache(maxsize=None)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_values(fvec, a, b, n):
    x, w = _gl(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    vals = fvec(mid + half * x)
    return half * float(np.dot(w, vals))


def _adaptive_1d(fvec, a, b, tol, budget=4000, initial=8, lo=10, hi=21,
                 safety=4.0):
    """Greedy dyadic panel refinement; returns (integral, error estimate).

    ``fvec`` maps an ndarray of nodes to an ndarray of values.  The rule
    pair mixes even and odd node counts so a kink sitting at a panel center
    still registers in the difference.  Refinement pushes the raw estimate
    a safety factor below ``tol``; the reported error keeps that factor.
    Raises BudgetExceededError carrying the best estimate when the panel
    budget runs out first.
    """
    panels = []
    nmade = initial

    def push(pa, pb):
        ilo = _panel_values(fvec, pa, pb, lo)
        ihi = _panel_values(fvec, pa, pb, hi)
        heapq.heappush(panels, (-abs(ihi - ilo), pa, pb, ihi))

    edges = np.linspace(a, b, initial + 1)
    for i in range(initial):
        push(edges[i], edges[i + 1])
    while True:
        total = sum(p[3] for p in panels)
        err = sum(-p[0] for p in panels)
        if err <= tol / safety:
            return total, min(safety * err, tol)
        if nmade >= budget:
            raise BudgetExceededError(total, safety * err)
        neg, pa, pb, old = heapq.heappop(panels)
        mid = 0.5 * (pa + pb)
        if mid - pa < 1e-13 * max(1.0, abs(pa)):
            heapq.heappush(panels, (0.0, pa, pb, old))
            continue
        push(pa, mid)
        push(mid, pb)
        nmade += 2


# ---------------------------------------------------------------------------
# closed-form inner integrals for fibers linear in y


def _int_log_abs_linear(a0: complex, a1: complex, s1: float, s2: float) -> float:
    """Integral of log|a0 + a1 e^{is}| over [s1, s2] in closed form."""
    r0, r1 = abs(a0), abs(a1)
    if r1 == 0.0:
        if r0 == 0.0:
            raise FiberDegeneracyError("log of identically zero fiber")
        return (s2 - s1) * math.log(r0)
    if r0 == 0.0:
        return (s2 - s1) * math.log(r1)
    if r0 >= r1:
        big, rho = r0, r1 / r0
        delta = cmath.phase(a1 / a0)

        def prim(s):
            # d/ds Im li2(-rho e^{i(s+delta)}) = -log|1 + rho e^{i(s+delta)}|
            return -li2(-rho * cmath.exp(1j * (s + delta))).imag

    else:
        big, rho = r1, r0 / r1
        delta = cmath.phase(a0 / a1)

        def prim(s):
            # |a0 + a1 e^{is}| = r1 |1 + rho e^{-i(s+... )}|, mirrored phase
            return li2(-rho * cmath.exp(-1j * (s - delta))).imag

    return (s2 - s1) * math.log(big) + prim(s2) - prim(s1)


def _inner_circle_max(A0, A1, C0, C1) -> float:
    """(1/2pi) * integral over s of max(log|A0+A1 e^{is}|, log|C0+C1 e^{is}|).

    Implements the Jensen fiber integrand for P = A(x,y) + C(x,y) z with A, C
    linear in y, at a fixed x.  The winner regions are circular arcs.
    """
    alpha = (abs(A0) ** 2 + abs(A1) ** 2) - (abs(C0) ** 2 + abs(C1) ** 2)
    w = np.conj(A0) * A1 - np.conj(C0) * C1
    R = 2.0 * abs(w)  # |a+b e^{is}|^2 carries 2 Re(conj(a) b e^{is})

    def seg(a0, a1, s1, s2):
        return _int_log_abs_linear(a0, a1, s1, s2)

    if R <= 1e-300 or abs(alpha) >= R:
        if alpha >= 0:
            return seg(A0, A1, -math.pi, math.pi) / TWO_PI
        return seg(C0, C1, -math.pi, math.pi) / TWO_PI
    phi0 = math.acos(max(-1.0, min(1.0, -alpha / R)))
    theta = cmath.phase(w)
    # A wins on s + theta in (-phi0, phi0)
    lo, hi = -theta - phi0, -theta + phi0
    total = seg(A0, A1, lo, hi) + seg(C0, C1, hi, lo + TWO_PI)
    return total / TWO_PI


# ---------------------------------------------------------------------------
# engines


def _split_linear_y(Q: LaurentPoly, yname: str):
    """Return (p0, p1) with Q = p0 + p1 * y when Q is linear in y, else None."""
    if yname not in Q.variables:
        return Q, LaurentPoly.constant(0)
    if Q.min_degree_in(yname) < 0 or Q.degree_in(yname) > 1:
        return None
    cs = Q.coeffs_in(yname)
    zero = LaurentPoly.constant(0)
    return cs.get(0, zero), cs.get(1, zero)


def _measure_1var(P: LaurentPoly):
    name = P.variables[0]
    Q = P.normalized_monomial()
    cs = Q.coeffs_in(name)
    deg = max(cs)
    c = np.zeros(deg + 1, dtype=complex)
    for k, pk in cs.items():
        c[k] = complex(pk.eval({}))
    val = math.log(abs(c[deg]))
    if deg > 0:
        roots = np.roots(c[::-1])
        val += float(np.sum(np.log(np.maximum(1.0, np.abs(roots)))))
    return val, 1e-14 * max(1.0, abs(val))


def _log_plus_roots(coeff_cols):
    """log|lead| + sum log+ |roots| for a batch of fibers.

    coeff_cols: (deg+1, n) complex array, low-to-high degree.
    """
    c = np.asarray(coeff_cols)
    deg = c.shape[0] - 1
    n = c.shape[1]
    lead = c[-1]
    scale = np.max(np.abs(c), axis=0)
    bad = np.abs(lead) <= 1e-280 * np.maximum(scale, 1e-300)
    out = np.empty(n)
    good = ~bad
    if deg == 0:
        out[good] = np.log(np.abs(lead[good]))
    elif deg == 1:
        out[good] = np.maximum(
            np.log(np.abs(lead[good])), np.log(np.abs(c[0, good]))
        )
    else:
        comp = np.zeros((int(np.sum(good)), deg, deg), dtype=complex)
        comp[:, 1:, :-1] = np.eye(deg - 1)
        comp[:, :, -1] = -(c[:-1, good] / lead[good]).T
        roots = np.linalg.eigvals(comp)
        out[good] = np.log(np.abs(lead[good])) + np.sum(
            np.log(np.maximum(1.0, np.abs(roots))), axis=1
        )
    out[bad] = np.nan
    return out


def _nudge_nan(f, t, width):
    vals = f(t)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        # measure-zero singular set: shift offending nodes by a half panel hair
        vals[bad] = f(t[bad] + 0.5e-6 * max(width, 1e-6))
    return vals


def _measure_2var(P: LaurentPoly, tol, budget):
    xname, yname = P.variables
    Q = P.normalized_monomial()
    cs = Q.coeffs_in(yname)
    deg = max(cs)
    zero = LaurentPoly.constant(0)
    coeff_polys = [cs.get(k, zero) for k in range(deg + 1)]

    def F(tarr):
        x = np.exp(1j * np.asarray(tarr))
        cols = np.vstack([p.eval_grid({xname: x}) * np.ones_like(x) for p in coeff_polys])
        return _log_plus_roots(cols)

    fvec = lambda t: _nudge_nan(F, np.asarray(t, dtype=float), 1.0)
    val, err = _adaptive_1d(fvec, -math.pi, math.pi, tol * TWO_PI, budget=budget)
    return val / TWO_PI, err / TWO_PI


def _measure_3var_arcwise(P: LaurentPoly, tol, budget):
    """z-degree 1 with A and C linear in y: closed-form inner integral."""
    xname, yname, zname = P.variables
    Q = P.normalized_monomial()
    cs = Q.coeffs_in(zname)
    A = cs.get(0, LaurentPoly.constant(0))
    C = cs[1]
    a01 = _split_linear_y(A, yname)
    c01 = _split_linear_y(C, yname)
    A0, A1 = a01
    C0, C1 = c01

    def F(tarr):
        out = np.empty(len(tarr))
        for i, t in enumerate(tarr):
            x = cmath.exp(1j * t)
            pt = {xname: x}
            out[i] = _inner_circle_max(
                complex(A0.eval_grid(pt)),
                complex(A1.eval_grid(pt)),
                complex(C0.eval_grid(pt)),
                complex(C1.eval_grid(pt)),
            )
        return out

    fvec = lambda t: _nudge_nan(F, np.asarray(t, dtype=float), 1.0)
    val, err = _adaptive_1d(fvec, -math.pi, math.pi, tol * TWO_PI, budget=budget)
    return val / TWO_PI, err / TWO_PI


def _measure_3var_nested(P: LaurentPoly, tol, budget):
    xname, yname, zname = P.variables
    Q = P.normalized_monomial()
    cs = Q.coeffs_in(zname)
    deg = max(cs)
    zero = LaurentPoly.constant(0)
    coeff_polys = [cs.get(k, zero) for k in range(deg + 1)]
    inner_tol = 0.25 * tol

    def G(t, sarr):
        x = cmath.exp(1j * t)
        y = np.exp(1j * np.asarray(sarr))
        cols = np.vstack(
            [p.eval_grid({xname: x, yname: y}) * np.ones_like(y) for p in coeff_polys]
        )
        return _log_plus_roots(cols)

    def F(tarr):
        out = np.empty(len(tarr))
        for i, t in enumerate(tarr):
            g = lambda s: _nudge_nan(lambda ss: G(t, ss), np.asarray(s, dtype=float), 1.0)
            v, _ = _adaptive_1d(
                g, -math.pi, math.pi, inner_tol * TWO_PI, budget=600
            )
            out[i] = v / TWO_PI
        return out

    fvec = lambda t: _nudge_nan(F, np.asarray(t, dtype=float), 1.0)
    val, err = _adaptive_1d(
        fvec, -math.pi, math.pi, 0.5 * tol * TWO_PI, budget=budget
    )
    return val / TWO_PI, err / TWO_PI + inner_tol


def _measure_2var_direct(P: LaurentPoly, tol, budget):
    """No Jensen reduction: direct integral of log|P| over the 2-torus."""
    xname, yname = P.variables
    inner_tol = 0.25 * tol

    def G(t, sarr):
        x = cmath.exp(1j * t)
        y = np.exp(1j * np.asarray(sarr))
        vals = P.eval_grid({xname: x, yname: y}) * np.ones_like(y)
        return np.log(np.abs(vals))

    def F(tarr):
        out = np.empty(len(tarr))
        for i, t in enumerate(tarr):
            g = lambda s: _nudge_nan(lambda ss: G(t, ss), np.asarray(s, dtype=float), 1.0)
            v, _ = _adaptive_1d(g, -math.pi, math.pi, inner_tol * TWO_PI, budget=600)
            out[i] = v / TWO_PI
        return out

    fvec = lambda t: _nudge_nan(F, np.asarray(t, dtype=float), 1.0)
    val, err = _adaptive_1d(
        fvec, -math.pi, math.pi, 0.5 * tol * TWO_PI, budget=budget
    )
    return val / TWO_PI, err / TWO_PI + inner_tol


def mahler_measure(P: LaurentPoly, tol: float = 1e-6, budget: int = 20000,
                   jensen: bool = True):
    """Logarithmic Mahler measure of P with an a-posteriori error estimate.

    Dimension <= 3.  ``jensen=False`` forces the direct torus integral for
    two-variable input (consistency oracle for the Jensen reduction).
    Raises BudgetExceededError past the refinement cap.
    """
    if not isinstance(P, LaurentPoly):
        raise TypeError("mahler_measure expects a LaurentPoly")
    if P.is_zero():
        raise ValueError("Mahler measure of the zero polynomial")
    P = P.drop_unused()
    nv = len(P.variables)
    if nv > 3:
        raise ValueError("dimension > 3 is out of scope")
    if nv == 0:
        ((_, c),) = P.terms.items() if P.terms else (((), 1),)
        return math.log(abs(c)), 0.0
    if nv == 1:
        return _measure_1var(P)
    if nv == 2:
        if not jensen:
            return _measure_2var_direct(P, tol, budget)
        return _measure_2var(P, tol, budget)
    Q = P.normalized_monomial()
    zname = Q.variables[-1]
    cs = Q.coeffs_in(zname)
    if (
        max(cs) == 1
        and _split_linear_y(cs.get(0, LaurentPoly.constant(0)), Q.variables[1]) is not None
        and _split_linear_y(cs[1], Q.variables[1]) is not None
    ):
        return _measure_3var_arcwise(P, tol, budget)
    return _measure_3var_nested(P, tol, budget)


def leading_coeff_measure(P: LaurentPoly, tol: float = 1e-11) -> float:
    """Mahler measure of the leading z-coefficient of P."""
    P = P.drop_unused()
    if "z" not in P.variables or P.degree_in("z") <= 0:
        raise ValueError("P needs positive degree in z")
    lead = P.normalized_monomial().leading_coeff_in("z").drop_unused()
    value, _ = mahler_measure(lead, tol=tol)
    return value
