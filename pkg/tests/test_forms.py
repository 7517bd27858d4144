"""Goncharov forms: pointwise values, path integrals, residues, and the
boundary formula."""

import math
import random

import numpy as np
import pytest

from mahlerlab.chains import BoundaryPath, ExcludedPointError, trace_boundary
from mahlerlab.expr import RationalExpr, parse_expr
from mahlerlab.forms import (
    DegenerateSampleError,
    TangentSample,
    eval_eta,
    eval_rho,
    eval_theta,
    integrate_rho,
    mahler_via_boundary,
    residue_formula,
)
from mahlerlab.mahler import leading_coeff_measure, mahler_measure
from mahlerlab.poly import parse_poly
from mahlerlab.specialfn import bloch_wigner
from mahlerlab.wedge import Decomposition, lambda_decomposition, load_decompositions

TWO_PI = 2 * math.pi


def random_sample(rng, two_tangents=True):
    pt = tuple(
        complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(3)
    )
    tans = tuple(
        tuple(complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(3))
        for _ in range(2 if two_tangents else 1)
    )
    return TangentSample(pt, tans)


def circle_path(center, radius, n=2048, x=1 + 0j, z=1 + 0j):
    """Loop in the y-plane (x, z frozen); the synthetic residue carrier."""
    th = np.linspace(-math.pi, math.pi, n, endpoint=False)
    y = center + radius * np.exp(1j * th)
    samples = np.stack([np.full(n, x), y, np.full(n, z)], axis=1)
    return BoundaryPath(samples, True, 1)


class TestDerivativeEngine:
    def test_against_central_differences(self):
        rng = random.Random(23)
        exprs = [
            parse_expr("(x*y+x+1)/(x*y)"),
            parse_expr("-(x+1)^2*y/(x^2+1)"),
            parse_expr("1+(x^2-x+1)*y"),
            parse_expr("x^3/(y-z)+z^2"),
        ]
        h = 1e-6
        checked = 0
        while checked < 1000:
            f = rng.choice(exprs)
            pt = {
                v: complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                for v in ("x", "y", "z")
            }
            u = {
                v: complex(rng.gauss(0, 1), rng.gauss(0, 1))
                for v in ("x", "y", "z")
            }
            try:
                d = f.eval_dual(pt, u)
                plus = f.eval({v: pt[v] + h * u[v] for v in pt})
                minus = f.eval({v: pt[v] - h * u[v] for v in pt})
            except ZeroDivisionError:
                continue
            fd = (plus - minus) / (2 * h)
            if not 1e-6 < abs(d.eps) < 1e6:
                continue
            assert abs(d.eps - fd) <= 1e-6 * max(1.0, abs(d.eps))
            checked += 1


class TestTheta:
    def test_equal_arguments_vanish(self):
        rng = random.Random(1)
        f = parse_expr("(x+1)*y")
        done = 0
        while done < 20:
            smp = random_sample(rng, two_tangents=False)
            try:
                assert eval_theta(f, f, smp) == 0.0
            except DegenerateSampleError:
                continue
            done += 1

    def test_antisymmetry(self):
        rng = random.Random(2)
        f = parse_expr("x*y+1")
        g = parse_expr("y-2")
        done = 0
        while done < 50:
            smp = random_sample(rng, two_tangents=False)
            try:
                a = eval_theta(f, g, smp)
                b = eval_theta(g, f, smp)
            except DegenerateSampleError:
                continue
            assert abs(a + b) <= 1e-12 * max(1.0, abs(a))
            done += 1

    def test_directional_vs_finite_difference(self):
        rng = random.Random(3)
        f = parse_expr("(x+2)*y")
        g = parse_expr("x-y+3")
        h = 1e-6
        done = 0
        while done < 60:
            smp = random_sample(rng, two_tangents=False)
            pt, (u,) = smp.as_dicts()
            try:
                val = eval_theta(f, g, smp)
            except DegenerateSampleError:
                continue

            def logabs(expr, shift):
                q = {v: pt[v] + shift * u[v] for v in pt}
                return math.log(abs(expr.eval(q)))

            dlf = (logabs(f, h) - logabs(f, -h)) / (2 * h)
            dlg = (logabs(g, h) - logabs(g, -h)) / (2 * h)
            fd = logabs(f, 0) * dlg - logabs(g, 0) * dlf
            assert abs(val - fd) <= 2e-6 * max(1.0, abs(val))
            done += 1


class TestRho:
    def test_constant_f_reduces_to_darg_term(self):
        rng = random.Random(4)
        f = RationalExpr.const(-2)
        g = parse_expr("x*y-3")
        done = 0
        while done < 30:
            smp = random_sample(rng, two_tangents=False)
            pt, (u,) = smp.as_dicts()
            try:
                val = eval_rho(f, g, smp)
            except DegenerateSampleError:
                continue
            gd = g.eval_dual(pt, u)
            want = -bloch_wigner(-2.0) * (gd.eps / gd.val).imag
            assert abs(val - want) <= 1e-12
            assert val == 0.0  # D vanishes on the reals
            done += 1

    def test_unit_modulus_constants(self):
        rng = random.Random(5)
        f = RationalExpr.const(-2)
        g = RationalExpr.const(1)  # modulus-one constant
        smp = random_sample(rng, two_tangents=False)
        assert eval_rho(f, g, smp) == 0.0

    def test_stokes_on_a_square(self):
        # circulation of rho around a small coordinate square on the surface
        # matches eta(f, 1-f, g) on the tangent bivector times the area
        P = parse_poly("1+(x+1)*y+(x-1)*z")
        Pz = P.embed(("x", "y", "z")).derivative("z")
        Px = P.embed(("x", "y", "z")).derivative("x")
        Py = P.embed(("x", "y", "z")).derivative("y")
        f = parse_expr("-(x+1)*y")
        g = parse_expr("x")
        x0, y0 = 1.1 + 0.3j, 0.2 + 0.9j

        def lift(a, b):
            # point of the surface over (x0 + a, y0 + b)
            x = x0 + a
            y = y0 + b
            z = -(1 + (x + 1) * y) / (x - 1)
            return x, y, z

        eps = 1e-3
        corners = [(0, 0), (eps, 0), (eps, eps), (0, eps)]
        n = 40
        pts = []
        for (a0, b0), (a1, b1) in zip(corners, corners[1:] + corners[:1]):
            for k in range(n):
                t = k / n
                pts.append(lift(a0 + (a1 - a0) * t, b0 + (b1 - b0) * t))
        path = BoundaryPath(np.array(pts), True, 1)
        circ, _ = integrate_rho(path, Decomposition([(1, f, g)]))
        pt = dict(zip(("x", "y", "z"), lift(eps / 2, eps / 2)))
        gz = Pz.eval(pt)
        u = (1.0, 0.0, -Px.eval(pt) / gz)
        v = (0.0, 1.0, -Py.eval(pt) / gz)
        smp = TangentSample(tuple(pt.values()), (u, v))
        smp.validate_on(P)
        area_val = eval_eta(f, RationalExpr.const(1) - f, g, smp) * eps * eps
        assert abs(circ - area_val) <= 1e-4 * max(1e-8, abs(area_val))


class TestEta:
    def test_alternating(self):
        rng = random.Random(6)
        f = parse_expr("x+2*y")
        g = parse_expr("y-3")
        h = parse_expr("x*z+1")
        import itertools

        done = 0
        while done < 20:
            smp = random_sample(rng)
            try:
                base = eval_eta(f, g, h, smp)
            except DegenerateSampleError:
                continue
            for perm, sign in (
                ((g, f, h), -1),
                ((f, h, g), -1),
                ((h, g, f), -1),
                ((g, h, f), 1),
                ((h, f, g), 1),
            ):
                val = eval_eta(*perm, smp)
                assert abs(val - sign * base) <= 1e-12 * max(1.0, abs(base))
            done += 1

    def test_repeated_entry_vanishes(self):
        rng = random.Random(7)
        f = parse_expr("x+2*y")
        h = parse_expr("z-5")
        done = 0
        while done < 20:
            smp = random_sample(rng)
            try:
                assert abs(eval_eta(f, f, h, smp)) <= 1e-14
            except DegenerateSampleError:
                continue
            done += 1

    def test_multilinearity(self):
        rng = random.Random(8)
        f1 = parse_expr("x+1")
        f2 = parse_expr("y-2")
        g = parse_expr("x*y+3")
        h = parse_expr("z")
        done = 0
        while done < 40:
            smp = random_sample(rng)
            try:
                lhs = eval_eta(f1 * f2, g, h, smp)
                rhs = eval_eta(f1, g, h, smp) + eval_eta(f2, g, h, smp)
            except DegenerateSampleError:
                continue
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
            done += 1

    def test_needs_two_tangents(self):
        rng = random.Random(9)
        smp = random_sample(rng, two_tangents=False)
        with pytest.raises(ValueError):
            eval_eta(parse_expr("x"), parse_expr("y"), parse_expr("z"), smp)


class TestIntegrateRho:
    def test_reversal_negates(self):
        d = Decomposition([(1, "y", "y-3")])
        path = circle_path(1.0 + 0j, 0.25)
        v1, _ = integrate_rho(path, d)
        v2, _ = integrate_rho(path.reversed(), d)
        assert abs(v1 + v2) <= 1e-9 * max(1.0, abs(v1))

    def test_closed_form_free_region(self):
        # constant f: rho = -D(f) darg g, exact on a disk without zeros of g
        d = Decomposition([(1, "2+3*x-3*x", "y-3")])  # f = constant 2
        path = circle_path(5.0 + 1j, 0.5)
        v, e = integrate_rho(path, d)
        assert abs(v) <= max(1e-9, 3 * e)

    def test_excluded_point_raises(self):
        d = Decomposition([(1, "y", "y-1")])
        path = circle_path(1.0 + 0j, 1e-9)  # g vanishes at the center
        with pytest.raises(ExcludedPointError):
            integrate_rho(path, d)

    def test_loop_around_zero_of_g(self):
        # single term {f}_2 (x) g around a simple zero p of g:
        # -2 pi v_p(g) D(f(p)), here with a genuinely complex f(p)
        p = complex(math.cos(math.pi / 3), math.sin(math.pi / 3))
        d = Decomposition([(1, "y", "y^2-y+1")])
        path = circle_path(p, 1e-4, n=8192)
        v, e = integrate_rho(path, d)
        want = -TWO_PI * bloch_wigner(p)
        assert abs(v - want) <= 1e-6 * abs(want)


class TestResidueFormula:
    def test_degenerate_values_vanish(self):
        d = Decomposition([(1, "y", "y-1"), (2, "y", "y-2")])
        assert residue_formula(d, [0.0, 1.0], [1, 3]) == 0.0
        assert residue_formula(d, [float("inf"), 0.0], [2, 1]) == 0.0

    def test_zero_valuations_vanish(self):
        d = Decomposition([(1, "y", "y-1")])
        assert residue_formula(d, [0.5 + 0.5j], [0]) == 0.0

    def test_duality_with_loop_integral(self):
        # f = (y-2)/(y+1), g = y-1, p: y = 1, v = 1 -> -2 pi D(-1/2)
        d = Decomposition([(1, "(y-2)/(y+1)", "y-1")])
        closed = residue_formula(d, [-0.5], [1])
        assert closed == 0.0  # D on the reals
        path = circle_path(1.0 + 0j, 1e-3, n=4096)
        v, _ = integrate_rho(path, d)
        assert abs(v - closed) <= 1e-6

    def test_duality_complex_case(self):
        p = complex(0.5, math.sqrt(3) / 2)
        d = Decomposition([(1, "y", "y^2-y+1")])
        closed = residue_formula(d, [p], [1])
        path = circle_path(p, 5e-4, n=4096)
        v, _ = integrate_rho(path, d)
        assert abs(v - closed) <= 1e-5 * abs(closed)

    def test_alignment_required(self):
        d = Decomposition([(1, "y", "y-1")])
        with pytest.raises(ValueError):
            residue_formula(d, [0.5], [1, 2])


class TestMahlerViaBoundary:
    def test_empty_paths_give_leading_measure(self):
        P = parse_poly("1+(x+1)*y+(x-1)*z")
        d = load_decompositions()["21a1"][1]
        v, _ = mahler_via_boundary(P, lambda_decomposition(d), [])
        assert abs(v - leading_coeff_measure(P)) <= 1e-12

    def test_two_way_consistency_21a1(self):
        poly, d, _ = load_decompositions()["21a1"]
        P = parse_poly(poly)
        paths = trace_boundary(P, step=2e-3)
        v_b, e_b = mahler_via_boundary(P, lambda_decomposition(d), paths)
        v_q, e_q = mahler_measure(P, tol=1e-8)
        assert abs(v_b - v_q) <= 1e-3

    def test_two_way_consistency_15a8(self):
        poly, d, _ = load_decompositions()["15a8"]
        P = parse_poly(poly)
        paths = trace_boundary(P, step=2e-3)
        v_b, _ = mahler_via_boundary(P, lambda_decomposition(d), paths)
        v_q, _ = mahler_measure(P, tol=1e-8)
        assert abs(v_b - v_q) <= 1e-3


class TestTangentSample:
    def test_validation(self):
        P = parse_poly("(x+1)*(y+1)+z")
        x, y = 1.1 + 0.2j, 0.8 - 0.1j
        z = -(x + 1) * (y + 1)
        good = TangentSample((x, y, z), ((1.0, 0.0, -(y + 1)),))
        good.validate_on(P)
        bad = TangentSample((x, y, z), ((1.0, 0.0, 17.0),))
        with pytest.raises(ValueError):
            bad.validate_on(P)
