"""Chain geometry: region masks, boundary loops, winding, singularities."""

import math

import numpy as np
import pytest

from mahlerlab.chains import (
    ExcludedPointError,
    UnwrapFailureError,
    _Fiber,
    deninger_region,
    detect_singular_boundary,
    indented_circle,
    plane_model,
    richardson_limit,
    trace_boundary,
    winding_number,
)
from mahlerlab.expr import parse_expr
from mahlerlab.poly import parse_poly

P21 = parse_poly("1+(x+1)*y+(x-1)*z")
ROW6 = parse_poly("x^2+1+(x+1)^2*y+(x-1)^2*z")


@pytest.fixture(scope="module")
def paths21():
    return trace_boundary(P21, step=2e-3)


@pytest.fixture(scope="module")
def paths_row6():
    return trace_boundary(ROW6, step=4e-3, grid=128)


class TestRegion:
    def test_full_mask(self):
        m = deninger_region(parse_poly("z-2"), 32)
        assert m.mask.all()

    def test_empty_mask(self):
        m = deninger_region(parse_poly("2*z-1"), 32)
        assert not m.mask.any()

    def test_region_boundary_consistency(self, paths21):
        # membership flips across every traced loop sample
        fib = _Fiber(P21)
        path = paths21[0]
        ts = path.ts
        n = len(ts)
        checked = 0
        for k in range(0, n - 1, max(1, n // 40)):
            d = ts[k + 1] - ts[k]
            nrm = math.hypot(*d)
            if nrm == 0:
                continue
            left = np.array([-d[1], d[0]]) / nrm
            a = ts[k] + 3e-3 * left
            b = ts[k] - 3e-3 * left
            ia = bool(fib.inside([a[0]], [a[1]])[0])
            ib = bool(fib.inside([b[0]], [b[1]])[0])
            if ia != ib:
                checked += 1
                assert ia and not ib  # region on the left of travel
        assert checked > 20

    def test_csv_dump(self, tmp_path):
        m = deninger_region(parse_poly("z-2"), 8)
        out = tmp_path / "mask.csv"
        m.to_csv(out)
        assert out.read_text().count("\n") == 65


class TestTraceBoundary:
    def test_two_loops_21a1(self, paths21):
        closed = [p for p in paths21 if p.closed]
        assert len(closed) == 2

    def test_no_loops_for_constant_root(self):
        assert trace_boundary(parse_poly("z-2"), grid=64) == []

    def test_invariants_on_samples(self, paths21):
        for p in paths21:
            p.validate_on_torus(P21)

    def test_step_bound(self, paths21):
        for p in paths21:
            ts = p.ts
            gaps = np.hypot(*(np.diff(ts, axis=0).T))
            assert np.max(gaps) <= 3e-3

    def test_row6_vertical_circles(self, paths_row6):
        assert len(paths_row6) == 2
        tvals = sorted(p.ts[:, 0].mean() for p in paths_row6)
        assert abs(tvals[0] + math.pi / 2) <= 1e-8
        assert abs(tvals[1] - math.pi / 2) <= 1e-8
        for p in paths_row6:
            assert np.ptp(p.ts[:, 0]) <= 1e-7  # constant t along each circle

    def test_tau_maps_loop_set_to_itself(self, paths21):
        # (x,y,z) -> (1/x,1/y,1/z) is (t,s) -> (-t,-s) on the torus
        allts = np.vstack([p.ts for p in paths21])
        wrapped = (allts + math.pi) % (2 * math.pi) - math.pi
        target = ((-allts + math.pi) % (2 * math.pi)) - math.pi
        sub = target[:: max(1, len(target) // 200)]
        for q in sub:
            d = np.abs(wrapped - q)
            d = np.minimum(d, 2 * math.pi - d)
            assert np.min(np.hypot(d[:, 0], d[:, 1])) <= 6e-3


class TestWinding:
    def test_unit_circle_sweep(self, paths_row6):
        gamma = max(paths_row6, key=lambda p: p.ts[:, 0].mean())
        f = parse_expr("y")
        assert winding_number(gamma, f) == 1

    def test_constant(self, paths21):
        assert winding_number(paths21[0], parse_expr("5")) == 0

    def test_inverse_negates(self, paths_row6):
        gamma = paths_row6[0]
        f = parse_expr("y")
        finv = parse_expr("1/y")
        assert winding_number(gamma, f) == -winding_number(gamma, finv)

    def test_pole_on_path_rejected(self, paths_row6):
        gamma = max(paths_row6, key=lambda p: p.ts[:, 0].mean())
        # x - i vanishes identically on the t = pi/2 circle
        bad = parse_expr("x") * parse_expr("x") + 1
        with pytest.raises((ExcludedPointError, UnwrapFailureError)):
            winding_number(gamma, bad)


class TestSingularBoundary:
    def test_flags_the_node(self):
        P = parse_poly("(x+1)*(y+1)+(x-1)^2*z")
        flags = detect_singular_boundary(P, trace_boundary(P, step=4e-3, grid=128))
        assert len(flags) == 1
        x, y = flags[0]
        assert abs(x - 1) <= 1e-3 and abs(y + 1) <= 1e-3

    def test_flags_second_family(self):
        P = parse_poly("x^2+x+1+(x^2+x+1)*y+(x-1)^2*z")
        flags = detect_singular_boundary(P, trace_boundary(P, step=4e-3, grid=128))
        assert len(flags) == 1
        x, y = flags[0]
        assert abs(x - 1) <= 1e-3 and abs(y + 1) <= 1e-3

    def test_smooth_case_clean(self):
        P = parse_poly("(x+1)*(y+1)+z")
        flags = detect_singular_boundary(P, trace_boundary(P, step=4e-3, grid=128))
        assert flags == []

    def test_plane_model_matches_hand_expansion(self):
        F = plane_model(P21)
        # x(x+1) y^2 + (2x^2+x+2) y + (x+1), up to overall sign
        want = parse_poly("x*(x+1)*y^2 + (2*x^2+x+2)*y + x+1", ("x", "y"))
        assert F == want or F == -want


class TestIndentation:
    def test_circle_is_on_surface(self):
        gamma = indented_circle(ROW6, math.pi / 2, 1e-2, n=800)
        pt = dict(zip(("x", "y", "z"), gamma.samples[17]))
        assert abs(ROW6.eval(pt)) <= 1e-9

    def test_richardson_on_polynomial_decay(self):
        eps = (1e-2, 5e-3, 2.5e-3)
        vals = [3.0 + 2.0 * e + 7.0 * e * e for e in eps]
        assert abs(richardson_limit(eps, vals) - 3.0) <= 1e-12
