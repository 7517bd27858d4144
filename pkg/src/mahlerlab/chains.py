"""Geometry of the Deninger chain on the torus.

Region masks and boundary-loop tracing for the family of surfaces cut out
by a Laurent polynomial: the chain lives over the (t, s) square with
x = e^{it}, y = e^{is}, and its boundary is the locus where some fiber
root has unit modulus.  Loops are traced by sign-change bisection of the
product of root log-moduli on grid edges, chained through grid cells, and
refined back onto the curve.  Orientation follows the torus orientation:
the region (where a fiber root has modulus >= 1) stays on the left.
"""

from __future__ import annotations

import cmath
import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .expr import RationalExpr
from .poly import LaurentPoly

__all__ = [
    "BoundaryPath",
    "RegionMask",
    "deninger_region",
    "trace_boundary",
    "winding_number",
    "detect_singular_boundary",
    "plane_model",
    "indented_circle",
    "richardson_limit",
    "paths_to_csv",
    "OpenChainWarning",
    "UnwrapFailureError",
    "ExcludedPointError",
]

TWO_PI = 2.0 * math.pi


class OpenChainWarning(UserWarning):
    """A traced chain could not be closed; partial paths are returned."""


class UnwrapFailureError(RuntimeError):
    pass


class ExcludedPointError(ValueError):
    pass


@dataclass
class BoundaryPath:
    """Sampled loop of the chain boundary: (x, y, z) triples on the 3-torus."""

    samples: np.ndarray  # (n, 3) complex
    closed: bool
    orientation_sign: int
    component: int = 0
    ts: np.ndarray | None = field(default=None, repr=False)  # (n, 2) floats

    def __len__(self):
        return len(self.samples)

    def reversed(self) -> "BoundaryPath":
        ts = None if self.ts is None else self.ts[::-1].copy()
        return BoundaryPath(
            self.samples[::-1].copy(),
            self.closed,
            -self.orientation_sign,
            self.component,
            ts,
        )

    def validate_on_torus(self, P: LaurentPoly, tol: float = 1e-9):
        """Check the defining invariants: unit moduli and P = 0 at samples."""
        mods = np.abs(self.samples)
        if not np.all(np.abs(mods - 1.0) <= tol):
            raise ValueError("sample off the unit torus")
        names = P.variables
        vals = [
            abs(P.eval(dict(zip(names, row)))) for row in self.samples
        ]
        scale = max(float(abs(c)) for c in P.terms.values()) * len(P.terms)
        if max(vals) > tol * scale:
            raise ValueError("sample off the surface")


@dataclass
class RegionMask:
    """Boolean membership of the chain's (t, s) projection on a square grid.

    Node (i, j) sits at the cell midpoint t_i = -pi + (i + 1/2) h,
    s_j likewise, h = 2 pi / resolution.
    """

    resolution: int
    mask: np.ndarray

    @property
    def t_nodes(self):
        h = TWO_PI / self.resolution
        return -math.pi + (np.arange(self.resolution) + 0.5) * h

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "s", "inside"])
            ts = self.t_nodes
            for i, t in enumerate(ts):
                for j, s in enumerate(ts):
                    w.writerow([f"{t:.12g}", f"{s:.12g}", int(self.mask[i, j])])


# ---------------------------------------------------------------------------
# fiber log-moduli


class _Fiber:
    """Vectorized access to log-moduli of the z-fiber roots over the torus."""

    def __init__(self, P: LaurentPoly):
        P = P.drop_unused()
        if not set(P.variables) <= {"x", "y", "z"} or "z" not in P.variables:
            raise ValueError("chain geometry needs variables among (x, y, z) with z present")
        P = P.embed(("x", "y", "z"))
        self.P = P.normalized_monomial()
        self.names = ("x", "y", "z")
        if self.P.degree_in("z") <= 0:
            raise ValueError("P needs positive degree in its last variable")
        cs = self.P.coeffs_in("z")
        self.deg = max(cs)
        zero = LaurentPoly.constant(0)
        self.coeff_polys = [cs.get(k, zero) for k in range(self.deg + 1)]

    def _coeff_cols(self, t, s):
        x = np.exp(1j * np.asarray(t))
        y = np.exp(1j * np.asarray(s))
        ones = np.ones(np.broadcast(x, y).shape, dtype=complex)
        pt = {self.names[0]: x, self.names[1]: y}
        return np.vstack([p.eval_grid(pt) * ones for p in self.coeff_polys])

    def roots(self, t, s):
        """(n, deg) matrix of fiber roots at the torus points (t, s)."""
        c = self._coeff_cols(t, s)
        lead = c[-1]
        scale = np.max(np.abs(c), axis=0)
        bad = np.abs(lead) <= 1e-250 * np.maximum(scale, 1e-300)
        if np.any(bad):
            # nudge degenerate fibers off the vanishing locus
            tt = np.broadcast_to(np.asarray(t, dtype=float), bad.shape).copy()
            ss = np.broadcast_to(np.asarray(s, dtype=float), bad.shape).copy()
            tt[bad] += 1e-9
            ss[bad] += 1.3e-9
            c = self._coeff_cols(tt, ss)
            lead = c[-1]
        if self.deg == 1:
            return (-c[0] / lead)[:, None]
        comp = np.zeros((c.shape[1], self.deg, self.deg), dtype=complex)
        comp[:, 1:, :-1] = np.eye(self.deg - 1)
        comp[:, :, -1] = -(c[:-1] / lead).T
        return np.linalg.eigvals(comp)

    def level(self, t, s):
        """Product of log|root_j|: zero exactly on the boundary locus."""
        lg = np.log(np.abs(self.roots(t, s)))
        lg = np.where(np.isfinite(lg), lg, 1e3)
        return np.prod(lg, axis=1)

    def inside(self, t, s):
        """Membership: some fiber root with modulus >= 1."""
        lg = np.log(np.abs(self.roots(t, s)))
        return np.any(lg >= 0, axis=1)

    def unit_root(self, t, s):
        """The fiber root closest to the unit circle at each point."""
        r = self.roots(t, s)
        pick = np.argmin(np.abs(np.log(np.abs(r))), axis=1)
        return r[np.arange(len(pick)), pick]

    def sheet_level(self, t, s):
        """log-modulus of the root nearest the unit circle (signed)."""
        r = self.roots(t, s)
        lg = np.log(np.abs(r))
        pick = np.argmin(np.abs(lg), axis=1)
        return lg[np.arange(len(pick)), pick]


def deninger_region(P: LaurentPoly, resolution: int = 256) -> RegionMask:
    """Mark the (t, s) cells whose fiber has a root of modulus >= 1."""
    fib = _Fiber(P)
    h = TWO_PI / resolution
    nodes = -math.pi + (np.arange(resolution) + 0.5) * h
    mask = np.empty((resolution, resolution), dtype=bool)
    for i, t in enumerate(nodes):
        mask[i] = fib.inside(np.full(resolution, t), nodes)
    return RegionMask(resolution, mask)


# ---------------------------------------------------------------------------
# boundary tracing


def _bisect_batch(fib, a, b, fa, iters=52):
    """Vectorized sign-change bisection between point arrays a and b (n, 2)."""
    a = a.copy()
    b = b.copy()
    fa = fa.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = fib.level(m[:, 0], m[:, 1])
        left = (fm > 0) == (fa > 0)
        a[left] = m[left]
        fa[left] = fm[left]
        b[~left] = m[~left]
    return 0.5 * (a + b)


def _grid_segments(fib, n):
    """Marching-squares segments of the zero level set on the periodic grid."""
    h = TWO_PI / n
    nodes = -math.pi + np.arange(n) * h + 0.5 * h
    F = np.empty((n, n))
    for i, t in enumerate(nodes):
        F[i] = fib.level(np.full(n, t), nodes)
    pos = F > 0
    hcross = pos != np.roll(pos, -1, axis=0)  # edge (i,j)-(i+1,j)
    vcross = pos != np.roll(pos, -1, axis=1)  # edge (i,j)-(i,j+1)

    hpts = {}
    idx = np.argwhere(hcross)
    if len(idx):
        a = np.stack([nodes[idx[:, 0]], nodes[idx[:, 1]]], axis=1)
        b = a.copy()
        b[:, 0] += h
        res = _bisect_batch(fib, a, b, F[idx[:, 0], idx[:, 1]])
        for (i, j), pt in zip(idx, res):
            hpts[(int(i), int(j))] = (float(pt[0]), float(pt[1]))
    vpts = {}
    idx = np.argwhere(vcross)
    if len(idx):
        a = np.stack([nodes[idx[:, 0]], nodes[idx[:, 1]]], axis=1)
        b = a.copy()
        b[:, 1] += h
        res = _bisect_batch(fib, a, b, F[idx[:, 0], idx[:, 1]])
        for (i, j), pt in zip(idx, res):
            vpts[(int(i), int(j))] = (float(pt[0]), float(pt[1]))

    def shift(pt, dt, ds):
        return (pt[0] + dt, pt[1] + ds)

    segments = []
    ambiguous = []
    for i in range(n):
        for j in range(n):
            i2 = (i + 1) % n
            j2 = (j + 1) % n
            pts = []
            if hcross[i, j]:
                pts.append(("b", hpts[(i, j)]))
            if hcross[i, j2]:
                p = hpts[(i, j2)]
                if j2 < j:  # wrapped: lift to this cell's frame
                    p = shift(p, 0, TWO_PI)
                pts.append(("t", p))
            if vcross[i, j]:
                pts.append(("l", vpts[(i, j)]))
            if vcross[i2, j]:
                p = vpts[(i2, j)]
                if i2 < i:
                    p = shift(p, TWO_PI, 0)
                pts.append(("r", p))
            if len(pts) == 2:
                segments.append((pts[0][1], pts[1][1]))
            elif len(pts) == 4:
                ambiguous.append((i, j, dict(pts)))
    if ambiguous:
        tt = np.array([nodes[i] + 0.5 * h for i, j, _ in ambiguous])
        ss = np.array([nodes[j] + 0.5 * h for i, j, _ in ambiguous])
        cvals = fib.level(tt, ss)
        for (i, j, d), c in zip(ambiguous, cvals):
            f00 = F[i, j]
            if (c > 0) == (f00 > 0):
                segments.append((d["b"], d["r"]))
                segments.append((d["t"], d["l"]))
            else:
                segments.append((d["b"], d["l"]))
                segments.append((d["t"], d["r"]))
    return segments


def _wrap(p):
    return (
        (p[0] + math.pi) % TWO_PI - math.pi,
        (p[1] + math.pi) % TWO_PI - math.pi,
    )


def _chain_segments(segments, step):
    """Link crossing segments into polylines by endpoint matching."""
    def key(p):
        q = _wrap(p)
        return (round(q[0] / 1e-9), round(q[1] / 1e-9))

    adj = {}
    for a, b in segments:
        adj.setdefault(key(a), []).append((a, b))
        adj.setdefault(key(b), []).append((b, a))
    unused = set()
    for idx, (a, b) in enumerate(segments):
        unused.add(idx)
    seg_of = {}
    for idx, (a, b) in enumerate(segments):
        seg_of.setdefault(key(a), []).append(idx)
        seg_of.setdefault(key(b), []).append(idx)
    loops = []
    used = [False] * len(segments)
    for start in range(len(segments)):
        if used[start]:
            continue
        a, b = segments[start]
        used[start] = True
        chain = [a, b]
        # extend forward until the loop closes or dead-ends
        for _ in range(4 * len(segments)):
            endk = key(chain[-1])
            nxt = None
            for idx in seg_of.get(endk, []):
                if used[idx]:
                    continue
                pa, pb = segments[idx]
                if key(pa) == endk:
                    nxt = (idx, pb)
                    break
                if key(pb) == endk:
                    nxt = (idx, pa)
                    break
            if nxt is None:
                break
            used[nxt[0]] = True
            chain.append(nxt[1])
            if key(chain[-1]) == key(chain[0]):
                break
        # try extending backwards if open
        closed = key(chain[-1]) == key(chain[0])
        if not closed:
            for _ in range(4 * len(segments)):
                endk = key(chain[0])
                nxt = None
                for idx in seg_of.get(endk, []):
                    if used[idx]:
                        continue
                    pa, pb = segments[idx]
                    if key(pa) == endk:
                        nxt = (idx, pb)
                        break
                    if key(pb) == endk:
                        nxt = (idx, pa)
                        break
                if nxt is None:
                    break
                used[nxt[0]] = True
                chain.insert(0, nxt[1])
                closed = key(chain[-1]) == key(chain[0])
                if closed:
                    break
        loops.append((chain, closed))
    return loops


def trace_boundary(P: LaurentPoly, step: float = 2e-3, grid: int = 256
                   ) -> list[BoundaryPath]:
    """Trace the boundary loops of the chain as sampled paths on the 3-torus.

    Zero crossings of the root-modulus level function are located by
    bisection on grid edges, linked into loops, refined onto the curve,
    and resampled so consecutive samples stay within ``step``.  Chains that
    fail to close raise an OpenChainWarning and come back with
    ``closed=False``.
    """
    fib = _Fiber(P)
    segments = _grid_segments(fib, grid)
    loops = _chain_segments(segments, step)
    paths = []
    for comp, (chain, closed) in enumerate(loops):
        pts = _resample(fib, chain, step, closed)
        if len(pts) < 3:
            continue
        t = pts[:, 0]
        s = pts[:, 1]
        x = np.exp(1j * t)
        y = np.exp(1j * s)
        z = fib.unit_root(t, s)
        if fib.names != ("x", "y", "z"):
            raise ValueError("boundary tracing expects variables (x, y, z)")
        samples = np.stack([x, y, z], axis=1)
        sign = _orientation_sign(fib, pts, closed)
        if sign < 0:
            samples = samples[::-1].copy()
            pts = pts[::-1].copy()
        if not closed:
            warnings.warn(
                "boundary chain failed to close; returning partial path",
                OpenChainWarning,
            )
        paths.append(
            BoundaryPath(samples, closed, 1, comp, pts)
        )
    paths.sort(key=lambda q: -len(q))
    return paths


def _resample(fib, chain, step, closed):
    pts = [np.array(chain[0], dtype=float)]
    for nxt in chain[1:]:
        prev = pts[-1]
        nxt = np.array(nxt, dtype=float)
        # keep coordinates continuous along the chain (unwrap jumps)
        for k in (0, 1):
            while nxt[k] - prev[k] > math.pi:
                nxt[k] -= TWO_PI
            while nxt[k] - prev[k] < -math.pi:
                nxt[k] += TWO_PI
        gap = np.hypot(*(nxt - prev))
        nseg = max(1, int(math.ceil(gap / step)))
        for q in range(1, nseg + 1):
            pts.append(prev + (nxt - prev) * (q / nseg))
    return _project_batch(fib, np.array(pts), step)


def _project_batch(fib, pts, step):
    """Pull nearby points onto the zero level set, one bisection per point."""
    t = pts[:, 0].copy()
    s = pts[:, 1].copy()
    f0 = fib.sheet_level(t, s)
    h = 0.25 * step
    ft = (fib.sheet_level(t + h, s) - f0) / h
    fs = (fib.sheet_level(t, s + h) - f0) / h
    use_t = np.abs(ft) >= np.abs(fs)
    slope = np.where(use_t, ft, fs)
    slope = np.where(slope == 0, 1.0, slope)
    dirx = np.where(use_t, 1.0, 0.0)
    diry = 1.0 - dirx
    a = np.stack([t, s], axis=1)
    shiftlen = -f0 / slope
    b = a + np.stack([dirx * shiftlen, diry * shiftlen], axis=1)
    fa = f0
    fb = fib.sheet_level(b[:, 0], b[:, 1])
    # grow brackets where the sign did not flip yet
    for _ in range(12):
        same = (fa > 0) == (fb > 0)
        if not np.any(same):
            break
        b[same] += b[same] - a[same]
        fb = fib.sheet_level(b[:, 0], b[:, 1])
    stuck = (fa > 0) == (fb > 0)
    for _ in range(52):
        m = 0.5 * (a + b)
        fm = fib.sheet_level(m[:, 0], m[:, 1])
        left = (fm > 0) == (fa > 0)
        a[left] = m[left]
        fa[left] = fm[left]
        b[~left] = m[~left]
    out = 0.5 * (a + b)
    out[stuck] = pts[stuck]  # tangency: keep the raw point
    return out


def _orientation_sign(fib, pts, closed):
    """+1 when the chain region lies on the left of the travel direction."""
    n = len(pts)
    votes = 0.0
    for k in range(0, n - 1, max(1, n // 24)):
        d = pts[k + 1] - pts[k]
        nrm = math.hypot(d[0], d[1])
        if nrm == 0:
            continue
        d = d / nrm
        left = np.array([-d[1], d[0]])
        for delta in (2e-4, 1e-3, 5e-3):
            probe = pts[k] + delta * left
            lev = float(fib.sheet_level([probe[0]], [probe[1]])[0])
            if abs(lev) > 1e-12:
                votes += 1.0 if lev > 0 else -1.0
                break
    return 1 if votes >= 0 else -1


# ---------------------------------------------------------------------------
# winding numbers


def winding_number(path: BoundaryPath, f: RationalExpr) -> int:
    """Integer winding (1/2pi) of arg f along the path.

    Phase increments are accumulated pairwise; the total must land within
    0.05 of an integer multiple of 2 pi, else an unwrap failure is raised.
    """
    names = ("x", "y", "z")
    vals = np.array(
        [f.eval(dict(zip(names, row))) for row in path.samples]
    )
    if not np.all(np.isfinite(vals)):
        raise ExcludedPointError("f has a pole on the path")
    if np.min(np.abs(vals)) < 1e-6:
        raise ExcludedPointError("f vanishes within 1e-6 of a path sample")
    seq = vals
    if path.closed:
        seq = np.concatenate([vals, vals[:1]])
    inc = np.angle(seq[1:] / seq[:-1])
    total = float(np.sum(inc))
    k = total / TWO_PI
    if abs(k - round(k)) >= 0.05:
        raise UnwrapFailureError(
            f"phase total {total!r} is not a clean multiple of 2 pi"
        )
    return int(round(k))


# ---------------------------------------------------------------------------
# singular boundary detection


def plane_model(P: LaurentPoly) -> LaurentPoly:
    """Defining polynomial F(x, y) of the Maillot variety, z eliminated.

    Requires z-degree 1: with P = A(x, y) + C(x, y) z, the intersection
    with its (1/x, 1/y, 1/z) pullback is A * (A o tau) - C * (C o tau),
    cleared of denominators.
    """
    P = P.drop_unused()
    if P.degree_in("z") != 1:
        raise ValueError("plane model implemented for z-degree 1")
    cs = P.normalized_monomial().coeffs_in("z")
    A = cs.get(0, LaurentPoly.constant(0)).embed(("x", "y"))
    C = cs[1].embed(("x", "y"))
    At = A.subs_inverse()
    Ct = C.subs_inverse()
    F = (A * At - C * Ct).normalized_monomial()
    return F


def detect_singular_boundary(P: LaurentPoly, paths: list[BoundaryPath],
                             tol: float = 1e-6) -> list[tuple[complex, complex]]:
    """Points where the boundary meets a singular point of the plane model.

    Flags path samples with |F|, |F_x|, |F_y| all below ``tol`` (times the
    coefficient scale), after polishing each sample by a short Newton run
    on the gradient system so that a singular point lying between samples
    is still caught.
    """
    F = plane_model(P)
    Fx = F.derivative("x")
    Fy = F.derivative("y")
    Fxx, Fxy, Fyy = Fx.derivative("x"), Fx.derivative("y"), Fy.derivative("y")
    scale = max(abs(float(c)) for c in F.terms.values())
    found = []
    for path in paths:
        for row in path.samples[:: max(1, len(path) // 400)]:
            x, y = complex(row[0]), complex(row[1])
            for _ in range(60):
                pt = {"x": x, "y": y}
                gx, gy = Fx.eval(pt), Fy.eval(pt)
                hxx, hxy, hyy = Fxx.eval(pt), Fxy.eval(pt), Fyy.eval(pt)
                det = hxx * hyy - hxy * hxy
                if abs(det) < 1e-14:
                    break
                dx = (gx * hyy - gy * hxy) / det
                dy = (gy * hxx - gx * hxy) / det
                x, y = x - dx, y - dy
                if abs(dx) + abs(dy) < 1e-13:
                    break
            pt = {"x": x, "y": y}
            vals = (abs(F.eval(pt)), abs(Fx.eval(pt)), abs(Fy.eval(pt)))
            # the flagged point must sit on the torus near the traced loop;
            # pinched loops stop a grid cell short of the singular point
            near_path = abs(x - row[0]) + abs(y - row[1]) < 0.6
            on_torus = abs(abs(x) - 1) < 1e-6 and abs(abs(y) - 1) < 1e-6
            if near_path and on_torus and all(v <= tol * scale for v in vals):
                if not any(
                    abs(x - u) + abs(y - v) < 1e-3 for u, v in found
                ):
                    found.append((x, y))
    return found


# ---------------------------------------------------------------------------
# epsilon-indentation for vertical-circle boundary components


def indented_circle(P: LaurentPoly, t0: float, eps: float, n: int = 4096,
                    s_direction: int = 1) -> BoundaryPath:
    """Vertical loop t = t0 / (1 + eps), s sweeping the full circle.

    Mirrors the reparametrization x = e^{i(1+eps)t} used to push a loop off
    an excluded locus; the fiber root nearest the unit circle supplies z.
    """
    fib = _Fiber(P)
    t = np.full(n + 1, t0 / (1.0 + eps))
    s = np.linspace(-math.pi, math.pi, n + 1) * s_direction
    x = np.exp(1j * t)
    y = np.exp(1j * s)
    z = fib.unit_root(t, s)
    samples = np.stack([x, y, z], axis=1)
    ts = np.stack([t, s], axis=1)
    return BoundaryPath(samples, True, 1, 0, ts)


def richardson_limit(eps_values, values):
    """Neville extrapolation of values(eps) to eps -> 0."""
    xs = list(eps_values)
    ys = [float(v) for v in values]
    n = len(xs)
    tab = [ys[:]]
    for k in range(1, n):
        row = []
        for i in range(n - k):
            num = xs[i] * tab[k - 1][i + 1] - xs[i + k] * tab[k - 1][i]
            row.append(num / (xs[i] - xs[i + k]))
        tab.append(row)
    return tab[-1][0]


def paths_to_csv(paths: list[BoundaryPath], out):
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["loop", "t", "s", "re_x", "im_x", "re_y", "im_y",
                    "re_z", "im_z"])
        for path in paths:
            for k, row in enumerate(path.samples):
                if path.ts is not None:
                    t, s = _wrap(path.ts[k])
                else:
                    t, s = cmath.phase(row[0]), cmath.phase(row[1])
                w.writerow(
                    [path.component, f"{t:.12g}", f"{s:.12g}"]
                    + [f"{v:.12g}" for pair in row for v in (pair.real, pair.imag)]
                )
