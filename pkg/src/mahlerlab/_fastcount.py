"""numba-compiled trace-of-Frobenius via Mestre baby-step/giant-step.

Supports the coefficient builder for primes past the O(p) crossover.  All
arithmetic stays below 2^63 for p < 3e9; the library only calls this for
p <= 10^7.  Deterministic: the point sampler is a fixed LCG seeded by p,
so coefficient tables are bit-reproducible.

trace_bsgs returns UNRESOLVED when 40 sampled points fail to pin the group
order; callers fall back to the O(p) character sum (this is rare and only
costs time, never correctness).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

UNRESOLVED = -(10**9)


@njit(cache=True)
def _modpow(b, e, m):
    b %= m
    r = 1
    while e > 0:
        if e & 1:
            r = (r * b) % m
        b = (b * b) % m
        e >>= 1
    return r


@njit(cache=True)
def _legendre(a, p):
    a %= p
    if a == 0:
        return 0
    t = _modpow(a, (p - 1) // 2, p)
    return 1 if t == 1 else -1


@njit(cache=True)
def _tonelli(n, p):
    """Square root of n mod p; assumes n is a nonzero residue."""
    n %= p
    if p % 4 == 3:
        return _modpow(n, (p + 1) // 4, p)
    q = p - 1
    s = 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while _legendre(z, p) != -1:
        z += 1
    m = s
    c = _modpow(z, q, p)
    t = _modpow(n, q, p)
    r = _modpow(n, (q + 1) // 2, p)
    while t != 1:
        i = 0
        t2 = t
        while t2 != 1:
            t2 = (t2 * t2) % p
            i += 1
        b = _modpow(c, 1 << (m - i - 1), p)
        m = i
        c = (b * b) % p
        t = (t * c) % p
        r = (r * b) % p
    return r


@njit(cache=True)
def _inv(a, p):
    return _modpow(a % p, p - 2, p)


@njit(cache=True)
def _ec_add(x1, y1, x2, y2, A, p):
    # infinity encoded as x = -1
    if x1 < 0:
        return x2, y2
    if x2 < 0:
        return x1, y1
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return -1, -1
        lam = ((3 * ((x1 * x1) % p) + A) % p) * _inv((2 * y1) % p, p) % p
    else:
        dx = (x2 - x1) % p
        lam = ((y2 - y1) % p) * _inv(dx, p) % p
    x3 = ((lam * lam) % p - x1 - x2) % p
    y3 = ((lam * ((x1 - x3) % p)) % p - y1) % p
    return x3, y3


@njit(cache=True)
def _ec_mul(k, x, y, A, p):
    rx, ry = -1, -1
    bx, by = x, y
    while k > 0:
        if k & 1:
            rx, ry = _ec_add(rx, ry, bx, by, A, p)
        bx, by = _ec_add(bx, by, bx, by, A, p)
        k >>= 1
    return rx, ry


@njit(cache=True)
def _find_multiples(px, py, A, p, mlo, L, out):
    """All m in [mlo, mlo+L] with m*P = O, written into ``out``.

    Returns the count, or -1 if the candidate set overflowed ``out``
    (which happens only for very low-order points).
    """
    bs = int(math.sqrt(L)) + 1
    baby_x = np.empty(bs + 1, dtype=np.int64)
    baby_y = np.empty(bs + 1, dtype=np.int64)
    cx, cy = -1, -1
    for j in range(bs + 1):
        baby_x[j] = cx
        baby_y[j] = cy
        cx, cy = _ec_add(cx, cy, px, py, A, p)
    gx, gy = _ec_mul(bs, px, py, A, p)
    qx, qy = _ec_mul(mlo, px, py, A, p)
    order_j = np.argsort(baby_x)
    sorted_x = baby_x[order_j]
    count = 0
    nsteps = L // bs + 2
    rx, ry = qx, qy
    for i in range(nsteps):
        # R = -(Q + i*G); solve j*P = R
        if rx < 0:
            m = mlo + i * bs
            if mlo <= m <= mlo + L:
                if count >= out.shape[0]:
                    return -1
                out[count] = m
                count += 1
        else:
            tx = rx
            tyneg = (p - ry) % p  # y of R = -(Q+iG)
            lo = np.searchsorted(sorted_x, tx)
            k = lo
            while k < sorted_x.shape[0] and sorted_x[k] == tx:
                j = order_j[k]
                by = baby_y[j]
                if by == tyneg:
                    m = mlo + i * bs + j
                    if mlo <= m <= mlo + L:
                        if count >= out.shape[0]:
                            return -1
                        out[count] = m
                        count += 1
                if by == ry and j != 0:
                    m = mlo + i * bs - j
                    if mlo <= m <= mlo + L:
                        if count >= out.shape[0]:
                            return -1
                        out[count] = m
                        count += 1
                k += 1
        rx, ry = _ec_add(rx, ry, gx, gy, A, p)
    # dedupe in place
    if count > 1:
        sub = np.sort(out[:count])
        u = 1
        for k in range(1, count):
            if sub[k] != sub[u - 1]:
                sub[u] = sub[k]
                u += 1
        out[:u] = sub[:u]
        count = u
    return count


@njit(cache=True)
def _intersect(a, na, b, nb, out):
    i = 0
    j = 0
    n = 0
    while i < na and j < nb:
        if a[i] == b[j]:
            out[n] = a[i]
            n += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return n


@njit(cache=True)
def trace_bsgs(p, A, B):
    """Trace of Frobenius for y^2 = x^3 + Ax + B mod p (good reduction, p > 457)."""
    w = int(math.sqrt(4.0 * p)) + 1
    mlo = p + 1 - w
    L = 2 * w
    g = 2
    while _legendre(g, p) != -1:
        g += 1
    A_tw = (A * g % p) * g % p
    cap = 4096
    cand_e = np.empty(cap, dtype=np.int64)
    cand_t = np.empty(cap, dtype=np.int64)
    n_e = -2  # -2 marks "no constraint yet"
    n_t = -2
    scratch = np.empty(cap, dtype=np.int64)
    buf = np.empty(cap, dtype=np.int64)
    state = (1234567 + p) % p
    for _ in range(40):
        state = (48271 * state + 1) % p
        x = state
        d = ((x * x % p) * x + A * x + B) % p
        if d == 0:
            continue
        if _legendre(d, p) == 1:
            side = 0
            X = x
            Y = _tonelli(d, p)
            Acur = A
        else:
            side = 1
            X = (x * g) % p
            d3 = (d * g % p) * g % p * g % p
            Y = _tonelli(d3, p)
            Acur = A_tw
        cnt = _find_multiples(X, Y, Acur, p, mlo, L, buf)
        if cnt <= 0:
            continue
        here = np.sort(buf[:cnt])
        if side == 0:
            if n_e == -2:
                cand_e[:cnt] = here
                n_e = cnt
            else:
                n_new = _intersect(cand_e, n_e, here, cnt, scratch)
                cand_e[:n_new] = scratch[:n_new]
                n_e = n_new
            if n_e == 1:
                return p + 1 - cand_e[0]
        else:
            if n_t == -2:
                cand_t[:cnt] = here
                n_t = cnt
            else:
                n_new = _intersect(cand_t, n_t, here, cnt, scratch)
                cand_t[:n_new] = scratch[:n_new]
                n_t = n_new
            if n_t == 1:
                return cand_t[0] - (p + 1)
    return UNRESOLVED
