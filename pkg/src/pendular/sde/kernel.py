"""Compiled inner loop for positive-P trajectories.

Each trajectory is advanced independently with scalar arithmetic, so its
result does not depend on which block or worker it was computed in.
"""
import math

import numba
import numpy as np


@numba.njit(inline="always")
def _csqrt(z):
    # principal branch, same convention as cmath.sqrt
    x = z.real
    y = z.imag
    if x == 0.0 and y == 0.0:
        return complex(0.0, y)
    t = math.sqrt((abs(x) + math.hypot(x, y)) * 0.5)
    if x >= 0.0:
        return complex(t, y / (2.0 * t))
    return complex(abs(y) / (2.0 * t), math.copysign(t, y))


@numba.njit(inline="always")
def _conj_root(s):
    # principal sqrt(-s^2) from s = sqrt(w): the candidate is i*s or -i*s
    c = complex(-s.imag, s.real)
    if c.real > 0.0 or (c.real == 0.0 and c.imag >= 0.0):
        return c
    return -c


@numba.njit(cache=True)
def integrate_block(
    state, noise, records, diverged_at, step_offset, n_steps, stride, sub,
    dt, eps, gam, delta, gA, wm, gm, therm, n_iter, threshold,
):
    """Advance every trajectory in ``state`` (B, 4) by ``n_steps`` steps.

    ``noise`` holds standard normals of shape (B, n_steps*sub, 5); each step
    sums ``sub`` consecutive draws, which is the Brownian increment over
    ``dt`` when the same stream is integrated at ``dt/sub``.  States are
    written to ``records`` (B, n_steps//stride, 4) after every ``stride``
    steps.  A trajectory whose magnitude exceeds ``threshold`` (or turns
    non-finite) is frozen and its step number stored in ``diverged_at``.
    """
    B = state.shape[0]
    sdt = math.sqrt(dt / sub)
    h = 0.5 * gA
    fa = complex(gam, delta)
    fap = complex(gam, -delta)
    for j in range(B):
        if diverged_at[j] >= 0:
            continue
        a = state[j, 0]
        ap = state[j, 1]
        b = state[j, 2]
        bp = state[j, 3]
        for k in range(n_steps):
            w1 = 0.0
            w2 = 0.0
            w3 = 0.0
            w4 = 0.0
            w5 = 0.0
            base = k * sub
            for s in range(sub):
                w1 += noise[j, base + s, 0]
                w2 += noise[j, base + s, 1]
                w3 += noise[j, base + s, 2]
                w4 += noise[j, base + s, 3]
                w5 += noise[j, base + s, 4]
            w1 *= sdt
            w2 *= sdt
            w3 *= sdt
            w4 *= sdt
            w5 *= sdt
            tw = therm * w1
            ma = a
            map_ = ap
            mb = b
            mbp = bp
            for _ in range(n_iter):
                xb = mb + mbp
                n = map_ * ma
                # sqrt(-i gA alpha / 2) and sqrt(+i gA alpha / 2)
                s1 = _csqrt(complex(h * ma.imag, -h * ma.real))
                s2 = _conj_root(s1)
                # sqrt(+i gA alpha+ / 2) and sqrt(-i gA alpha+ / 2)
                s3 = _csqrt(complex(-h * map_.imag, h * map_.real))
                s4 = _conj_root(s3)
                da = (eps - fa * ma + 1j * gA * ma * xb) * dt + s1 * w2 + s2 * w3
                dap = (eps - fap * map_ - 1j * gA * map_ * xb) * dt + s3 * w4 - s4 * w5
                damp = gm * (mb - mbp)
                db = (-1j * wm * mb - damp + 1j * gA * n) * dt - tw + s1 * w2 - s2 * w3
                dbp = (1j * wm * mbp + damp - 1j * gA * n) * dt + tw + s3 * w4 + s4 * w5
                ma = a + 0.5 * da
                map_ = ap + 0.5 * dap
                mb = b + 0.5 * db
                mbp = bp + 0.5 * dbp
            a = 2.0 * ma - a
            ap = 2.0 * map_ - ap
            b = 2.0 * mb - b
            bp = 2.0 * mbp - bp
            if not (abs(a) <= threshold and abs(ap) <= threshold
                    and abs(b) <= threshold and abs(bp) <= threshold):
                diverged_at[j] = step_offset + k + 1
                for r in range(k // stride, records.shape[1]):
                    for c in range(4):
                        records[j, r, c] = complex(np.nan, np.nan)
                break
            if (k + 1) % stride == 0:
                r = (k + 1) // stride - 1
                records[j, r, 0] = a
                records[j, r, 1] = ap
                records[j, r, 2] = b
                records[j, r, 3] = bp
        state[j, 0] = a
        state[j, 1] = ap
        state[j, 2] = b
        state[j, 3] = bp
