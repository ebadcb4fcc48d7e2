"""Compiled inner loops.

Solution values are carried as ``periods + frac`` with ``periods`` integral
and ``0 <= frac < 1``.  The forcing only ever sees ``phase + frac`` and the
diffusion only sees integer second differences of ``periods``, so adding an
integer to every period count commutes with a step exactly, bit for bit.
"""

import numpy as np
from numba import njit

CONSTANT = 0
SHIFTED_COSINE = 1
TOUCHING = 2
TABULATED = 3

TWO_PI = 2.0 * np.pi


@njit(cache=True)
def unit_reduce(v):
    r = v - np.floor(v)
    if r >= 1.0:
        r -= 1.0
    return r


@njit(cache=True)
def g_at(code, a, b, table, v):
    r = unit_reduce(v)
    if code == CONSTANT:
        return a
    elif code == SHIFTED_COSINE:
        return -(a + b * np.cos(TWO_PI * r))
    elif code == TOUCHING:
        return -0.5 * a * (1.0 - np.cos(TWO_PI * r))
    m = table.shape[0] - 1
    s = r * m
    j = int(s)
    if j >= m:
        j = m - 1
    theta = s - j
    return table[j] + theta * (table[j + 1] - table[j])


@njit(cache=True)
def g_array(code, a, b, table, v):
    out = np.empty(v.shape[0])
    for i in range(v.shape[0]):
        out[i] = g_at(code, a, b, table, v[i])
    return out


@njit(cache=True)
def tri_factor(diag, r):
    """Forward coefficients for diag[i] y_i - r y_{i-1} - r y_{i+1} = d_i."""
    n = diag.shape[0]
    cp = np.zeros(n)
    m = np.empty(n)
    m[0] = diag[0]
    for i in range(1, n):
        cp[i - 1] = r / m[i - 1]
        m[i] = diag[i] - r * cp[i - 1]
    return cp, m


@njit(cache=True)
def tri_solve(cp, m, r, d, y):
    # all coefficients positive, so the solve is monotone under rounding
    n = d.shape[0]
    y[0] = d[0] / m[0]
    for i in range(1, n):
        y[i] = (d[i] + r * y[i - 1]) / m[i]
    for i in range(n - 2, -1, -1):
        y[i] = y[i] + cp[i] * y[i + 1]


def cyclic_factor(n, r):
    """Precompute the rank-one corrected factorisation of I - r*D2 (cyclic)."""
    b0 = 1.0 + 2.0 * r
    gamma = -b0
    diag = np.full(n, b0)
    diag[0] = b0 - gamma
    diag[-1] = b0 - r * r / gamma
    cp, m = tri_factor(diag, r)
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = -r
    z = np.empty(n)
    tri_solve(cp, m, r, u, z)
    vz_ratio = -r / gamma
    denom = 1.0 + z[0] + vz_ratio * z[-1]
    return cp, m, z, vz_ratio, denom


@njit(cache=True)
def cyclic_solve(cp, m, z, vz_ratio, denom, r, d, y):
    tri_solve(cp, m, r, d, y)
    fac = (y[0] + vz_ratio * y[y.shape[0] - 1]) / denom
    for i in range(y.shape[0]):
        y[i] -= fac * z[i]


@njit(cache=True)
def renormalise(periods, frac, y, lo, hi):
    for i in range(lo, hi):
        k = np.floor(y[i])
        fr = y[i] - k
        if fr >= 1.0:
            fr -= 1.0
            k += 1.0
        periods[i] += k
        frac[i] = fr


@njit(cache=True)
def periodic_rhs(periods, frac, phase, code, a, b, table, r, dt_react, include_frac_diffusion, rhs):
    n = periods.shape[0]
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        d2n = periods[ip] - 2.0 * periods[i] + periods[im]
        val = frac[i] - dt_react * g_at(code, a, b, table, phase[i] + frac[i])
        if include_frac_diffusion:
            val += r * (d2n + (frac[ip] - 2.0 * frac[i] + frac[im]))
        else:
            val += r * d2n
        rhs[i] = val


@njit(cache=True)
def advance_periodic_imex(periods, frac, phase, code, a, b, table, r, dt_react,
                          cp, m, z, vz_ratio, denom, nsteps):
    n = periods.shape[0]
    rhs = np.empty(n)
    y = np.empty(n)
    for _ in range(nsteps):
        periodic_rhs(periods, frac, phase, code, a, b, table, r, dt_react, False, rhs)
        if n > 1 and r > 0.0:
            cyclic_solve(cp, m, z, vz_ratio, denom, r, rhs, y)
        else:
            y[:] = rhs
        renormalise(periods, frac, y, 0, n)


@njit(cache=True)
def advance_periodic_explicit(periods, frac, phase, code, a, b, table, r, dt_react, nsteps):
    n = periods.shape[0]
    y = np.empty(n)
    for _ in range(nsteps):
        periodic_rhs(periods, frac, phase, code, a, b, table, r, dt_react, True, y)
        renormalise(periods, frac, y, 0, n)


@njit(cache=True)
def companion_value(periods, frac, position):
    """Periodic linear interpolation at ``position`` in [0, 1), split form."""
    n = periods.shape[0]
    s = position * n
    j = int(s)
    if j >= n:
        j = n - 1
    theta = s - j
    jp = j + 1 if j < n - 1 else 0
    val = frac[j] + theta * ((periods[jp] - periods[j]) + (frac[jp] - frac[j]))
    k = np.floor(val)
    fr = val - k
    if fr >= 1.0:
        fr -= 1.0
        k += 1.0
    return periods[j] + k, fr


@njit(cache=True)
def advance_direct(periods, frac, phase, code, a, b, table, r, dt_react, cp, m,
                   c_periods, c_frac, c_phase, c_r, c_cp, c_m, c_z, c_vz, c_denom,
                   bc_left, bc_right, nsteps):
    """Dirichlet IMEX steps on a line, boundaries fed by a periodic companion.

    ``bc_left``/``bc_right`` are positions in the companion period at which the
    boundary values are read.
    """
    n = periods.shape[0]
    ni = n - 2
    rhs = np.empty(ni)
    y = np.empty(ni)
    nc = c_periods.shape[0]
    c_rhs = np.empty(nc)
    c_y = np.empty(nc)
    for _ in range(nsteps):
        periodic_rhs(c_periods, c_frac, c_phase, code, a, b, table, c_r, dt_react, False, c_rhs)
        if nc > 1 and c_r > 0.0:
            cyclic_solve(c_cp, c_m, c_z, c_vz, c_denom, c_r, c_rhs, c_y)
        else:
            c_y[:] = c_rhs
        renormalise(c_periods, c_frac, c_y, 0, nc)
        lp, lf = companion_value(c_periods, c_frac, bc_left)
        rp, rf = companion_value(c_periods, c_frac, bc_right)

        for i in range(1, n - 1):
            d2n = periods[i + 1] - 2.0 * periods[i] + periods[i - 1]
            rhs[i - 1] = (frac[i] - dt_react * g_at(code, a, b, table, phase[i] + frac[i])) + r * d2n
        y_left = (lp - periods[0]) + lf
        y_right = (rp - periods[n - 1]) + rf
        rhs[0] += r * y_left
        rhs[ni - 1] += r * y_right
        tri_solve(cp, m, r, rhs, y)
        for i in range(ni):
            k = np.floor(y[i])
            fr = y[i] - k
            if fr >= 1.0:
                fr -= 1.0
                k += 1.0
            periods[i + 1] += k
            frac[i + 1] = fr
        periods[0] = lp
        frac[0] = lf
        periods[n - 1] = rp
        frac[n - 1] = rf


@njit(cache=True)
def rk4_scalar(v0, code, a, b, table, rate, dt, nsteps, sample_every, out):
    """Integrate v' = -rate * g(v) and record v every ``sample_every`` steps."""
    v = v0
    out[0] = v
    k = 1
    for step in range(1, nsteps + 1):
        k1 = -rate * g_at(code, a, b, table, v)
        k2 = -rate * g_at(code, a, b, table, v + 0.5 * dt * k1)
        k3 = -rate * g_at(code, a, b, table, v + 0.5 * dt * k2)
        k4 = -rate * g_at(code, a, b, table, v + dt * k3)
        v = v + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if step % sample_every == 0:
            out[k] = v
            k += 1
    return v
