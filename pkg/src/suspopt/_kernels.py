"""Compiled fixed-step integration kernels.

The kernels mirror the floating-point structure of
:mod:`suspopt.vehicle` exactly (same groupings, same interpolation
formula), so a kernel trajectory reproduces repeated calls of the pure
Python derivative functions bit for bit.  Characteristic curves are
lowered to (kind, params, table arrays, scale) tuples; kind 0 is a
linear law, 1 the exponential damper law, 2 a lookup table.

Road inputs arrive pre-sampled on the half-step grid: index 2*i is
t_i, index 2*i + 1 is t_i + dt/2.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .characteristics import (
    DamperCurve,
    LinearLaw,
    ScaledCharacteristic,
    SpringTable,
    spring_force,
)

_EMPTY = np.empty(0, dtype=np.float64)


def lower_spring(curve, offset):
    """Flatten a spring curve (plus operating point) for the kernels."""
    base = curve.base if isinstance(curve, ScaledCharacteristic) else curve
    scale = curve.scale if isinstance(curve, ScaledCharacteristic) else 1.0
    f_static = spring_force(curve, offset) if offset != 0.0 else 0.0
    if isinstance(base, LinearLaw):
        return 0, np.array([base.coefficient, 0.0, 0.0, 0.0]), _EMPTY, _EMPTY, scale, offset, f_static
    if isinstance(base, SpringTable):
        return (
            2,
            np.zeros(4),
            np.ascontiguousarray(base.deflection, dtype=np.float64),
            np.ascontiguousarray(base.force, dtype=np.float64),
            scale,
            offset,
            f_static,
        )
    raise TypeError(f"cannot lower {type(base).__name__} as a spring")


def lower_damper(curve):
    base = curve.base if isinstance(curve, ScaledCharacteristic) else curve
    scale = curve.scale if isinstance(curve, ScaledCharacteristic) else 1.0
    if isinstance(base, LinearLaw):
        return 0, np.array([base.coefficient, 0.0, 0.0, 0.0]), scale
    if isinstance(base, DamperCurve):
        return 1, np.array([base.A, base.k, base.B, base.q]), scale
    raise TypeError(f"cannot lower {type(base).__name__} as a damper")


@njit(inline="always")
def _curve_eval(kind, p, tx, tf, x):
    if kind == 0:
        return p[0] * x
    if kind == 1:
        return p[0] * math.exp(-p[1] * x) + p[2] * math.exp(p[3] * x)
    n = tx.shape[0]
    if x < tx[0]:
        slope = (tf[1] - tf[0]) / (tx[1] - tx[0])
        return tf[0] + slope * (x - tx[0])
    if x > tx[n - 1]:
        slope = (tf[n - 1] - tf[n - 2]) / (tx[n - 1] - tx[n - 2])
        return tf[n - 1] + slope * (x - tx[n - 1])
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tx[mid] <= x:
            lo = mid
        else:
            hi = mid
    slope = (tf[hi] - tf[lo]) / (tx[hi] - tx[lo])
    return slope * (x - tx[lo]) + tf[lo]


@njit(inline="always")
def _spring_dyn(kind, p, tx, tf, scale, off, f_static, c):
    if off == 0.0:
        return scale * _curve_eval(kind, p, tx, tf, c)
    return scale * _curve_eval(kind, p, tx, tf, off + c) - f_static


@njit(cache=True)
def rk4_quarter(
    y0, n, dt, zr, vr,
    m_s, m_u, k_u, b_u,
    sk, sp, stx, stf, ss, soff, sf0,
    dk, dp, ds,
):
    states = np.empty((n + 1, 4))
    acc_s = np.empty(n + 1)
    acc_u = np.empty(n + 1)
    ft_out = np.empty(n + 1)
    z_s, v_s, z_u, v_u = y0[0], y0[1], y0[2], y0[3]
    states[0, 0] = z_s
    states[0, 1] = v_s
    states[0, 2] = z_u
    states[0, 3] = v_u
    half = 0.5 * dt
    sixth = dt / 6.0
    bad = -1
    for i in range(n + 1):
        j = 2 * i
        # derivative at the stored sample, also recorded as output channels
        c = z_u - z_s
        v = v_s - v_u
        p = _spring_dyn(sk, sp, stx, stf, ss, soff, sf0, c) - ds * _curve_eval(
            dk, dp, _EMPTY, _EMPTY, v
        )
        ft = k_u * (zr[j] - z_u) + b_u * (vr[j] - v_u)
        a1s = p / m_s
        a1u = (ft - p) / m_u
        acc_s[i] = a1s
        acc_u[i] = a1u
        ft_out[i] = ft
        if i == n:
            break
        k1_0, k1_1, k1_2, k1_3 = v_s, a1s, v_u, a1u

        zs = z_s + half * k1_0
        vs = v_s + half * k1_1
        zu = z_u + half * k1_2
        vu = v_u + half * k1_3
        c = zu - zs
        v = vs - vu
        p = _spring_dyn(sk, sp, stx, stf, ss, soff, sf0, c) - ds * _curve_eval(
            dk, dp, _EMPTY, _EMPTY, v
        )
        ft = k_u * (zr[j + 1] - zu) + b_u * (vr[j + 1] - vu)
        k2_0, k2_1, k2_2, k2_3 = vs, p / m_s, vu, (ft - p) / m_u

        zs = z_s + half * k2_0
        vs = v_s + half * k2_1
        zu = z_u + half * k2_2
        vu = v_u + half * k2_3
        c = zu - zs
        v = vs - vu
        p = _spring_dyn(sk, sp, stx, stf, ss, soff, sf0, c) - ds * _curve_eval(
            dk, dp, _EMPTY, _EMPTY, v
        )
        ft = k_u * (zr[j + 1] - zu) + b_u * (vr[j + 1] - vu)
        k3_0, k3_1, k3_2, k3_3 = vs, p / m_s, vu, (ft - p) / m_u

        zs = z_s + dt * k3_0
        vs = v_s + dt * k3_1
        zu = z_u + dt * k3_2
        vu = v_u + dt * k3_3
        c = zu - zs
        v = vs - vu
        p = _spring_dyn(sk, sp, stx, stf, ss, soff, sf0, c) - ds * _curve_eval(
            dk, dp, _EMPTY, _EMPTY, v
        )
        ft = k_u * (zr[j + 2] - zu) + b_u * (vr[j + 2] - vu)
        k4_0, k4_1, k4_2, k4_3 = vs, p / m_s, vu, (ft - p) / m_u

        z_s = z_s + sixth * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0)
        v_s = v_s + sixth * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1)
        z_u = z_u + sixth * (k1_2 + 2.0 * k2_2 + 2.0 * k3_2 + k4_2)
        v_u = v_u + sixth * (k1_3 + 2.0 * k2_3 + 2.0 * k3_3 + k4_3)
        states[i + 1, 0] = z_s
        states[i + 1, 1] = v_s
        states[i + 1, 2] = z_u
        states[i + 1, 3] = v_u
        if not (
            math.isfinite(z_s)
            and math.isfinite(v_s)
            and math.isfinite(z_u)
            and math.isfinite(v_u)
        ):
            bad = i + 1
            break
    return states, acc_s, acc_u, ft_out, bad


@njit(inline="always")
def _half_forces(y, zl, zr, h, sl, sr, dl, dr, k_ul, k_ur):
    # CPython emits CALL_FUNCTION_EX above ~30 positional args, which
    # numba cannot inline, so the per-corner curves travel as tuples
    lsk, lsp, lstx, lstf, lss, lsoff, lsf0 = sl
    rsk, rsp, rstx, rstf, rss, rsoff, rsf0 = sr
    ldk, ldp, lds = dl
    rdk, rdp, rds = dr
    z_s, v_s, z_u, v_u = y[0], y[1], y[2], y[3]
    phi_s, w_s, phi_u, w_u = y[4], y[5], y[6], y[7]
    c_left = (z_u + phi_u * h) - (z_s + phi_s * h)
    c_right = (z_u - phi_u * h) - (z_s - phi_s * h)
    v_left = (v_s + w_s * h) - (v_u + w_u * h)
    v_right = (v_s - w_s * h) - (v_u - w_u * h)
    p_left = _spring_dyn(lsk, lsp, lstx, lstf, lss, lsoff, lsf0, c_left) - lds * _curve_eval(
        ldk, ldp, _EMPTY, _EMPTY, v_left
    )
    p_right = _spring_dyn(rsk, rsp, rstx, rstf, rss, rsoff, rsf0, c_right) - rds * _curve_eval(
        rdk, rdp, _EMPTY, _EMPTY, v_right
    )
    t_left = k_ul * (zl - (z_u + phi_u * h))
    t_right = k_ur * (zr - (z_u - phi_u * h))
    return p_left, p_right, t_left, t_right


@njit(cache=True)
def rk4_half(
    y0, n, dt, zl, zr,
    m_s, m_u, I_xx, I_uxx, h, k_ul, k_ur,
    lsk, lsp, lstx, lstf, lss, lsoff, lsf0,
    rsk, rsp, rstx, rstf, rss, rsoff, rsf0,
    ldk, ldp, lds, rdk, rdp, rds,
):
    states = np.empty((n + 1, 8))
    acc_s = np.empty(n + 1)
    acc_u = np.empty(n + 1)
    racc_s = np.empty(n + 1)
    ftl_out = np.empty(n + 1)
    ftr_out = np.empty(n + 1)
    y = y0.copy()
    states[0] = y
    half = 0.5 * dt
    sixth = dt / 6.0
    sl = (lsk, lsp, lstx, lstf, lss, lsoff, lsf0)
    sr = (rsk, rsp, rstx, rstf, rss, rsoff, rsf0)
    dl = (ldk, ldp, lds)
    dr = (rdk, rdp, rds)
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    yt = np.empty(8)
    bad = -1
    for i in range(n + 1):
        j = 2 * i
        pl, pr, tl, tr = _half_forces(y, zl[j], zr[j], h, sl, sr, dl, dr, k_ul, k_ur)
        a_s = (pl + pr) / m_s
        al_s = (pl - pr) * h / I_xx
        a_u = ((tl - pl) + (tr - pr)) / m_u
        al_u = ((tl - pl) - (tr - pr)) * h / I_uxx
        acc_s[i] = a_s
        acc_u[i] = a_u
        racc_s[i] = al_s
        # tension-positive corner tire forces
        ftl_out[i] = -tl
        ftr_out[i] = -tr
        if i == n:
            break
        k1[0] = y[1]
        k1[1] = a_s
        k1[2] = y[3]
        k1[3] = a_u
        k1[4] = y[5]
        k1[5] = al_s
        k1[6] = y[7]
        k1[7] = al_u

        for m in range(8):
            yt[m] = y[m] + half * k1[m]
        pl, pr, tl, tr = _half_forces(yt, zl[j + 1], zr[j + 1], h, sl, sr, dl, dr, k_ul, k_ur)
        k2[0] = yt[1]
        k2[1] = (pl + pr) / m_s
        k2[2] = yt[3]
        k2[3] = ((tl - pl) + (tr - pr)) / m_u
        k2[4] = yt[5]
        k2[5] = (pl - pr) * h / I_xx
        k2[6] = yt[7]
        k2[7] = ((tl - pl) - (tr - pr)) * h / I_uxx

        for m in range(8):
            yt[m] = y[m] + half * k2[m]
        pl, pr, tl, tr = _half_forces(yt, zl[j + 1], zr[j + 1], h, sl, sr, dl, dr, k_ul, k_ur)
        k3[0] = yt[1]
        k3[1] = (pl + pr) / m_s
        k3[2] = yt[3]
        k3[3] = ((tl - pl) + (tr - pr)) / m_u
        k3[4] = yt[5]
        k3[5] = (pl - pr) * h / I_xx
        k3[6] = yt[7]
        k3[7] = ((tl - pl) - (tr - pr)) * h / I_uxx

        for m in range(8):
            yt[m] = y[m] + dt * k3[m]
        pl, pr, tl, tr = _half_forces(yt, zl[j + 2], zr[j + 2], h, sl, sr, dl, dr, k_ul, k_ur)
        k4[0] = yt[1]
        k4[1] = (pl + pr) / m_s
        k4[2] = yt[3]
        k4[3] = ((tl - pl) + (tr - pr)) / m_u
        k4[4] = yt[5]
        k4[5] = (pl - pr) * h / I_xx
        k4[6] = yt[7]
        k4[7] = ((tl - pl) - (tr - pr)) * h / I_uxx

        ok = True
        for m in range(8):
            y[m] = y[m] + sixth * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
            states[i + 1, m] = y[m]
            if not math.isfinite(y[m]):
                ok = False
        if not ok:
            bad = i + 1
            break
    return states, acc_s, acc_u, racc_s, ftl_out, ftr_out, bad


def warm_up():
    """Trigger kernel compilation (or cache load) with tiny problems."""
    y0 = np.zeros(4)
    grid = np.zeros(5)
    rk4_quarter(
        y0, 2, 1e-3, grid, grid, 450.0, 45.0, 2e5, 150.0,
        0, np.array([22000.0, 0.0, 0.0, 0.0]), _EMPTY, _EMPTY, 1.0, 0.0, 0.0,
        0, np.array([1800.0, 0.0, 0.0, 0.0]), 1.0,
    )
    s = (0, np.array([22000.0, 0.0, 0.0, 0.0]), _EMPTY, _EMPTY, 1.0, 0.0, 0.0)
    d = (0, np.array([1800.0, 0.0, 0.0, 0.0]), 1.0)
    rk4_half(
        np.zeros(8), 2, 1e-3, grid, grid,
        900.0, 90.0, 250.0, 40.0, 0.8, 2e5, 2e5,
        *s, *s, *d, *d,
    )
