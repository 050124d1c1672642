"""Independent oracle routes used by the test suite.

Everything here is deliberately written from first principles (closed
forms, plain bisection, direct quadratic forms) rather than through the
package, so tests compare two separate derivations.
"""

from __future__ import annotations

import numpy as np

from suspopt import LinearLaw
from suspopt.vehicle import HalfCarParams, QuarterCarParams

# desk parameter set used throughout the tests: a loaded commercial-van
# corner with a firm damper
DESK = dict(m_s=450.0, m_u=45.0, k_s=22000.0, b_s=1800.0, k_u=200000.0, b_u=150.0)
DESK_HALF = dict(
    m_s=900.0, m_u=90.0, I_xx=250.0, I_uxx=40.0, track=1.6,
    k_s=22000.0, b_s=1800.0, k_u=200000.0,
)


def desk_quarter(spring=None, damper=None, **overrides):
    p = dict(DESK)
    p.update(overrides)
    return QuarterCarParams(
        m_s=p["m_s"],
        m_u=p["m_u"],
        spring=spring if spring is not None else LinearLaw(p["k_s"]),
        damper=damper if damper is not None else LinearLaw(p["b_s"]),
        k_u=p["k_u"],
        b_u=p["b_u"],
    )


def desk_half(spring=None, damper=None, **overrides):
    p = dict(DESK_HALF)
    p.update(overrides)
    return HalfCarParams.symmetric(
        m_s=p["m_s"],
        m_u=p["m_u"],
        I_xx=p["I_xx"],
        I_uxx=p["I_uxx"],
        track=p["track"],
        spring=spring if spring is not None else LinearLaw(p["k_s"]),
        damper=damper if damper is not None else LinearLaw(p["b_s"]),
        k_u=p["k_u"],
    )


def bisection_root(fn, lo, hi, tol=1e-12, max_iter=200):
    """Plain bisection; requires a sign change on [lo, hi]."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    assert flo * fhi < 0.0, "no sign change"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def quarter_state_matrix(m_s, m_u, k_s, b_s, k_u, b_u):
    """4x4 state matrix of the linear quarter car, state [z_s,v_s,z_u,v_u]."""
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-k_s / m_s, -b_s / m_s, k_s / m_s, b_s / m_s],
            [0.0, 0.0, 0.0, 1.0],
            [k_s / m_u, b_s / m_u, -(k_s + k_u) / m_u, -(b_s + b_u) / m_u],
        ]
    )


def quarter_transfer(f, m_s, m_u, k_s, b_s, k_u, b_u, output="body"):
    """Road-displacement to body/axle-displacement transfer function.

    Solves the two coupled frequency-domain equations directly.
    """
    s = 2j * np.pi * np.asarray(f, dtype=float)
    ks = k_s + b_s * s
    kt = k_u + b_u * s
    a11 = m_s * s**2 + ks
    a12 = -ks
    a22 = m_u * s**2 + ks + kt
    det = a11 * a22 - a12 * a12
    z_u = a11 * kt / det
    z_s = -a12 * kt / det
    return z_s if output == "body" else z_u


def sprung_mode_frequency(m_s, m_u, k_s, b_s, k_u, b_u):
    """Damped frequency (Hz) of the sprung-mass mode from the eigenvalues."""
    ev = np.linalg.eigvals(quarter_state_matrix(m_s, m_u, k_s, b_s, k_u, b_u))
    ev = ev[np.imag(ev) > 0.0]
    return float(np.sort(np.imag(ev))[0] / (2.0 * np.pi))


def quarter_energy(states, m_s, m_u, k_s, k_u):
    """Total mechanical energy of the undamped quarter car on a flat road."""
    z_s, v_s, z_u, v_u = states[:, 0], states[:, 1], states[:, 2], states[:, 3]
    return (
        0.5 * m_s * v_s**2
        + 0.5 * m_u * v_u**2
        + 0.5 * k_s * (z_s - z_u) ** 2
        + 0.5 * k_u * z_u**2
    )


def plain_rms(x):
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x)))
