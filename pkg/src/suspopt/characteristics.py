"""Spring and damper characteristic curves.

A characteristic maps a scalar input to a force: deflection for springs
(compression positive) and relative velocity for dampers (extension,
i.e. rebound, positive).  Three families are supported:

* :class:`LinearLaw` -- force proportional to the input,
* :class:`DamperCurve` -- two-branch exponential damper law
  ``F(v) = A*exp(-k*v) + B*exp(q*v)``,
* :class:`SpringTable` -- piecewise-linear lookup with end-slope
  extrapolation beyond the tabulated range.

During optimization a curve is shaped by a single multiplicative design
variable, represented by :class:`ScaledCharacteristic`; the scaled force
is computed as ``scale * base(x)`` so scaling is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CurveError, FitError

__all__ = [
    "LinearLaw",
    "DamperCurve",
    "SpringTable",
    "ScaledCharacteristic",
    "DamperFit",
    "scale_characteristic",
    "spring_force",
    "damper_force",
    "fit_damper_curve",
    "load_table",
    "save_table",
]


def _require_finite_scalar(name, value):
    if not math.isfinite(value):
        raise CurveError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class LinearLaw:
    """Force proportional to the input, ``F(x) = coefficient * x``.

    Usable both as a spring (stiffness N/m) and as a damper
    (rate N s/m).  The coefficient must be positive.
    """

    coefficient: float

    def __post_init__(self):
        _require_finite_scalar("coefficient", self.coefficient)
        if self.coefficient <= 0.0:
            raise CurveError(
                f"coefficient must be positive, got {self.coefficient!r}"
            )

    def __call__(self, x):
        return self.coefficient * x


@dataclass(frozen=True)
class DamperCurve:
    """Exponential damper law ``F(v) = A*exp(-k*v) + B*exp(q*v)``.

    Positive velocity is rebound (extension).  The exponents k and q
    must be positive; A and B carry the branch signs, so a typical
    non-symmetric damper has A < 0 < B.  F(0) = A + B.
    """

    A: float
    k: float
    B: float
    q: float

    def __post_init__(self):
        for name in ("A", "k", "B", "q"):
            _require_finite_scalar(name, getattr(self, name))
        if self.k <= 0.0 or self.q <= 0.0:
            raise CurveError(
                f"exponents must be positive, got k={self.k!r}, q={self.q!r}"
            )

    def __call__(self, v):
        return self.A * np.exp(-self.k * v) + self.B * np.exp(self.q * v)

    def parameters(self):
        return (self.A, self.k, self.B, self.q)


@dataclass(frozen=True)
class SpringTable:
    """Piecewise-linear deflection/force lookup table.

    Deflections must be strictly increasing and forces non-decreasing
    (a physical spring never pushes back less when compressed more).
    Outside the tabulated range the curve continues with the slope of
    the nearest end segment.
    """

    deflection: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.deflection, dtype=float)
        f = np.asarray(self.force, dtype=float)
        if x.ndim != 1 or f.ndim != 1 or x.size != f.size:
            raise CurveError("deflection and force must be 1-d arrays of equal length")
        if x.size < 2:
            raise CurveError("a lookup table needs at least two points")
        if not (np.isfinite(x).all() and np.isfinite(f).all()):
            raise CurveError("table entries must be finite")
        if not (np.diff(x) > 0.0).all():
            raise CurveError("deflection values must be strictly increasing")
        if (np.diff(f) < 0.0).any():
            raise CurveError("force values must be non-decreasing")
        x.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "deflection", x)
        object.__setattr__(self, "force", f)

    def __call__(self, x):
        xs, fs = self.deflection, self.force
        scalar = np.isscalar(x) or np.ndim(x) == 0
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.interp(xq, xs, fs)
        lo_slope = (fs[1] - fs[0]) / (xs[1] - xs[0])
        hi_slope = (fs[-1] - fs[-2]) / (xs[-1] - xs[-2])
        below = xq < xs[0]
        above = xq > xs[-1]
        if below.any():
            y[below] = fs[0] + lo_slope * (xq[below] - xs[0])
        if above.any():
            y[above] = fs[-1] + hi_slope * (xq[above] - xs[-1])
        return float(y[0]) if scalar else y


@dataclass(frozen=True)
class ScaledCharacteristic:
    """A base curve multiplied by a positive scale factor."""

    base: object
    scale: float = 1.0

    def __post_init__(self):
        _require_finite_scalar("scale", self.scale)
        if self.scale <= 0.0:
            raise CurveError(f"scale must be positive, got {self.scale!r}")
        if not isinstance(self.base, (LinearLaw, DamperCurve, SpringTable)):
            raise CurveError(f"cannot scale object of type {type(self.base).__name__}")

    def __call__(self, x):
        return self.scale * self.base(x)


def scale_characteristic(base, scale):
    """Return ``base`` scaled by the factor ``scale``.

    Scaling an already scaled curve multiplies the factors, so the
    result always wraps an unscaled base curve.
    """
    _require_finite_scalar("scale", scale)
    if scale <= 0.0:
        raise CurveError(f"scale must be positive, got {scale!r}")
    if isinstance(base, ScaledCharacteristic):
        return ScaledCharacteristic(base.base, base.scale * scale)
    return ScaledCharacteristic(base, scale)


def _unwrap(curve):
    if isinstance(curve, ScaledCharacteristic):
        return curve.base, curve.scale
    return curve, 1.0


def _check_input(value, what):
    arr = np.asarray(value, dtype=float)
    if not np.isfinite(arr).all():
        raise CurveError(f"{what} input must be finite")
    return value


def spring_force(curve, deflection):
    """Spring force at the given deflection (compression positive)."""
    base, scale = _unwrap(curve)
    if not isinstance(base, (LinearLaw, SpringTable)):
        raise CurveError(f"{type(base).__name__} cannot act as a spring")
    _check_input(deflection, "deflection")
    return scale * base(deflection)


def damper_force(curve, velocity):
    """Damper force at the given relative velocity (rebound positive)."""
    base, scale = _unwrap(curve)
    if not isinstance(base, (LinearLaw, DamperCurve)):
        raise CurveError(f"{type(base).__name__} cannot act as a damper")
    _check_input(velocity, "velocity")
    return scale * base(velocity)


def load_table(path):
    """Read a two-column numeric text table.

    Lines starting with '#' are comments.  Returns (input, force)
    arrays in file order.
    """
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise CurveError(f"{path}: expected two numeric columns, got {data.shape[1]}")
    if data.shape[0] == 0:
        raise CurveError(f"{path}: table is empty")
    return data[:, 0], data[:, 1]


def save_table(path, x, force, header=None):
    """Write a two-column table with full float precision."""
    x = np.asarray(x, dtype=float)
    force = np.asarray(force, dtype=float)
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for xi, fi in zip(x, force):
            fh.write(f"{float(xi)!r} {float(fi)!r}\n")


# ---------------------------------------------------------------------------
# damper curve fitting


@dataclass(frozen=True)
class DamperFit:
    """Result of fitting a DamperCurve to measured samples."""

    curve: DamperCurve
    residual_rms: float
    iterations: int


def _fit_residual(params, v, force):
    a, k, b, q = params
    with np.errstate(over="ignore"):
        model = a * np.exp(-k * v) + b * np.exp(q * v)
    return model - force


def _fit_jacobian(params, v):
    a, k, b, q = params
    with np.errstate(over="ignore"):
        en = np.exp(-k * v)
        ep = np.exp(q * v)
    jac = np.empty((v.size, 4))
    jac[:, 0] = en
    jac[:, 1] = -a * v * en
    jac[:, 2] = ep
    jac[:, 3] = b * v * ep
    return jac


_MIN_EXPONENT = 1e-8


def _levenberg_refine(start, v, force, max_iterations, tolerance):
    """Damped Gauss-Newton iteration from one starting point.

    Returns (params, cost, iterations, converged).
    """
    p = np.array(start, dtype=float)
    p[1] = max(p[1], _MIN_EXPONENT)
    p[3] = max(p[3], _MIN_EXPONENT)
    r = _fit_residual(p, v, force)
    cost = float(r @ r)
    if not math.isfinite(cost):
        return p, math.inf, 0, False
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        jac = _fit_jacobian(p, v)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        if float(np.abs(jtr).max()) <= 1e-12 * max(cost, 1.0):
            converged = True
            break
        accepted = False
        for _ in range(40):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = np.linalg.solve(damped, -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + step
            trial[1] = max(trial[1], _MIN_EXPONENT)
            trial[3] = max(trial[3], _MIN_EXPONENT)
            r_trial = _fit_residual(trial, v, force)
            cost_trial = float(r_trial @ r_trial)
            if math.isfinite(cost_trial) and cost_trial < cost:
                accepted = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if not accepted:
            converged = True  # no descent direction left; treat as stationary
            break
        improvement = cost - cost_trial
        p, r, cost = trial, r_trial, cost_trial
        lam = max(lam / 3.0, 1e-14)
        if improvement <= tolerance * max(cost, 1e-300):
            converged = True
            break
    return p, cost, it, converged


def _branch_start(v, force):
    """Initial guess from log-linear fits of the two velocity branches.

    For k, q > 0 the B branch dominates at large positive velocity and
    the A branch at large negative velocity, so ln|F| is nearly linear
    in v on each side.
    """
    fmax = float(np.abs(force).max())
    if fmax == 0.0:
        return None
    mask = np.abs(force) > 1e-9 * fmax
    vpos = v[(v > 0) & mask]
    fpos = force[(v > 0) & mask]
    vneg = v[(v < 0) & mask]
    fneg = force[(v < 0) & mask]
    if vpos.size < 2 or vneg.size < 2:
        return None
    # emphasise the outer half of each branch where one term dominates
    sel_p = vpos >= np.median(vpos)
    sel_n = vneg <= np.median(vneg)
    if sel_p.sum() < 2 or sel_n.sum() < 2:
        sel_p = np.ones_like(vpos, bool)
        sel_n = np.ones_like(vneg, bool)
    qp, cp = np.polyfit(vpos[sel_p], np.log(np.abs(fpos[sel_p])), 1)
    kn, cn = np.polyfit(vneg[sel_n], np.log(np.abs(fneg[sel_n])), 1)
    b0 = math.copysign(math.exp(cp), fpos[np.argmax(vpos)])
    a0 = math.copysign(math.exp(cn), fneg[np.argmin(vneg)])
    return (a0, max(-kn, _MIN_EXPONENT), b0, max(qp, _MIN_EXPONENT))


def _odd_start(v, force):
    """Initial guess for nearly linear data: a sinh-like pair with tiny
    exponents reproduces F = c*v to high accuracy over a bounded range."""
    denom = float(v @ v)
    if denom == 0.0:
        return None
    c = float(v @ force) / denom
    if c <= 0.0:
        return None
    eps = 1e-3 / max(float(np.abs(v).max()), 1.0)
    b0 = c / (2.0 * eps)
    return (-b0, eps, b0, eps)


def fit_damper_curve(velocity, force, *, max_iterations=200, tolerance=1e-14):
    """Fit the exponential damper law to sampled (velocity, force) pairs.

    Minimizes the sum of squared force residuals with a damped
    Gauss-Newton iteration using the analytic Jacobian, started from a
    log-linear split of the positive and negative velocity branches
    (plus fallback starts for one-sided or nearly linear data).

    Requires at least 4 samples with distinct velocities.  Raises
    :class:`FitError` with the best iterate attached if no start
    converges within ``max_iterations``.
    """
    v = np.asarray(velocity, dtype=float).ravel()
    f = np.asarray(force, dtype=float).ravel()
    if v.size != f.size:
        raise CurveError("velocity and force must have the same length")
    if not (np.isfinite(v).all() and np.isfinite(f).all()):
        raise CurveError("samples must be finite")
    if np.unique(v).size < 4:
        raise CurveError(
            f"need at least 4 distinct velocities to fit, got {np.unique(v).size}"
        )

    fscale = float(np.abs(f).max())
    starts = []
    for guess in (_branch_start(v, f), _odd_start(v, f)):
        if guess is not None:
            starts.append(guess)
    starts.append((-0.5 * max(fscale, 1.0), 1.0, 0.5 * max(fscale, 1.0), 1.0))

    best = None
    for start in starts:
        p, cost, it, ok = _levenberg_refine(start, v, f, max_iterations, tolerance)
        if best is None or cost < best[1]:
            best = (p, cost, it, ok)
    p, cost, it, ok = best
    rms = math.sqrt(cost / v.size)
    curve = DamperCurve(A=float(p[0]), k=float(p[1]), B=float(p[2]), q=float(p[3]))
    if not ok:
        raise FitError(
            f"damper fit did not converge within {max_iterations} iterations "
            f"(residual RMS {rms:.6g})",
            best=curve,
            residual_rms=rms,
            iterations=it,
        )
    return DamperFit(curve=curve, residual_rms=rms, iterations=it)
