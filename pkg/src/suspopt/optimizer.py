"""Box-constrained local minimization and objective-surface gridding.

The search is a projected quasi-Newton descent: BFGS-updated inverse
curvature, backtracking Armijo line search, and projection of every
trial point onto the box.  The design problems here constrain nothing
but bounds on characteristic scale factors, for which projection is
exact, so no constraint linearization is needed.

Gradients come from central finite differences with a relative step per
variable; probes are clipped to the box, falling back to a one-sided
difference when a bound is active.  Every objective call, probes
included, counts against the evaluation budget, and every evaluated
point lies inside the bounds.

The objective callback must be pure: same design in, same value out.
It may return either a bare scalar or a (scalar, aux) pair; aux rides
along on the accepted-iterate history (the case runner passes metric
components through it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OptimizationError, SuspoptError

DEFAULT_SCALE_BOUNDS = (0.2, 5.0)

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 30


@dataclass(frozen=True)
class DesignVector:
    """Named design variables inside a finite box."""

    names: tuple
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        vals = np.atleast_1d(np.asarray(self.values, dtype=float))
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        n = len(names)
        if n == 0:
            raise ConfigError("a design needs at least one variable")
        if vals.shape != (n,) or lo.shape != (n,) or hi.shape != (n,):
            raise ConfigError(
                f"design of {n} variables needs matching values and bounds"
            )
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigError("design values and bounds must be finite")
        if np.any(lo >= hi):
            raise ConfigError("each lower bound must lie below its upper bound")
        if np.any(vals < lo) or np.any(vals > hi):
            raise ConfigError("design values must lie within their bounds")
        for arr in (vals, lo, hi):
            arr.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def scales(cls, names, values=None, lower=None, upper=None):
        """Scale-factor variables; scales must stay strictly positive."""
        names = tuple(names)
        n = len(names)
        vals = np.ones(n) if values is None else np.asarray(values, dtype=float)
        lo = np.full(n, DEFAULT_SCALE_BOUNDS[0]) if lower is None else np.asarray(lower, dtype=float)
        hi = np.full(n, DEFAULT_SCALE_BOUNDS[1]) if upper is None else np.asarray(upper, dtype=float)
        if np.any(np.atleast_1d(lo) <= 0.0):
            raise ConfigError("scale factors need strictly positive lower bounds")
        return cls(names=names, values=vals, lower=lo, upper=hi)

    def replace_values(self, values):
        return DesignVector(self.names, values, self.lower, self.upper)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    design: np.ndarray
    value: float
    components: object = None
    step_norm: float = 0.0
    grad_norm: float = math.nan


@dataclass
class RunHistory:
    """Accepted-iterate trace; the value sequence never increases."""

    records: list = field(default_factory=list)
    termination: str = "running"
    evaluations: int = 0

    def values(self):
        return np.array([r.value for r in self.records])

    def designs(self):
        return np.array([r.design for r in self.records])

    def to_csv(self, path, names=None):
        if not self.records:
            raise OptimizationError("empty history")
        n = self.records[0].design.shape[0]
        names = list(names) if names is not None else [f"x{i}" for i in range(n)]
        comp_keys = []
        for record in self.records:
            if record.components is not None:
                comps = record.components
                comp_keys = sorted(comps.as_dict() if hasattr(comps, "as_dict") else comps)
                break
        with open(path, "w", encoding="ascii") as fh:
            cols = ["iteration", *names, "total", *comp_keys, "step_norm", "grad_norm"]
            fh.write(",".join(cols) + "\n")
            for r in self.records:
                row = [str(r.iteration)]
                row += [repr(float(v)) for v in r.design]
                row.append(repr(float(r.value)))
                comps = {}
                if r.components is not None:
                    comps = r.components.as_dict() if hasattr(r.components, "as_dict") else dict(r.components)
                row += [repr(float(comps.get(k, math.nan))) for k in comp_keys]
                row.append(repr(float(r.step_norm)))
                row.append(repr(float(r.grad_norm)))
                fh.write(",".join(row) + "\n")


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    value: float
    components: object
    history: RunHistory
    evaluations: int
    termination: str


class _BudgetExhausted(Exception):
    pass


class _Counter:
    """Counts objective calls and splits off the aux payload."""

    def __init__(self, objective, budget):
        self.objective = objective
        self.budget = budget
        self.calls = 0

    def __call__(self, x):
        if self.calls >= self.budget:
            raise _BudgetExhausted
        self.calls += 1
        out = self.objective(np.array(x))
        if isinstance(out, tuple):
            value, aux = out
        else:
            value, aux = out, None
        return float(value), aux


def _project(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def _gradient(f, x, fx, lo, hi, rel_step):
    """Central differences, clipped inward with one-sided fallback."""
    n = x.shape[0]
    g = np.empty(n)
    for i in range(n):
        h = rel_step * max(abs(x[i]), 1.0)
        up = x[i] + h <= hi[i]
        down = x[i] - h >= lo[i]
        xp = x.copy()
        if up and down:
            xp[i] = x[i] + h
            f_up, _ = f(xp)
            xp[i] = x[i] - h
            f_down, _ = f(xp)
            g[i] = (f_up - f_down) / (2.0 * h)
        elif up:
            xp[i] = x[i] + h
            f_up, _ = f(xp)
            g[i] = (f_up - fx) / h
        elif down:
            xp[i] = x[i] - h
            f_down, _ = f(xp)
            g[i] = (fx - f_down) / h
        else:
            raise ConfigError(
                f"bounds of variable {i} are narrower than the probe step {h!r}"
            )
        if not math.isfinite(g[i]):
            # a non-finite probe gives no usable slope; freeze this
            # coordinate for the step and let the line search guard values
            g[i] = 0.0
    return g


def minimize(
    objective,
    design,
    grad_rel_step=1e-4,
    grad_tol=1e-8,
    step_tol=1e-11,
    max_evaluations=400,
):
    """Projected BFGS descent inside the design box.

    Returns a MinimizeResult holding the best point found, its value and
    aux payload, and the complete accepted-iterate history.
    """
    if not isinstance(design, DesignVector):
        raise ConfigError("minimize needs a DesignVector start point")
    if not (isinstance(max_evaluations, int) and max_evaluations >= 1):
        raise ConfigError(f"evaluation budget must be a positive integer, got {max_evaluations!r}")
    if not (math.isfinite(grad_rel_step) and grad_rel_step > 0.0):
        raise ConfigError(f"gradient step must be positive, got {grad_rel_step!r}")

    lo, hi = design.lower, design.upper
    f = _Counter(objective, max_evaluations)
    history = RunHistory()

    x = _project(design.values.copy(), lo, hi)
    fx, aux = f(x)
    if not math.isfinite(fx):
        raise OptimizationError(f"objective is not finite at the start point: {fx!r}")
    best_x, best_f, best_aux = x.copy(), fx, aux

    def record(iteration, x, fx, aux, step_norm, grad_norm):
        frozen = x.copy()
        frozen.flags.writeable = False
        history.records.append(
            IterationRecord(iteration, frozen, fx, aux, step_norm, grad_norm)
        )

    n = x.shape[0]
    H = np.eye(n)
    g = None
    termination = "evaluation budget"
    try:
        g = _gradient(f, x, fx, lo, hi, grad_rel_step)
        record(0, x, fx, aux, 0.0, float(np.linalg.norm(x - _project(x - g, lo, hi))))
        for iteration in range(1, 10_000):
            pg = float(np.linalg.norm(x - _project(x - g, lo, hi)))
            if pg <= grad_tol:
                termination = "gradient tolerance"
                break

            d = -H @ g
            if float(d @ g) >= 0.0:
                H = np.eye(n)
                d = -g

            t = 1.0
            accepted = False
            for _ in range(_MAX_BACKTRACKS):
                x_try = _project(x + t * d, lo, hi)
                step = x_try - x
                slope = float(g @ step)
                if slope >= 0.0 or not np.any(step):
                    t *= 0.5
                    continue
                f_try, aux_try = f(x_try)
                if math.isfinite(f_try) and f_try <= fx + _ARMIJO * slope:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                termination = "line search failed" if pg > grad_tol else "gradient tolerance"
                break

            g_new = _gradient(f, x_try, f_try, lo, hi, grad_rel_step)
            s = x_try - x
            y = g_new - g
            sy = float(s @ y)
            if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                rho = 1.0 / sy
                outer = np.outer
                I = np.eye(n)
                H = (I - rho * outer(s, y)) @ H @ (I - rho * outer(y, s)) + rho * outer(s, s)

            x, fx, aux, g = x_try, f_try, aux_try, g_new
            if fx < best_f:
                best_x, best_f, best_aux = x.copy(), fx, aux
            step_norm = float(np.linalg.norm(s))
            record(
                iteration, x, fx, aux, step_norm,
                float(np.linalg.norm(x - _project(x - g, lo, hi))),
            )
            if step_norm <= step_tol * max(1.0, float(np.linalg.norm(x))):
                termination = "step tolerance"
                break
    except _BudgetExhausted:
        termination = "evaluation budget"

    history.termination = termination
    history.evaluations = f.calls
    if not history.records:
        record(0, best_x, best_f, best_aux, 0.0, math.nan)
    return MinimizeResult(
        x=best_x,
        value=best_f,
        components=best_aux,
        history=history,
        evaluations=f.calls,
        termination=termination,
    )


@dataclass(frozen=True)
class GridSurface:
    """Objective values over a dense 2-D design grid."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    names: tuple = ("x", "y")

    @property
    def argmin_index(self):
        if np.all(np.isnan(self.values)):
            raise OptimizationError("every grid point failed to evaluate")
        flat = np.nanargmin(self.values)
        return np.unravel_index(flat, self.values.shape)

    @property
    def argmin_point(self):
        i, j = self.argmin_index
        return float(self.x[i]), float(self.y[j])

    @property
    def minimum(self):
        i, j = self.argmin_index
        return float(self.values[i, j])

    def save(self, path):
        """Three-column rows, row-major, blocks split per x for contouring."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# columns: {self.names[0]} {self.names[1]} value\n")
            for i, xv in enumerate(self.x):
                for j, yv in enumerate(self.y):
                    fh.write(f"{float(xv)!r} {float(yv)!r} {float(self.values[i, j])!r}\n")
                fh.write("\n")


def grid_surface(objective, ranges, resolution=21, names=("x", "y")):
    """Evaluate the objective over a Cartesian 2-D grid.

    A non-finite value or a package error at a grid point is recorded
    as missing (NaN) rather than aborting the sweep.
    """
    if len(ranges) != 2:
        raise ConfigError("grid surfaces are two-dimensional")
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    nx, ny = int(resolution[0]), int(resolution[1])
    if nx < 2 or ny < 2:
        raise ConfigError("grid resolution must be at least 2 per axis")
    (x_lo, x_hi), (y_lo, y_hi) = ranges
    if not (x_lo < x_hi and y_lo < y_hi):
        raise ConfigError(f"invalid grid ranges {ranges!r}")
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)
    values = np.empty((nx, ny))
    for i in range(nx):
        for j in range(ny):
            try:
                out = objective(np.array([xs[i], ys[j]]))
            except SuspoptError:
                values[i, j] = math.nan
                continue
            value = out[0] if isinstance(out, tuple) else out
            values[i, j] = value if math.isfinite(value) else math.nan
    return GridSurface(x=xs, y=ys, values=values, names=tuple(names))
