"""Optimizer tests against analytic oracles: quadratic minimum,
bound-active KKT point, Rosenbrock, budget accounting, history
monotonicity, determinism, and the grid sweep."""

import math

import numpy as np
import pytest

from suspopt.errors import ConfigError, DivergenceError, OptimizationError
from suspopt.optimizer import (
    DesignVector,
    GridSurface,
    grid_surface,
    minimize,
)


def dv(values, lower, upper, names=None):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    names = names or tuple(f"x{i}" for i in range(values.size))
    return DesignVector(names=names, values=values, lower=lower, upper=upper)


def test_scalar_quadratic():
    result = minimize(lambda x: (x[0] - 2.0) ** 2, dv([0.0], [0.0], [10.0]))
    assert abs(result.x[0] - 2.0) <= 1e-6
    assert result.termination in ("gradient tolerance", "step tolerance")


def test_bound_active_kkt():
    def f(x):
        return x[0] ** 2 + x[1] ** 2

    result = minimize(f, dv([2.5, 1.7], [1.0, -3.0], [3.0, 3.0]))
    assert np.allclose(result.x, [1.0, 0.0], atol=1e-6)
    # KKT at a lower bound: the gradient component must point inward
    assert 2.0 * result.x[0] >= 0.0
    assert result.history.records[-1].grad_norm <= 1e-6


def test_rosenbrock():
    def f(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    result = minimize(
        f, dv([-1.2, 1.0], [-5.0, -5.0], [10.0, 10.0]), max_evaluations=2000
    )
    assert np.allclose(result.x, [1.0, 1.0], atol=1e-4)


def test_history_is_monotone_and_starts_at_x0():
    def f(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    result = minimize(f, dv([-1.2, 1.0], [-5.0, -5.0], [10.0, 10.0]), max_evaluations=2000)
    values = result.history.values()
    assert np.all(np.diff(values) <= 0.0)
    assert result.history.records[0].iteration == 0
    assert np.array_equal(result.history.records[0].design, [-1.2, 1.0])
    assert result.value == values[-1]


def test_budget_is_a_hard_cap():
    calls = []

    def f(x):
        calls.append(x.copy())
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    result = minimize(f, dv([-1.2, 1.0], [-5.0, -5.0], [10.0, 10.0]), max_evaluations=7)
    assert len(calls) <= 7
    assert result.evaluations == len(calls)
    assert result.termination == "evaluation budget"
    assert math.isfinite(result.value)


def test_every_probe_stays_in_the_box():
    seen = []

    def f(x):
        seen.append(x.copy())
        return x[0] ** 2 + x[1] ** 2

    minimize(f, dv([2.5, 1.7], [1.0, -3.0], [3.0, 3.0]))
    pts = np.array(seen)
    assert np.all(pts[:, 0] >= 1.0) and np.all(pts[:, 0] <= 3.0)
    assert np.all(pts[:, 1] >= -3.0) and np.all(pts[:, 1] <= 3.0)


def test_nonfinite_start_is_an_error():
    with pytest.raises(OptimizationError):
        minimize(lambda x: math.nan, dv([1.0], [0.0], [2.0]))


def test_nonfinite_region_is_stepped_around():
    def f(x):
        if x[0] > 2.5:
            return math.inf
        return (x[0] - 2.0) ** 2

    result = minimize(f, dv([0.0], [0.0], [10.0]))
    assert abs(result.x[0] - 2.0) <= 1e-6


def test_deterministic_histories():
    def f(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    a = minimize(f, dv([-1.2, 1.0], [-5.0, -5.0], [10.0, 10.0]), max_evaluations=500)
    b = minimize(f, dv([-1.2, 1.0], [-5.0, -5.0], [10.0, 10.0]), max_evaluations=500)
    assert np.array_equal(a.history.designs(), b.history.designs())
    assert np.array_equal(a.history.values(), b.history.values())
    assert a.termination == b.termination


def test_aux_payload_rides_along():
    def f(x):
        value = (x[0] - 1.0) ** 2
        return value, {"tag": float(value)}

    result = minimize(f, dv([0.0], [-2.0], [2.0]))
    assert result.components == {"tag": pytest.approx(result.value)}
    assert result.history.records[-1].components is not None


def test_design_vector_validation():
    with pytest.raises(ConfigError):
        dv([0.5], [1.0], [3.0])  # value below lower bound
    with pytest.raises(ConfigError):
        dv([1.0], [2.0], [2.0])  # empty box
    with pytest.raises(ConfigError):
        dv([1.0], [np.inf * -1], [2.0])
    with pytest.raises(ConfigError):
        DesignVector(names=(), values=[], lower=[], upper=[])
    with pytest.raises(ConfigError):
        DesignVector.scales(("a",), lower=[0.0])
    scales = DesignVector.scales(("spring", "damper"))
    assert np.all(scales.values == 1.0)
    assert np.all(scales.lower == 0.2) and np.all(scales.upper == 5.0)


def test_history_csv_round_trip(tmp_path):
    def f(x):
        return float(np.sum(x**2)), {"sq": float(np.sum(x**2))}

    result = minimize(f, dv([1.5, -0.5], [-2.0, -2.0], [2.0, 2.0]))
    path = tmp_path / "history.csv"
    result.history.to_csv(path, names=("a", "b"))
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape[1] == 7  # iteration, a, b, total, sq, step, grad
    assert np.array_equal(rows[:, 1:3], result.history.designs())
    assert np.array_equal(rows[:, 3], result.history.values())


# --- grid sweep -------------------------------------------------------------


def test_constant_grid_argmin_tie_break():
    surface = grid_surface(lambda x: 5.0, [(0.0, 1.0), (0.0, 1.0)], resolution=4)
    assert surface.values.shape == (4, 4)
    assert surface.argmin_index == (0, 0)
    assert surface.minimum == 5.0


def test_quadratic_grid_argmin_nearest_node():
    def f(x):
        return (x[0] - 0.53) ** 2 + (x[1] + 0.28) ** 2

    surface = grid_surface(f, [(0.0, 1.0), (-1.0, 1.0)], resolution=(11, 21))
    assert surface.values.shape == (11, 21)
    assert surface.argmin_point == (0.5, pytest.approx(-0.3))


def test_grid_records_failures_as_missing():
    def f(x):
        if x[0] == 0.0 and x[1] == 0.0:
            raise DivergenceError("blew up", time=0.1)
        if x[0] == 1.0 and x[1] == 1.0:
            return math.inf
        return x[0] + x[1]

    surface = grid_surface(f, [(0.0, 1.0), (0.0, 1.0)], resolution=2)
    assert np.isnan(surface.values[0, 0])
    assert np.isnan(surface.values[1, 1])
    assert surface.argmin_point == (0.0, 1.0)


def test_grid_export_round_trip(tmp_path):
    surface = grid_surface(
        lambda x: x[0] * x[1], [(0.0, 2.0), (-1.0, 1.0)], resolution=3,
        names=("spring_scale", "damper_scale"),
    )
    path = tmp_path / "surface.txt"
    surface.save(path)
    rows = np.loadtxt(path)
    assert rows.shape == (9, 3)
    assert np.array_equal(rows[:, 2].reshape(3, 3), surface.values)


def test_grid_validation():
    with pytest.raises(ConfigError):
        grid_surface(lambda x: 0.0, [(0.0, 1.0)], resolution=3)
    with pytest.raises(ConfigError):
        grid_surface(lambda x: 0.0, [(0.0, 1.0), (0.0, 1.0)], resolution=1)
    with pytest.raises(ConfigError):
        grid_surface(lambda x: 0.0, [(1.0, 0.0), (0.0, 1.0)], resolution=3)
    with pytest.raises(OptimizationError):
        grid_surface(
            lambda x: math.nan, [(0.0, 1.0), (0.0, 1.0)], resolution=2
        ).argmin_index