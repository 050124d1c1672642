"""Fixed-step time-domain simulation of the vehicle models.

The integrator is classical RK4.  Road inputs are sampled once onto the
half-step grid (t_i and t_i + dt/2) before the run, so the compiled
kernel never interpolates.  All acceleration output channels are the
derivative evaluations at the stored samples, not finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import math

import numpy as np

from . import _kernels
from .errors import ConfigError, DivergenceError
from .road import RoadProfile
from .vehicle import GRAVITY, HalfCarParams, QuarterCarParams

QUARTER_STATES = ("body_disp", "body_vel", "axle_disp", "axle_vel")
HALF_STATES = (
    "bounce_disp",
    "bounce_vel",
    "axle_disp",
    "axle_vel",
    "roll_angle",
    "roll_rate",
    "axle_roll_angle",
    "axle_roll_rate",
)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Simulation output on a uniform time grid.

    tire_forces holds the dynamic tire force per wheel as one column
    per wheel: upward-positive for the quarter car, tension-positive
    for the half car (positive when the corner rises above the road).
    static_loads is the per-wheel static contact force in newtons.
    """

    kind: str
    t: np.ndarray
    states: np.ndarray
    body_accel: np.ndarray
    axle_accel: np.ndarray
    roll_accel: np.ndarray | None
    tire_forces: np.ndarray
    static_loads: tuple
    dt: float
    trimmed: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("t", "states", "body_accel", "axle_accel", "roll_accel", "tire_forces"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def samples(self):
        return self.t.shape[0]

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    @property
    def state_names(self):
        return QUARTER_STATES if self.kind == "quarter" else HALF_STATES

    def state(self, name):
        """One state column by name."""
        try:
            return self.states[:, self.state_names.index(name)]
        except ValueError:
            raise KeyError(f"unknown state {name!r} for a {self.kind} car model") from None

    def contact_forces(self):
        """Total upward tire contact force per wheel, shape (samples, wheels)."""
        loads = np.asarray(self.static_loads)
        if self.kind == "quarter":
            return loads[None, :] + self.tire_forces
        return loads[None, :] - self.tire_forces

    @property
    def liftoff(self):
        """True when any wheel's total contact force goes negative."""
        return bool(self.contact_forces().min() < 0.0)

    def column_names(self):
        names = ("t",) + self.state_names + ("body_accel", "axle_accel")
        if self.kind == "quarter":
            return names + ("tire_force",)
        return names + ("roll_accel", "tire_force_left", "tire_force_right")

    def as_table(self):
        cols = [self.t] + [self.states[:, j] for j in range(self.states.shape[1])]
        cols += [self.body_accel, self.axle_accel]
        if self.kind == "half":
            cols.append(self.roll_accel)
        cols += [self.tire_forces[:, j] for j in range(self.tire_forces.shape[1])]
        return np.column_stack(cols)

    def save_csv(self, path):
        table = self.as_table()
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(self.column_names()) + "\n")
            for row in table:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _half_grid(road, n, dt):
    """Sample elevations and surface velocities at t_i and t_i + dt/2."""
    t_half = np.arange(2 * n + 1) * (0.5 * dt)
    t_road = road.time
    vel = road.velocity()
    z = np.empty((road.tracks, 2 * n + 1))
    v = np.empty_like(z)
    for k in range(road.tracks):
        z[k] = np.interp(t_half, t_road, road.elevation[k])
        v[k] = np.interp(t_half, t_road, vel[k])
    return z, v


def integrate(params, road, dt=1e-3, duration=None, initial_state=None, meta=None):
    """Run the fixed-step simulation and return a Trajectory.

    duration defaults to the full road record.  The road must cover the
    requested duration; it is linearly resampled if its own grid spacing
    differs from dt.
    """
    if not isinstance(road, RoadProfile):
        raise ConfigError(f"road must be a RoadProfile, got {type(road).__name__}")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ConfigError(f"time step must be positive, got {dt!r}")
    if duration is None:
        duration = road.duration
    if not (math.isfinite(duration) and duration > 0.0):
        raise ConfigError(f"duration must be positive, got {duration!r}")
    n = int(round(duration / dt))
    if n < 1:
        raise ConfigError(f"duration {duration!r} is shorter than one step of {dt!r}")
    if n * dt > road.duration * (1.0 + 1e-12) + 1e-12:
        raise ConfigError(
            f"road record of {road.duration!r} s cannot cover {n * dt!r} s of simulation"
        )

    if isinstance(params, QuarterCarParams):
        kind, n_states = "quarter", 4
        if road.tracks != 1:
            raise ConfigError("quarter car needs a single-track road")
    elif isinstance(params, HalfCarParams):
        kind, n_states = "half", 8
        if road.tracks != 2:
            raise ConfigError("half car needs a two-track road")
    else:
        raise ConfigError(f"unsupported vehicle parameters: {type(params).__name__}")

    if initial_state is None:
        y0 = np.zeros(n_states)
    else:
        y0 = np.ascontiguousarray(initial_state, dtype=float)
        if y0.shape != (n_states,):
            raise ConfigError(
                f"initial state must have shape ({n_states},), got {y0.shape}"
            )
        if not np.all(np.isfinite(y0)):
            raise ConfigError("initial state must be finite")

    z, v = _half_grid(road, n, dt)
    t = np.arange(n + 1) * dt

    if kind == "quarter":
        spring = _kernels.lower_spring(params.spring, params.spring_offset)
        damper = _kernels.lower_damper(params.damper)
        states, a_s, a_u, f_t, bad = _kernels.rk4_quarter(
            y0, n, dt, z[0], v[0],
            params.m_s, params.m_u, params.k_u, params.b_u,
            *spring, *damper,
        )
        if bad >= 0:
            raise DivergenceError(
                f"simulation diverged at t = {bad * dt:.6g} s", time=bad * dt
            )
        return Trajectory(
            kind="quarter",
            t=t,
            states=states,
            body_accel=a_s,
            axle_accel=a_u,
            roll_accel=None,
            tire_forces=f_t[:, None],
            static_loads=((params.m_s + params.m_u) * GRAVITY,),
            dt=dt,
            meta=dict(meta or {}),
        )

    s_left = _kernels.lower_spring(params.spring_left, params.spring_offset_left)
    s_right = _kernels.lower_spring(params.spring_right, params.spring_offset_right)
    d_left = _kernels.lower_damper(params.damper_left)
    d_right = _kernels.lower_damper(params.damper_right)
    states, a_s, a_u, al_s, f_l, f_r, bad = _kernels.rk4_half(
        y0, n, dt, z[0], z[1],
        params.m_s, params.m_u, params.I_xx, params.I_uxx,
        0.5 * params.track, params.k_u_left, params.k_u_right,
        *s_left, *s_right, *d_left, *d_right,
    )
    if bad >= 0:
        raise DivergenceError(
            f"simulation diverged at t = {bad * dt:.6g} s", time=bad * dt
        )
    corner_load = 0.5 * (params.m_s + params.m_u) * GRAVITY
    return Trajectory(
        kind="half",
        t=t,
        states=states,
        body_accel=a_s,
        axle_accel=a_u,
        roll_accel=al_s,
        tire_forces=np.column_stack([f_l, f_r]),
        static_loads=(corner_load, corner_load),
        dt=dt,
        meta=dict(meta or {}),
    )


def trim_transient(traj, t_skip):
    """Drop the first t_skip seconds and mark the result as trimmed."""
    if not (math.isfinite(t_skip) and t_skip >= 0.0):
        raise ConfigError(f"t_skip must be a nonnegative time, got {t_skip!r}")
    if t_skip > traj.duration + 1e-12:
        raise ConfigError(
            f"t_skip of {t_skip!r} s exceeds the {traj.duration!r} s record"
        )
    start = traj.t[0] + t_skip
    i0 = int(np.searchsorted(traj.t, start - 1e-9 * traj.dt))
    return replace(
        traj,
        t=traj.t[i0:],
        states=traj.states[i0:],
        body_accel=traj.body_accel[i0:],
        axle_accel=traj.axle_accel[i0:],
        roll_accel=None if traj.roll_accel is None else traj.roll_accel[i0:],
        tire_forces=traj.tire_forces[i0:],
        trimmed=True,
        meta={**traj.meta, "t_skip": float(t_skip)},
    )
