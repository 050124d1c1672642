"""Quarter-car and half-car vertical dynamics.

Coordinates are measured from the static equilibrium, so gravity does
not appear in the equations of motion.  For nonlinear springs the
static operating deflection still matters: the dynamic spring force is
evaluated as ``S(x_op + c) - S(x_op)`` where c is the dynamic
compression, so the local stiffness reflects the loaded operating
point.  ``static_equilibrium`` solves for x_op; ``settle`` stores it on
a parameter set.

Sign conventions
----------------
* displacements positive upward,
* suspension deflection input: compression positive (spring curves),
* suspension velocity input: extension (rebound) positive (dampers),
* quarter-car tire force: upward force on the wheel,
  ``k_u (z_r - z_u) + b_u (v_r - v_u)``,
* half-car tire forces: tension-positive corner values
  ``k_uL (z_u + phi_u L/2 - z_RL)`` (left, mirrored on the right).

State vectors: quarter ``[z_s, v_s, z_u, v_u]``; half
``[z_s, v_s, z_u, v_u, phi_s, w_s, phi_u, w_u]`` with phi the roll
angles (positive lifts the left corner) and w the roll rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .characteristics import (
    DamperCurve,
    LinearLaw,
    ScaledCharacteristic,
    SpringTable,
    damper_force,
    spring_force,
)
from .errors import ConfigError, EquilibriumError

__all__ = [
    "GRAVITY",
    "QuarterCarParams",
    "HalfCarParams",
    "quarter_derivatives",
    "half_derivatives",
    "tire_force",
    "static_equilibrium",
    "settle",
]

GRAVITY = 9.81  # m/s^2


def _positive(name, value):
    if not (math.isfinite(value) and value > 0.0):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")


def _non_negative(name, value):
    if not (math.isfinite(value) and value >= 0.0):
        raise ConfigError(f"{name} must be non-negative and finite, got {value!r}")


def _check_spring(name, curve):
    base = curve.base if isinstance(curve, ScaledCharacteristic) else curve
    if not isinstance(base, (LinearLaw, SpringTable)):
        raise ConfigError(f"{name} must be a linear law or a lookup table")


def _check_damper(name, curve):
    base = curve.base if isinstance(curve, ScaledCharacteristic) else curve
    if not isinstance(base, (LinearLaw, DamperCurve)):
        raise ConfigError(f"{name} must be a linear law or an exponential curve")


@dataclass(frozen=True)
class QuarterCarParams:
    """One corner: sprung mass on a suspension over a damped tire spring."""

    m_s: float
    m_u: float
    spring: object
    damper: object
    k_u: float
    b_u: float = 0.0
    spring_offset: float = 0.0  # static operating compression, m

    def __post_init__(self):
        _positive("m_s", self.m_s)
        _positive("m_u", self.m_u)
        _positive("k_u", self.k_u)
        _non_negative("b_u", self.b_u)
        _check_spring("spring", self.spring)
        _check_damper("damper", self.damper)
        if not math.isfinite(self.spring_offset):
            raise ConfigError("spring_offset must be finite")


@dataclass(frozen=True)
class HalfCarParams:
    """Bounce and roll of a rigid axle under a rolling sprung mass.

    Tires are pure springs here; per-wheel tire damping is a quarter-car
    refinement only.
    """

    m_s: float
    m_u: float
    I_xx: float
    I_uxx: float
    track: float
    spring_left: object
    spring_right: object
    damper_left: object
    damper_right: object
    k_u_left: float
    k_u_right: float
    spring_offset_left: float = 0.0
    spring_offset_right: float = 0.0

    def __post_init__(self):
        for name in ("m_s", "m_u", "I_xx", "I_uxx", "track", "k_u_left", "k_u_right"):
            _positive(name, getattr(self, name))
        _check_spring("spring_left", self.spring_left)
        _check_spring("spring_right", self.spring_right)
        _check_damper("damper_left", self.damper_left)
        _check_damper("damper_right", self.damper_right)
        for name in ("spring_offset_left", "spring_offset_right"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @classmethod
    def symmetric(cls, m_s, m_u, I_xx, I_uxx, track, spring, damper, k_u):
        """Identical left and right suspensions and tires."""
        return cls(
            m_s=m_s,
            m_u=m_u,
            I_xx=I_xx,
            I_uxx=I_uxx,
            track=track,
            spring_left=spring,
            spring_right=spring,
            damper_left=damper,
            damper_right=damper,
            k_u_left=k_u,
            k_u_right=k_u,
        )


def _spring_dynamic(curve, offset, compression):
    """Dynamic spring force about the static operating point."""
    if offset == 0.0:
        return spring_force(curve, compression)
    return spring_force(curve, offset + compression) - spring_force(curve, offset)


def quarter_derivatives(params, state, road_z, road_v):
    """Time derivative of the quarter-car state.

    road_z, road_v: road elevation and vertical velocity under the tire.
    """
    z_s, v_s, z_u, v_u = state
    c = z_u - z_s  # dynamic suspension compression
    v = v_s - v_u  # suspension extension velocity
    # upward suspension force on the body; its reaction loads the wheel
    p = _spring_dynamic(params.spring, params.spring_offset, c) - damper_force(
        params.damper, v
    )
    f_tire = params.k_u * (road_z - z_u) + params.b_u * (road_v - v_u)
    a_s = p / params.m_s
    a_u = (f_tire - p) / params.m_u
    return np.array([v_s, a_s, v_u, a_u])


def half_derivatives(params, state, road_z, road_v=None):
    """Time derivative of the half-car state.

    road_z: pair (left, right) elevations; road_v is accepted for
    interface symmetry but unused because the tires carry no dampers.
    """
    z_s, v_s, z_u, v_u, phi_s, w_s, phi_u, w_u = state
    z_left, z_right = road_z
    h = 0.5 * params.track
    c_left = (z_u + phi_u * h) - (z_s + phi_s * h)
    c_right = (z_u - phi_u * h) - (z_s - phi_s * h)
    v_left = (v_s + w_s * h) - (v_u + w_u * h)
    v_right = (v_s - w_s * h) - (v_u - w_u * h)
    # upward forces on the body at each corner
    p_left = _spring_dynamic(params.spring_left, params.spring_offset_left, c_left) - damper_force(
        params.damper_left, v_left
    )
    p_right = _spring_dynamic(
        params.spring_right, params.spring_offset_right, c_right
    ) - damper_force(params.damper_right, v_right)
    # upward tire forces on the axle corners
    t_left = params.k_u_left * (z_left - (z_u + phi_u * h))
    t_right = params.k_u_right * (z_right - (z_u - phi_u * h))
    a_s = (p_left + p_right) / params.m_s
    alpha_s = (p_left - p_right) * h / params.I_xx
    a_u = ((t_left - p_left) + (t_right - p_right)) / params.m_u
    alpha_u = ((t_left - p_left) - (t_right - p_right)) * h / params.I_uxx
    return np.array([v_s, a_s, v_u, a_u, w_s, alpha_s, w_u, alpha_u])


def tire_force(params, state, road_z, road_v=None):
    """Dynamic tire force(s) about the static load.

    Quarter car: scalar upward force on the wheel.  Half car: pair of
    tension-positive corner forces (left, right), positive when the
    axle corner rises above the road.
    """
    if isinstance(params, QuarterCarParams):
        _, _, z_u, v_u = state
        if road_v is None:
            road_v = 0.0
        return params.k_u * (road_z - z_u) + params.b_u * (road_v - v_u)
    z_left, z_right = road_z
    z_u, phi_u = state[2], state[6]
    h = 0.5 * params.track
    f_left = params.k_u_left * ((z_u + phi_u * h) - z_left)
    f_right = params.k_u_right * ((z_u - phi_u * h) - z_right)
    return f_left, f_right


def static_equilibrium(spring, supported_weight, limits=(-2.0, 2.0)):
    """Operating compression where the spring carries the given weight.

    Inverts the piecewise-linear table segment (or the linear law)
    exactly; the end-segment slopes extend the search beyond the
    tabulated range up to the given deflection limits.
    """
    if not (math.isfinite(supported_weight) and supported_weight > 0.0):
        raise ConfigError(f"supported weight must be positive, got {supported_weight!r}")
    lo, hi = limits
    if not (lo < hi):
        raise ConfigError(f"invalid deflection limits {limits!r}")
    base = spring.base if isinstance(spring, ScaledCharacteristic) else spring
    scale = spring.scale if isinstance(spring, ScaledCharacteristic) else 1.0
    _check_spring("spring", spring)
    target = supported_weight / scale

    if isinstance(base, LinearLaw):
        x = target / base.coefficient
    else:
        xs, fs = base.deflection, base.force
        lo_slope = (fs[1] - fs[0]) / (xs[1] - xs[0])
        hi_slope = (fs[-1] - fs[-2]) / (xs[-1] - xs[-2])
        if target < fs[0]:
            if lo_slope <= 0.0:
                raise EquilibriumError(
                    f"spring cannot produce {supported_weight!r} N below the table"
                )
            x = xs[0] + (target - fs[0]) / lo_slope
        elif target > fs[-1]:
            if hi_slope <= 0.0:
                raise EquilibriumError(
                    f"spring cannot produce {supported_weight!r} N above the table"
                )
            x = xs[-1] + (target - fs[-1]) / hi_slope
        else:
            j = int(np.searchsorted(fs, target, side="left"))
            j = max(j, 1)
            if fs[j] == fs[j - 1]:  # flat run: take its left edge
                x = xs[j - 1]
            else:
                x = xs[j - 1] + (target - fs[j - 1]) * (xs[j] - xs[j - 1]) / (
                    fs[j] - fs[j - 1]
                )
    if not (lo <= x <= hi):
        raise EquilibriumError(
            f"equilibrium deflection {x:.6g} m is outside the limits {limits!r}"
        )
    achieved = spring_force(spring, x)
    if abs(achieved - supported_weight) > 1e-9 * supported_weight:
        raise EquilibriumError(
            f"no deflection matches {supported_weight!r} N within tolerance"
        )
    return float(x)


def settle(params, limits=(-2.0, 2.0)):
    """Return a copy of the parameters with static offsets solved.

    The suspension springs carry the sprung weight: m_s * g for the
    quarter car, half of it per corner for the (left/right symmetric)
    half car.
    """
    if isinstance(params, QuarterCarParams):
        x = static_equilibrium(params.spring, params.m_s * GRAVITY, limits)
        return replace(params, spring_offset=x)
    weight = 0.5 * params.m_s * GRAVITY
    x_left = static_equilibrium(params.spring_left, weight, limits)
    x_right = static_equilibrium(params.spring_right, weight, limits)
    return replace(params, spring_offset_left=x_left, spring_offset_right=x_right)
