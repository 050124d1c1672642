"""Metric components and composed objectives for the six cases.

Case ids: quarter-1 (comfort + tire-acceleration tracking), quarter-2
and quarter-3 (comfort + tire-force range), half-1 and half-2 (comfort
+ tire-force range + roll, with the roll weight fixed to 0 for half-1),
half-3 (comfort loss + handling loss + roll against a baseline design).

The metric components carry different units, so each one is divided by
a configurable normalization constant before weighting; the convention
is to normalize by the component values of the initial design, making
the weights dimensionless and O(1).  Raw components are always reported
alongside the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .weighting import WeightingCurve, vertical_weighting, weighted_rms

CASES = ("quarter-1", "quarter-2", "quarter-3", "half-1", "half-2", "half-3")

# component names per case, in (w1, w2, w3) order
CASE_COMPONENTS = {
    "quarter-1": ("Z_s_w", "I2_penalty"),
    "quarter-2": ("Z_s_w", "dF_tire"),
    "quarter-3": ("Z_s_w", "dF_tire"),
    "half-1": ("Z_s_w", "dF_tire", "Phi_s"),
    "half-2": ("Z_s_w", "dF_tire", "Phi_s"),
    "half-3": ("C_lost", "H_lost", "Phi_s"),
}

COMPONENT_NAMES = ("Z_s_w", "dF_tire", "Phi_s", "I2_penalty", "C_lost", "H_lost")


@dataclass(frozen=True)
class MetricSet:
    """Raw metric values; fields a case does not produce stay None.

    Z_s_w: weighted body-acceleration RMS (m/s^2); dF_tire: tire-force
    range (N, summed over wheels); Phi_s: roll-angle RMS (rad);
    I2_penalty: RMS deviation from the desired axle acceleration
    (m/s^2); C_lost / H_lost: comfort / handling excess over 110% of a
    baseline (may be negative when better than the allowance).
    """

    Z_s_w: float | None = None
    dF_tire: float | None = None
    Phi_s: float | None = None
    I2_penalty: float | None = None
    C_lost: float | None = None
    H_lost: float | None = None

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


def rms(signal):
    x = np.asarray(signal, dtype=float)
    if x.size == 0:
        raise ConfigError("cannot take the RMS of an empty signal")
    return float(np.sqrt(np.mean(np.square(x))))


def tire_force_range(history):
    """max - min of the tire-force history; per wheel, then summed."""
    x = np.asarray(history, dtype=float)
    if x.size == 0:
        raise ConfigError("cannot take the range of an empty history")
    if x.ndim == 1:
        x = x[:, None]
    return float(np.sum(x.max(axis=0) - x.min(axis=0)))


def tire_accel_penalty(current, desired):
    """RMS of the pointwise difference from the desired axle response."""
    a = np.asarray(current, dtype=float)
    b = np.asarray(desired, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(
            f"acceleration histories differ in shape: {a.shape} vs {b.shape}"
        )
    return rms(a - b)


def comfort_loss(current, baseline):
    """Excess of the weighted acceleration over 110% of the baseline."""
    if not (math.isfinite(baseline) and baseline > 0.0):
        raise ConfigError(f"comfort baseline must be positive, got {baseline!r}")
    return current - 1.1 * baseline


def handling_loss(current, baseline):
    """Excess of the tire-force range over 110% of the baseline."""
    if not (math.isfinite(baseline) and baseline > 0.0):
        raise ConfigError(f"handling baseline must be positive, got {baseline!r}")
    return current - 1.1 * baseline


@dataclass(frozen=True)
class ObjectiveSpec:
    """One case's weights, weighting curve, baseline and normalization.

    baseline: quarter-1 takes the desired axle-acceleration history
    (array on the trimmed trajectory's grid); half-3 takes a mapping
    with positive 'Z_s_w' and 'dF_tire' entries from the reference
    design.  normalization maps component names to positive divisors.
    """

    case: str
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 0.0
    weighting: WeightingCurve = field(default_factory=vertical_weighting)
    baseline: object = None
    normalization: dict | None = None

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        for name in ("w1", "w2", "w3"):
            w = getattr(self, name)
            if not (math.isfinite(w) and w >= 0.0):
                raise ConfigError(f"{name} must be finite and nonnegative, got {w!r}")
        if self.case == "half-1" and self.w3 != 0.0:
            raise ConfigError("half-1 fixes the roll weight w3 at 0")
        if self.case == "quarter-1":
            if self.baseline is None:
                raise ConfigError("quarter-1 needs a desired axle-acceleration history")
            hist = np.asarray(self.baseline, dtype=float)
            if hist.ndim != 1 or hist.size == 0 or not np.all(np.isfinite(hist)):
                raise ConfigError("the desired history must be a finite 1-D signal")
            object.__setattr__(self, "baseline", hist)
        elif self.case == "half-3":
            if self.baseline is None:
                raise ConfigError("half-3 needs baseline 'Z_s_w' and 'dF_tire' values")
            try:
                ref = {k: float(self.baseline[k]) for k in ("Z_s_w", "dF_tire")}
            except (KeyError, TypeError) as exc:
                raise ConfigError(
                    "half-3 baseline must map 'Z_s_w' and 'dF_tire' to numbers"
                ) from exc
            for key, val in ref.items():
                if not (math.isfinite(val) and val > 0.0):
                    raise ConfigError(f"baseline {key} must be positive, got {val!r}")
            object.__setattr__(self, "baseline", ref)
        if self.normalization is not None:
            for key, val in self.normalization.items():
                if key not in COMPONENT_NAMES:
                    raise ConfigError(f"unknown normalization component {key!r}")
                if not (math.isfinite(val) and val > 0.0):
                    raise ConfigError(
                        f"normalization for {key!r} must be positive, got {val!r}"
                    )

    @property
    def weights(self):
        names = CASE_COMPONENTS[self.case]
        return (self.w1, self.w2, self.w3)[: len(names)]

    def norm_for(self, component):
        if self.normalization is None:
            return 1.0
        return float(self.normalization.get(component, 1.0))


def evaluate_objective(spec, traj):
    """Total objective and raw metric set for one trimmed trajectory."""
    if not traj.trimmed:
        raise ConfigError("objectives are defined on trimmed trajectories only")
    wants_half = spec.case.startswith("half")
    if wants_half != (traj.kind == "half"):
        raise ConfigError(f"case {spec.case} needs a {'half' if wants_half else 'quarter'} car trajectory")

    values = {"Z_s_w": weighted_rms(traj.body_accel, traj.dt, spec.weighting)}
    if spec.case == "quarter-1":
        values["I2_penalty"] = tire_accel_penalty(traj.axle_accel, spec.baseline)
    else:
        values["dF_tire"] = tire_force_range(traj.tire_forces)
    if wants_half:
        values["Phi_s"] = rms(traj.state("roll_angle"))
    if spec.case == "half-3":
        values["C_lost"] = comfort_loss(values["Z_s_w"], spec.baseline["Z_s_w"])
        values["H_lost"] = handling_loss(values["dF_tire"], spec.baseline["dF_tire"])

    total = 0.0
    for weight, name in zip(spec.weights, CASE_COMPONENTS[spec.case]):
        total += weight * (values[name] / spec.norm_for(name))
    return total, MetricSet(**values)
