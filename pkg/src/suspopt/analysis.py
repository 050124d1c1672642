"""Frequency-response estimation from chirp simulations.

The magnitude curve is an H1 estimate: the cross-spectrum of the response
with the road input divided by the input auto-spectrum, averaged over
Hann-windowed segments.  For a linear vehicle this converges to the
transfer-function magnitude; for a nonlinear vehicle it is the describing
response at the specific chirp amplitude and is labeled as such.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .characteristics import LinearLaw, ScaledCharacteristic
from .errors import ConfigError
from .road import RoadProfile, chirp_profile
from .simulate import integrate, trim_transient
from .vehicle import HalfCarParams, QuarterCarParams

#: Response channels numeric_bode can estimate.  ``road_disp`` is the
#: identity channel (input against itself), useful as a self-check.
OUTPUT_CHANNELS = ("body_disp", "axle_disp", "road_disp")


def _is_linear(curve):
    if isinstance(curve, ScaledCharacteristic):
        curve = curve.base
    return isinstance(curve, LinearLaw)


def _model_is_linear(params):
    if isinstance(params, QuarterCarParams):
        laws = (params.spring, params.damper)
    else:
        laws = (
            params.spring_left,
            params.spring_right,
            params.damper_left,
            params.damper_right,
        )
    return all(_is_linear(law) for law in laws)


@dataclass(frozen=True)
class BodeResult:
    """Estimated magnitude ratio on a frequency grid.

    ``magnitude`` holds NaN for bins where the input carried no power.
    ``response_kind`` is ``"transfer function"`` for a linear model and
    ``"describing response"`` for a nonlinear one (amplitude-specific).
    """

    frequency: np.ndarray
    magnitude: np.ndarray
    output: str
    response_kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.frequency, dtype=float)
        m = np.asarray(self.magnitude, dtype=float)
        if f.ndim != 1 or f.shape != m.shape or f.size == 0:
            raise ConfigError("frequency and magnitude must be matching 1-D arrays")
        f.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "frequency", f)
        object.__setattr__(self, "magnitude", m)

    def peak(self):
        """(frequency, magnitude) of the largest bin, refined by fitting a
        parabola through the bin and its finite neighbors."""
        m = self.magnitude
        if not np.isfinite(m).any():
            raise ConfigError("no finite magnitude bins to locate a peak in")
        i = int(np.nanargmax(m))
        f = self.frequency
        if 0 < i < m.size - 1 and np.isfinite(m[i - 1]) and np.isfinite(m[i + 1]):
            denom = m[i - 1] - 2.0 * m[i] + m[i + 1]
            if denom < 0.0:
                shift = 0.5 * (m[i - 1] - m[i + 1]) / denom
                df = f[i + 1] - f[i]
                return (
                    float(f[i] + shift * df),
                    float(m[i] - 0.25 * (m[i - 1] - m[i + 1]) * shift),
                )
        return float(f[i]), float(m[i])

    def save(self, path):
        """Two-column (frequency, magnitude) plain-text export."""
        with open(path, "w") as fh:
            fh.write("# frequency [Hz]  magnitude ratio\n")
            fh.write(f"# output: {self.output}  input: road displacement\n")
            fh.write(f"# response: {self.response_kind}\n")
            fh.write(f"# meta: {json.dumps(self.meta, sort_keys=True)}\n")
            for fi, mi in zip(self.frequency, self.magnitude):
                fh.write(f"{float(fi)!r} {float(mi)!r}\n")


def h1_magnitude(x, y, dt, segment_seconds=8.0, overlap=0.5):
    """H1 magnitude estimate |S_xy| / S_xx on Welch's frequency grid.

    Returns (frequencies, magnitudes); bins with zero input power are NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ConfigError("input and output must be matching 1-D signals")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ConfigError(f"dt must be positive, got {dt!r}")
    if not (math.isfinite(segment_seconds) and segment_seconds > 0.0):
        raise ConfigError(f"segment length must be positive, got {segment_seconds!r}")
    if not (0.0 <= overlap < 1.0):
        raise ConfigError(f"overlap must lie in [0, 1), got {overlap!r}")
    nperseg = int(round(segment_seconds / dt))
    if nperseg < 8:
        raise ConfigError("segment too short for a meaningful spectrum")
    if nperseg > x.size:
        raise ConfigError(
            f"segment of {nperseg} samples exceeds the {x.size}-sample signal"
        )
    noverlap = int(round(overlap * nperseg))
    kwargs = dict(
        fs=1.0 / dt,
        window="hann",
        nperseg=nperseg,
        noverlap=noverlap,
        detrend="constant",
    )
    freqs, pxx = signal.welch(x, **kwargs)
    _, pxy = signal.csd(x, y, **kwargs)
    magnitude = np.full(freqs.size, math.nan)
    powered = pxx > 0.0
    magnitude[powered] = np.abs(pxy[powered]) / pxx[powered]
    return freqs, magnitude


def numeric_bode(
    params,
    f0=0.1,
    f1=20.0,
    amplitude=0.01,
    duration=120.0,
    dt=1e-3,
    t_skip=4.0,
    output="body_disp",
    segment_seconds=8.0,
    overlap=0.5,
):
    """Estimate the road-to-response magnitude over [f0, f1] from a chirp run.

    A half-car model is driven with the same chirp on both tracks.  The
    transient before ``t_skip`` is discarded before spectral estimation.
    """
    if not isinstance(params, (QuarterCarParams, HalfCarParams)):
        raise ConfigError(
            f"expected vehicle parameters, got {type(params).__name__}"
        )
    if output not in OUTPUT_CHANNELS:
        raise ConfigError(
            f"unknown output channel {output!r}; expected one of {OUTPUT_CHANNELS}"
        )
    for name, value in (("f0", f0), ("f1", f1), ("amplitude", amplitude)):
        if not (math.isfinite(value) and value > 0.0):
            raise ConfigError(f"{name} must be positive, got {value!r}")
    if f1 <= f0:
        raise ConfigError(f"need f0 < f1, got [{f0!r}, {f1!r}]")
    if not (math.isfinite(t_skip) and 0.0 <= t_skip < duration):
        raise ConfigError(f"t_skip must lie within the run, got {t_skip!r}")

    road = chirp_profile(f0, f1, amplitude, duration, dt)
    if isinstance(params, HalfCarParams):
        road = RoadProfile(
            dt=road.dt,
            elevation=np.vstack([road.elevation[0], road.elevation[0]]),
            meta=road.meta,
        )
    traj = trim_transient(integrate(params, road, dt=dt), t_skip)
    x = np.interp(traj.t, road.time, road.elevation[0])
    if output == "road_disp":
        y = x
    else:
        # the half car names its vertical body coordinate "bounce_disp"
        channel = output
        if traj.kind == "half" and output == "body_disp":
            channel = "bounce_disp"
        y = traj.state(channel)

    freqs, magnitude = h1_magnitude(
        x, y, dt, segment_seconds=segment_seconds, overlap=overlap
    )
    band = (freqs >= f0 - 1e-9) & (freqs <= f1 + 1e-9)
    if not band.any():
        raise ConfigError("no spectral bins fall inside the chirp band")

    linear = _model_is_linear(params)
    meta = {
        "f0": float(f0),
        "f1": float(f1),
        "amplitude": float(amplitude),
        "duration": float(duration),
        "dt": float(dt),
        "t_skip": float(t_skip),
        "segment_seconds": float(segment_seconds),
        "overlap": float(overlap),
        "model": "quarter" if isinstance(params, QuarterCarParams) else "half",
        "input": "road_disp",
    }
    return BodeResult(
        frequency=freqs[band],
        magnitude=magnitude[band],
        output=output,
        response_kind="transfer function" if linear else "describing response",
        meta=meta,
    )