"""Road excitation profiles.

A profile is a uniformly sampled elevation history with one track
(quarter car) or two tracks (half car, left and right wheel paths).

Random profiles follow the classic single-slope displacement PSD
``G_d(n) = G_d(n0) * (n / n0)**-2`` (n in cycle/m, n0 = 0.1 cycle/m),
realized by driving a first-order shaping filter with white Gaussian
noise and converting to time at the given vehicle speed.  The noise
comes from an explicit counter-based splitmix64 generator implemented
here, so a seed produces bit-identical roads on every platform and run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError

__all__ = [
    "RoadProfile",
    "chirp_profile",
    "random_profile",
    "dual_track_profile",
    "normal_samples",
    "REFERENCE_WAVENUMBER",
]

# reference spatial frequency for the roughness coefficient, cycle/m
REFERENCE_WAVENUMBER = 0.1

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
# documented offset used to derive the right-track seed from the left one
TRACK_SEED_OFFSET = 0x9E3779B9


def _splitmix64(seed, count):
    """Return `count` splitmix64 outputs for the given 64-bit seed.

    Counter-based: output i mixes ``seed + i * golden``, so the stream
    is random-access and fully vectorized.
    """
    if not isinstance(seed, (int, np.integer)):
        raise ConfigError(f"seed must be an integer, got {type(seed).__name__}")
    base = np.uint64(int(seed) & _MASK64)
    i = np.arange(1, count + 1, dtype=np.uint64)
    z = base + i * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform_samples(seed, count):
    """Uniform doubles in (0, 1], 53-bit resolution."""
    bits = _splitmix64(seed, count)
    return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def normal_samples(seed, count):
    """Standard normal draws via Box-Muller on splitmix64 uniforms."""
    pairs = (count + 1) // 2
    u = uniform_samples(seed, 2 * pairs)
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = (2.0 * np.pi) * u[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]


@dataclass(frozen=True)
class RoadProfile:
    """Sampled road elevation, one row per track."""

    dt: float
    elevation: np.ndarray  # shape (tracks, samples), tracks in (1, 2)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.elevation, dtype=float))
        if z.shape[0] not in (1, 2):
            raise ConfigError(f"a profile has one or two tracks, got {z.shape[0]}")
        if z.shape[1] < 2:
            raise ConfigError("a profile needs at least two samples")
        if not np.isfinite(z).all():
            raise ConfigError("elevation samples must be finite")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        z.flags.writeable = False
        object.__setattr__(self, "elevation", z)

    @property
    def tracks(self):
        return self.elevation.shape[0]

    @property
    def samples(self):
        return self.elevation.shape[1]

    @property
    def duration(self):
        return (self.samples - 1) * self.dt

    @property
    def time(self):
        return np.arange(self.samples) * self.dt

    def velocity(self):
        """Road vertical velocity by central finite differences.

        One-sided differences at the two ends.
        """
        z = self.elevation
        v = np.empty_like(z)
        v[:, 1:-1] = (z[:, 2:] - z[:, :-2]) / (2.0 * self.dt)
        v[:, 0] = (z[:, 1] - z[:, 0]) / self.dt
        v[:, -1] = (z[:, -1] - z[:, -2]) / self.dt
        return v

    def save(self, path):
        """Write time plus one elevation column per track; '#' comments."""
        with open(path, "w") as fh:
            fh.write("# road profile: time [s], elevation per track [m]\n")
            fh.write(f"# meta: {json.dumps(self.meta, sort_keys=True)}\n")
            fh.write(f"# dt: {float(self.dt)!r}\n")
            t = self.time
            for j in range(self.samples):
                cols = " ".join(repr(float(z)) for z in self.elevation[:, j])
                fh.write(f"{float(t[j])!r} {cols}\n")

    @classmethod
    def load(cls, path):
        meta = {}
        dt = None
        with open(path) as fh:
            for line in fh:
                if not line.startswith("#"):
                    break
                body = line[1:].strip()
                if body.startswith("meta:"):
                    meta = json.loads(body[len("meta:"):])
                elif body.startswith("dt:"):
                    dt = float(body[len("dt:"):])
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] not in (2, 3):
            raise ConfigError(f"{path}: expected 2 or 3 columns, got {data.shape[1]}")
        if dt is None:
            dt = float(data[1, 0] - data[0, 0])
        return cls(dt=dt, elevation=data[:, 1:].T.copy(), meta=meta)


def _check_window(duration, dt):
    if not (math.isfinite(duration) and duration > 0.0):
        raise ConfigError(f"duration must be positive, got {duration!r}")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ConfigError(f"dt must be positive, got {dt!r}")
    n = int(round(duration / dt))
    if n < 1:
        raise ConfigError("duration must cover at least one sample step")
    return n


def chirp_profile(f0, f1, amplitude, duration, dt):
    """Linear sine sweep from f0 to f1 Hz over the given duration.

    z(t) = amplitude * sin(2*pi*(f0*t + (f1 - f0)*t^2 / (2*duration)))
    """
    if not (math.isfinite(f0) and math.isfinite(f1) and 0.0 < f0 < f1):
        raise ConfigError(f"need 0 < f0 < f1, got f0={f0!r}, f1={f1!r}")
    if not (math.isfinite(amplitude) and amplitude > 0.0):
        raise ConfigError(f"amplitude must be positive, got {amplitude!r}")
    n = _check_window(duration, dt)
    t = np.arange(n + 1) * dt
    phase = 2.0 * np.pi * (f0 * t + (f1 - f0) * t * t / (2.0 * duration))
    z = amplitude * np.sin(phase)
    meta = {
        "kind": "chirp",
        "f0": f0,
        "f1": f1,
        "amplitude": amplitude,
        "duration": duration,
        "dt": dt,
    }
    return RoadProfile(dt=dt, elevation=z[np.newaxis, :], meta=meta)


def _shaped_noise(roughness, speed, dt, n, seed, cutoff_wavenumber):
    """One track of filtered noise with the target displacement PSD.

    The first-order filter dz/dt = -w_c z + c w(t) has one-sided PSD
    2 c^2 / ((2 pi f)^2 + w_c^2), which matches the target
    G_d(n0) * n0^2 * speed / f^2 above the cutoff when
    c = pi * n0 * sqrt(2 * G_d(n0) * speed).  The exact discretization
    of the filter is used and the first sample is drawn from the
    stationary distribution, so the profile has no startup transient.
    """
    wc = 2.0 * np.pi * cutoff_wavenumber * speed
    c = np.pi * REFERENCE_WAVENUMBER * math.sqrt(2.0 * roughness * speed)
    if c == 0.0:
        return np.zeros(n + 1)
    a = math.exp(-wc * dt)
    sigma_st = c / math.sqrt(2.0 * wc)
    sigma_d = sigma_st * math.sqrt(1.0 - a * a)
    eta = normal_samples(seed, n + 1)
    z0 = sigma_st * eta[0]
    tail, _ = lfilter([1.0], [1.0, -a], sigma_d * eta[1:], zi=np.array([a * z0]))
    return np.concatenate(([z0], tail))


def random_profile(roughness, speed, duration, dt, seed, cutoff_wavenumber=0.01):
    """Random road with displacement PSD G_d(n0) * (n/n0)^-2.

    roughness is the one-sided displacement PSD value G_d(n0) in
    m^3/cycle at n0 = 0.1 cycle/m; zero gives a flat road.  speed is
    the vehicle speed in m/s used to convert spatial to temporal
    frequency.  cutoff_wavenumber (cycle/m) bounds the profile below.
    """
    if not (math.isfinite(roughness) and roughness >= 0.0):
        raise ConfigError(f"roughness must be non-negative, got {roughness!r}")
    if not (math.isfinite(speed) and speed > 0.0):
        raise ConfigError(f"speed must be positive, got {speed!r}")
    if not (math.isfinite(cutoff_wavenumber) and cutoff_wavenumber > 0.0):
        raise ConfigError(f"cutoff_wavenumber must be positive, got {cutoff_wavenumber!r}")
    n = _check_window(duration, dt)
    z = _shaped_noise(roughness, speed, dt, n, seed, cutoff_wavenumber)
    meta = {
        "kind": "random",
        "roughness": roughness,
        "speed": speed,
        "duration": duration,
        "dt": dt,
        "seed": int(seed),
        "cutoff_wavenumber": cutoff_wavenumber,
    }
    return RoadProfile(dt=dt, elevation=z[np.newaxis, :], meta=meta)


def dual_track_profile(
    roughness,
    speed,
    duration,
    dt,
    seed,
    mode="identical",
    right_seed=None,
    cutoff_wavenumber=0.01,
):
    """Two-track random road for the half car.

    mode 'identical' repeats the same elevation on both tracks; mode
    'independent' draws the right track from its own seed (derived from
    the left seed by a fixed offset unless given explicitly).
    """
    if mode not in ("identical", "independent"):
        raise ConfigError(f"mode must be 'identical' or 'independent', got {mode!r}")
    left = random_profile(roughness, speed, duration, dt, seed, cutoff_wavenumber)
    if mode == "identical":
        elevation = np.vstack([left.elevation[0], left.elevation[0]])
        seeds = {"seed": int(seed)}
    else:
        if right_seed is None:
            right_seed = (int(seed) + TRACK_SEED_OFFSET) & _MASK64
        right = random_profile(roughness, speed, duration, dt, right_seed, cutoff_wavenumber)
        elevation = np.vstack([left.elevation[0], right.elevation[0]])
        seeds = {"seed": int(seed), "right_seed": int(right_seed)}
    meta = {
        "kind": "random-dual",
        "mode": mode,
        "roughness": roughness,
        "speed": speed,
        "duration": duration,
        "dt": dt,
        "cutoff_wavenumber": cutoff_wavenumber,
    }
    meta.update(seeds)
    return RoadProfile(dt=dt, elevation=elevation, meta=meta)
