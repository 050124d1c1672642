"""Frequency weighting of acceleration histories for ride comfort.

The vertical whole-body weighting follows ISO 2631-1:1997 (Wk): band
limiting between 0.4 and 100 Hz, an acceleration-velocity transition at
12.5 Hz and the upward step near 2.5 Hz.  The constants below are the
Annex A parameters of that standard; the realized s-domain magnitude
reproduces the standard's tabulated one-third-octave weights to within
0.3%.

Weighted RMS values are computed in the frequency domain: the signal is
mean-removed, transformed, each bin scaled by the weight at its
frequency, and the RMS recovered through the discrete Parseval
identity.  The identity curve therefore reproduces the plain RMS of the
fluctuation, and a static offset never counts as vibration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import ConfigError

MIN_SAMPLES = 16

# ISO 2631-1:1997 Annex A band edges (Hz) and resonance quality factors
# for the vertical (Wk) weighting.
_F1, _Q1 = 0.4, 1.0 / math.sqrt(2.0)
_F2, _Q2 = 100.0, 1.0 / math.sqrt(2.0)
_F3 = 12.5
_F4, _Q4 = 12.5, 0.63
_F5, _Q5 = 2.37, 0.91
_F6, _Q6 = 3.35, 0.91


def _wk_magnitude(f):
    s = 2j * np.pi * np.asarray(f, dtype=float)
    w1 = 2.0 * np.pi * _F1
    w2 = 2.0 * np.pi * _F2
    w3 = 2.0 * np.pi * _F3
    w4 = 2.0 * np.pi * _F4
    w5 = 2.0 * np.pi * _F5
    w6 = 2.0 * np.pi * _F6
    band_hp = s * s / (s * s + (w1 / _Q1) * s + w1 * w1)
    band_lp = w2 * w2 / (s * s + (w2 / _Q2) * s + w2 * w2)
    av_transition = (s + w3) * w4 * w4 / (w3 * (s * s + (w4 / _Q4) * s + w4 * w4))
    upward_step = (s * s + (w5 / _Q5) * s + w5 * w5) / (s * s + (w6 / _Q6) * s + w6 * w6)
    return np.abs(band_hp * band_lp * av_transition * upward_step)


@dataclass(frozen=True)
class WeightingCurve:
    """A named frequency-weight law: identity, vertical Wk, or a table."""

    kind: str
    frequency: np.ndarray | None = None
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "wk", "table"):
            raise ConfigError(f"unknown weighting kind {self.kind!r}")
        if self.kind != "table":
            if self.frequency is not None or self.weight is not None:
                raise ConfigError(f"{self.kind!r} weighting takes no table data")
            return
        f = np.array(self.frequency, dtype=float)
        w = np.array(self.weight, dtype=float)
        if f.ndim != 1 or f.shape != w.shape or f.size < 2:
            raise ConfigError("a weight table needs matching frequency/weight vectors")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(w))):
            raise ConfigError("weight table entries must be finite")
        if f[0] < 0.0 or np.any(np.diff(f) <= 0.0):
            raise ConfigError("table frequencies must be nonnegative and increasing")
        if np.any(w < 0.0):
            raise ConfigError("weights must be nonnegative")
        f.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "frequency", f)
        object.__setattr__(self, "weight", w)


def identity_weighting():
    return WeightingCurve("identity")


def vertical_weighting():
    """The ISO 2631-1 Wk curve for z-axis whole-body vibration."""
    return WeightingCurve("wk")


def table_weighting(frequency, weight):
    """Piecewise-linear weights; ends extend flat beyond the table."""
    return WeightingCurve("table", frequency=frequency, weight=weight)


def weight_at(curve, f):
    """Dimensionless weight at frequency f (Hz, scalar or array)."""
    arr = np.asarray(f, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ConfigError("frequencies must be finite and nonnegative")
    if curve.kind == "identity":
        out = np.ones_like(arr)
    elif curve.kind == "wk":
        out = _wk_magnitude(arr)
    else:
        out = np.interp(arr, curve.frequency, curve.weight)
    return float(out) if np.isscalar(f) else out


def _checked_signal(signal, dt):
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ConfigError(f"expected a 1-D signal, got shape {x.shape}")
    if x.size < MIN_SAMPLES:
        raise ConfigError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ConfigError("signal contains non-finite samples")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ConfigError(f"dt must be positive, got {dt!r}")
    return x


def weighted_rms(signal, dt, curve):
    """Frequency-weighted RMS of an acceleration history.

    Parseval: mean(x**2) = sum(c_k |X_k|**2) / n**2 over the one-sided
    spectrum, c_k = 2 except at DC and (for even n) Nyquist.
    """
    x = _checked_signal(signal, dt)
    n = x.size
    x = x - np.mean(x)
    spectrum = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(n, dt)
    spectrum *= weight_at(curve, freqs)
    coeff = np.full(spectrum.shape, 2.0)
    coeff[0] = 1.0
    if n % 2 == 0:
        coeff[-1] = 1.0
    mean_square = float(np.sum(coeff * spectrum * spectrum)) / (float(n) * float(n))
    return math.sqrt(mean_square)


def psd(signal, dt, segment_seconds=8.0, overlap=0.5):
    """One-sided Welch power spectral density (Hann window).

    Returns (frequency Hz, density (signal unit)^2/Hz); the density
    integrates to the signal variance.
    """
    x = _checked_signal(signal, dt)
    if not (math.isfinite(segment_seconds) and segment_seconds > 0.0):
        raise ConfigError(f"segment length must be positive, got {segment_seconds!r}")
    nperseg = int(round(segment_seconds / dt))
    if nperseg > x.size:
        raise ConfigError(
            f"{segment_seconds!r} s segments do not fit a "
            f"{x.size * dt:.6g} s signal"
        )
    if not 0.0 <= overlap < 1.0:
        raise ConfigError(f"overlap fraction must be in [0, 1), got {overlap!r}")
    freqs, dens = scipy.signal.welch(
        x,
        fs=1.0 / dt,
        window="hann",
        nperseg=nperseg,
        noverlap=int(nperseg * overlap),
        detrend="constant",
    )
    return freqs, dens
