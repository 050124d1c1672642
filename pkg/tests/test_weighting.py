"""Weighting tests: the realized Wk magnitudes against the values
tabulated in ISO 2631-1:1997 (Table 3), Parseval consistency of the
frequency-domain RMS, and the PSD helper."""

import math

import numpy as np
import pytest

from suspopt.errors import ConfigError
from suspopt.road import normal_samples
from suspopt.weighting import (
    identity_weighting,
    psd,
    table_weighting,
    vertical_weighting,
    weight_at,
    weighted_rms,
)

# ISO 2631-1:1997 Table 3, Wk column, one-third-octave centers (x1000)
ISO_WK_TABLE = {
    0.5: 418, 0.63: 459, 0.8: 477, 1.0: 482, 1.25: 484, 1.6: 494,
    2.0: 531, 2.5: 631, 3.15: 804, 4.0: 967, 5.0: 1039, 6.3: 1054,
    8.0: 1036, 10.0: 988, 12.5: 902, 16.0: 768, 20.0: 636, 25.0: 513,
    31.5: 405, 40.0: 314, 50.0: 246, 63.0: 186, 80.0: 132,
}


def test_identity_weight_is_one_everywhere():
    curve = identity_weighting()
    for f in (0.0, 0.5, 7.3, 250.0):
        assert weight_at(curve, f) == 1.0
    assert np.all(weight_at(curve, np.linspace(0, 100, 7)) == 1.0)


def test_wk_matches_published_table():
    curve = vertical_weighting()
    for f, milli in ISO_WK_TABLE.items():
        assert weight_at(curve, f) == pytest.approx(milli / 1000.0, rel=5e-3)


def test_wk_band_pass_shape():
    curve = vertical_weighting()
    assert weight_at(curve, 0.0) == 0.0
    assert weight_at(curve, 0.01) < 0.01
    assert weight_at(curve, 0.5) < weight_at(curve, 8.0) > weight_at(curve, 40.0)


def test_weight_rejects_bad_frequencies():
    curve = vertical_weighting()
    with pytest.raises(ConfigError):
        weight_at(curve, -1.0)
    with pytest.raises(ConfigError):
        weight_at(curve, np.array([1.0, np.nan]))


def test_table_weighting_interpolates_and_clamps():
    curve = table_weighting([1.0, 2.0, 4.0], [0.2, 0.4, 0.4])
    assert weight_at(curve, 1.5) == pytest.approx(0.3)
    assert weight_at(curve, 0.1) == 0.2  # flat below the table
    assert weight_at(curve, 50.0) == 0.4  # flat above
    with pytest.raises(ConfigError):
        table_weighting([2.0, 1.0], [0.1, 0.2])
    with pytest.raises(ConfigError):
        table_weighting([1.0, 2.0], [0.1, -0.2])
    with pytest.raises(ConfigError):
        table_weighting([1.0], [0.1])


def test_zero_signal_has_zero_rms():
    assert weighted_rms(np.zeros(64), 1e-3, vertical_weighting()) == 0.0


def test_identity_sine_rms():
    dt = 1e-3
    t = np.arange(4000) * dt
    a = 0.7
    x = a * np.sin(2.0 * np.pi * 8.0 * t)  # 32 whole cycles
    assert weighted_rms(x, dt, identity_weighting()) == pytest.approx(
        a / math.sqrt(2.0), rel=1e-9
    )


def test_wk_single_sine_picks_up_the_bin_weight():
    dt = 1e-3
    t = np.arange(4000) * dt
    x = np.sin(2.0 * np.pi * 8.0 * t)
    expected = weight_at(vertical_weighting(), 8.0) / math.sqrt(2.0)
    assert weighted_rms(x, dt, vertical_weighting()) == pytest.approx(expected, rel=1e-2)


def test_identity_rms_matches_time_domain_parseval():
    rng = np.random.default_rng(0)
    curve = identity_weighting()
    for _ in range(100):
        n = int(rng.integers(16, 3000))
        x = rng.normal(scale=rng.uniform(0.1, 10.0), size=n)
        direct = float(np.sqrt(np.mean((x - x.mean()) ** 2)))
        assert weighted_rms(x, 1e-3, curve) == pytest.approx(direct, rel=1e-9)


def test_scaling_is_exact_for_representable_factors():
    x = normal_samples(99, 512)
    curve = vertical_weighting()
    base = weighted_rms(x, 2e-3, curve)
    for c in (2.0, 0.25, -4.0):
        assert weighted_rms(c * x, 2e-3, curve) == abs(c) * base


def test_signal_validation():
    curve = identity_weighting()
    with pytest.raises(ConfigError):
        weighted_rms(np.zeros(15), 1e-3, curve)
    with pytest.raises(ConfigError):
        weighted_rms(np.zeros((4, 16)), 1e-3, curve)
    with pytest.raises(ConfigError):
        weighted_rms(np.full(32, np.nan), 1e-3, curve)
    with pytest.raises(ConfigError):
        weighted_rms(np.zeros(32), 0.0, curve)


def test_doubling_a_stationary_window_barely_moves_the_rms():
    x = normal_samples(1234, 128000)
    curve = vertical_weighting()
    long = weighted_rms(x, 1e-3, curve)
    short = weighted_rms(x[:64000], 1e-3, curve)
    assert abs(long - short) / short < 0.02


def test_psd_recovers_white_noise_variance():
    x = 0.8 * normal_samples(7, 64000)
    f, dens = psd(x, 1e-3, segment_seconds=8.0)
    assert np.trapezoid(dens, f) == pytest.approx(float(np.var(x)), rel=0.05)


def test_psd_peaks_at_the_sine_frequency():
    dt = 1e-3
    t = np.arange(32000) * dt
    f0 = 6.0
    f, dens = psd(np.sin(2.0 * np.pi * f0 * t), dt, segment_seconds=8.0)
    assert f[np.argmax(dens)] == pytest.approx(f0, abs=f[1] - f[0])


def test_psd_of_silence_is_zero():
    f, dens = psd(np.zeros(4000), 1e-3, segment_seconds=1.0)
    assert np.all(dens == 0.0)


def test_psd_segment_validation():
    with pytest.raises(ConfigError):
        psd(np.zeros(100), 1e-3, segment_seconds=1.0)
    with pytest.raises(ConfigError):
        psd(np.zeros(4000), 1e-3, segment_seconds=1.0, overlap=1.0)
