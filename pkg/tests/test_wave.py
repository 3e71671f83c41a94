import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavegrasp.errors import ConfigurationError
from wavegrasp.wave import SeaStateSpec, preset, wave_offset


def scan_heave(spec, t_end=50.0, dt=0.1):
    """Sampled heave: max amplitude and mean period from upward zero crossings."""
    t = np.arange(0.0, t_end + dt / 2, dt)
    z = np.array([wave_offset(spec, ti)[2] for ti in t])
    up = [i for i in range(1, len(z)) if z[i - 1] < 0.0 <= z[i]]
    period = float(np.mean(np.diff(t[up]))) if len(up) > 1 else math.nan
    return float(np.max(np.abs(z))), period


def test_code_zero_is_still():
    for t in (0.0, 1.3, 17.0, 1e4):
        assert np.array_equal(wave_offset(preset(0), t), np.zeros(3))


def test_quarter_period_peak():
    spec = SeaStateSpec(2, 0.5, period=5.0)
    assert wave_offset(spec, 1.25)[2] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("code, amplitude", [(0, 0.0), (1, 0.1), (2, 0.5)])
def test_presets(code, amplitude):
    spec = preset(code)
    assert spec.wmo_code == code
    assert spec.amplitude == amplitude
    assert spec.period == 5.0


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        preset(3)


@pytest.mark.parametrize("code", [1, 2])
def test_scanned_amplitude_and_period(code):
    spec = preset(code)
    amp, period = scan_heave(spec)
    assert abs(amp - spec.amplitude) < 1e-3
    assert abs(period - spec.period) <= 0.1


@pytest.mark.parametrize(
    "code, amplitude",
    [(0, 0.05), (1, 0.0), (1, 0.2), (2, 0.1), (2, 0.6), (5, 0.1)],
)
def test_amplitude_outside_band_rejected(code, amplitude):
    with pytest.raises(ConfigurationError):
        SeaStateSpec(code, amplitude)


def test_zero_mean_over_period():
    spec = preset(2)
    n = 2000
    t = np.arange(n) * spec.period / n
    mean = np.mean([wave_offset(spec, ti) for ti in t], axis=0)
    assert np.all(np.abs(mean) < 1e-6 * spec.amplitude)


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0.0, 1e3), code=st.sampled_from([1, 2]))
def test_periodic_and_bounded(t, code):
    spec = preset(code)
    w = wave_offset(spec, t)
    assert np.max(np.abs(w - wave_offset(spec, t + spec.period))) < 1e-9
    assert abs(w[0]) <= spec.surge_frac * spec.amplitude + 1e-15
    assert abs(w[1]) <= spec.sway_frac * spec.amplitude + 1e-15
    assert abs(w[2]) <= spec.amplitude + 1e-15


def test_dict_roundtrip():
    spec = SeaStateSpec(1, 0.07, period=4.0, phases=(0.1, 0.2, 0.3))
    assert SeaStateSpec.from_dict(spec.to_dict()) == spec
