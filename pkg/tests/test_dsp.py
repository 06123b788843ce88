import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal

from spatialmix import dsp
from spatialmix.analysis import estimate_ild
from spatialmix.dsp import AudioBuffer, HeadModel
from spatialmix.errors import (
    AzimuthOutOfRange,
    DelayTooLong,
    NonpositiveDistance,
    Rt60OutOfRange,
    SampleRateMismatch,
)

RATE = 48000
finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------- AudioBuffer

def test_buffer_rejects_bad_rate_and_nan():
    with pytest.raises(ValueError):
        AudioBuffer.mono(np.zeros(4), 22050)
    with pytest.raises(ValueError):
        AudioBuffer.mono(np.array([0.0, np.nan]), RATE)
    with pytest.raises(ValueError):
        AudioBuffer.mono(np.array([0.0, np.inf]), RATE)


def test_buffer_is_read_only():
    buf = AudioBuffer.stereo(np.zeros(3), np.ones(3), RATE)
    assert buf.channels == 2 and buf.frames == 3
    with pytest.raises(ValueError):
        buf.data[0, 0] = 1.0


def test_head_model_ranges():
    with pytest.raises(ValueError):
        HeadModel(head_radius_m=0.2)
    with pytest.raises(ValueError):
        HeadModel(speed_of_sound_mps=250.0)


# ---------------------------------------------------------------- panning

def test_pan_center_and_endpoints():
    gl, gr = dsp.pan_gains(0.0)
    assert gl == pytest.approx(0.70710678, abs=1e-8)
    assert gr == pytest.approx(0.70710678, abs=1e-8)
    gl, gr = dsp.pan_gains(90.0)
    assert gl == pytest.approx(0.0, abs=1e-15) and gr == 1.0


def test_pan_45():
    gl, gr = dsp.pan_gains(45.0)
    assert gl == pytest.approx(math.cos(math.radians(67.5)), abs=1e-12)
    assert gr == pytest.approx(math.sin(math.radians(67.5)), abs=1e-12)


def test_pan_clamps_beyond_90():
    assert dsp.pan_gains(135.0) == dsp.pan_gains(90.0)
    assert dsp.pan_gains(-170.0) == dsp.pan_gains(-90.0)


@given(st.floats(-180, 180, allow_nan=False))
def test_pan_mirror_is_exact_swap(az):
    gl, gr = dsp.pan_gains(az)
    assert dsp.pan_gains(-az) == (gr, gl)
    assert abs(gl * gl + gr * gr - 1.0) < 1e-12


# ---------------------------------------------------------------- ITD

def test_itd_examples():
    assert dsp.itd_seconds(0.0) == (0.0, 0.0)
    left, right = dsp.itd_seconds(90.0)
    assert right == 0.0
    assert left == pytest.approx(0.0875 / 343 * (math.pi / 2 + 1), rel=1e-12)
    assert left * 1e6 == pytest.approx(655.8, abs=0.05)
    left, right = dsp.itd_seconds(-30.0)
    assert left == 0.0
    assert right * 1e6 == pytest.approx(261.1, abs=0.05)


def test_itd_out_of_range():
    with pytest.raises(AzimuthOutOfRange):
        dsp.itd_seconds(91.0)


@given(st.floats(-90, 90, allow_nan=False))
def test_itd_antisymmetry(az):
    left, right = dsp.itd_seconds(az)
    assert dsp.itd_seconds(-az) == (right, left)


def test_itd_monotone_and_bounded():
    taus = [HeadModel().woodworth(a) for a in np.linspace(0, 90, 901)]
    assert all(b > a for a, b in zip(taus, taus[1:]))
    assert 640e-6 <= taus[-1] <= 670e-6


# ---------------------------------------------------------------- fractional delay

def test_fractional_delay_identity():
    x = np.random.default_rng(0).standard_normal(64)
    buf = AudioBuffer.mono(x, RATE)
    assert np.array_equal(dsp.fractional_delay(buf, 0.0).data, x)


def test_fractional_delay_half_sample():
    x = np.zeros(8)
    x[0] = 1.0
    y = dsp.fractional_delay_array(x, 2.5)
    expected = np.zeros(8)
    expected[2] = expected[3] = 0.5
    assert np.allclose(y, expected, atol=1e-15)


def test_fractional_delay_woodworth_split():
    x = np.zeros(64)
    x[0] = 1.0
    d = 31.48
    y = dsp.fractional_delay_array(x, d)
    assert y[31] == pytest.approx(0.52, abs=1e-12)
    assert y[32] == pytest.approx(0.48, abs=1e-12)
    assert np.count_nonzero(y) == 2
    buf = AudioBuffer.mono(x, RATE)
    assert len(dsp.fractional_delay(buf, HeadModel().woodworth(90)).data) == 64


def test_fractional_delay_too_long():
    with pytest.raises(DelayTooLong):
        dsp.fractional_delay_array(np.zeros(8), 4097.0)


@settings(max_examples=50)
@given(arrays(np.float64, 32, elements=finite), arrays(np.float64, 32, elements=finite),
       finite, finite, st.floats(0, 40, allow_nan=False))
def test_fractional_delay_linear(x, y, a, b, d):
    lhs = dsp.fractional_delay_array(a * x + b * y, d)
    rhs = a * dsp.fractional_delay_array(x, d) + b * dsp.fractional_delay_array(y, d)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


# ---------------------------------------------------------------- ILD shelf

def _response_db(gain_db, freqs, rate=RATE):
    b, a = dsp.high_shelf_coefficients(gain_db, dsp.DEFAULT_SHELF_FC_HZ, rate)
    _, h = signal.freqz(b, a, worN=np.asarray(freqs, dtype=float), fs=rate)
    return 20 * np.log10(np.abs(h))


@pytest.mark.parametrize("gain", [-6.0, -3.0, 3.0, 6.0])
def test_shelf_unity_dc_and_exact_nyquist(gain):
    dc, nyq = _response_db(gain, [0.0, RATE / 2 - 1e-6])
    assert abs(dc) < 1e-9
    assert abs(nyq - gain) < 0.1


def test_ild_zero_azimuth_is_identity():
    x = np.random.default_rng(1).standard_normal(512)
    buf = AudioBuffer.mono(x, RATE)
    for ear in ("ipsilateral", "contralateral"):
        assert np.max(np.abs(dsp.ild_filter(buf, 0.0, ear).data - x)) < 1e-9


def _probe_ild(az, band):
    x = AudioBuffer.mono(np.random.default_rng(7).standard_normal(RATE * 2), RATE)
    near = dsp.ild_filter(x, az, "ipsilateral")
    far = dsp.ild_filter(x, az, "contralateral")
    return estimate_ild(AudioBuffer.stereo(far.data, near.data, RATE), band)


def test_ild_probe_90():
    assert _probe_ild(90.0, (4000.0, 23000.0)) == pytest.approx(12.0, abs=0.5)
    assert _probe_ild(90.0, (0.0, 300.0)) == pytest.approx(0.0, abs=0.5)


def test_ild_probe_30():
    assert _probe_ild(30.0, (4000.0, 23000.0)) == pytest.approx(6.0, abs=0.5)


def test_ild_rejects_rear_and_bad_ear():
    buf = AudioBuffer.mono(np.zeros(4), RATE)
    with pytest.raises(AzimuthOutOfRange):
        dsp.ild_filter(buf, 120.0, "ipsilateral")
    with pytest.raises(ValueError):
        dsp.ild_filter(buf, 10.0, "middle")


# ---------------------------------------------------------------- distance

def test_distance_gain():
    assert dsp.distance_gain(1.0) == 1.0
    assert dsp.distance_gain(10.0) == pytest.approx(0.1)
    assert dsp.distance_gain(0.1) == 4.0
    with pytest.raises(NonpositiveDistance):
        dsp.distance_gain(0.0)


# ---------------------------------------------------------------- convolution

def test_convolve_small_cases():
    x = AudioBuffer.mono(np.array([0.3, -0.2, 0.7]), RATE)
    delta = AudioBuffer.mono(np.array([1.0]), RATE)
    assert np.allclose(dsp.convolve(x, delta).data, x.data, atol=1e-15)
    ones = AudioBuffer.mono(np.ones(2), RATE)
    assert np.allclose(dsp.convolve(ones, ones).data, [1, 2, 1], atol=1e-12)


def test_convolve_rate_mismatch():
    with pytest.raises(SampleRateMismatch):
        dsp.convolve(AudioBuffer.mono(np.ones(2), 48000), AudioBuffer.mono(np.ones(2), 44100))


def test_convolve_long_ir_against_direct():
    rng = np.random.default_rng(3)
    x, h = rng.standard_normal(1024), rng.standard_normal(256)
    assert np.max(np.abs(dsp.fft_convolve(x, h) - np.convolve(x, h))) <= 1e-6
    x, h = rng.standard_normal(20000), rng.standard_normal(5000)
    assert np.max(np.abs(dsp.fft_convolve(x, h) - np.convolve(x, h))) <= 1e-6


def test_convolve_empty():
    assert len(dsp.fft_convolve(np.zeros(0), np.ones(3))) == 0


@settings(max_examples=100)
@given(arrays(np.float64, st.integers(1, 300), elements=finite),
       arrays(np.float64, st.integers(1, 80), elements=finite))
def test_convolve_commutes_and_matches_direct(x, h):
    y = dsp.fft_convolve(x, h)
    assert len(y) == len(x) + len(h) - 1
    assert np.max(np.abs(y - np.convolve(x, h))) <= 1e-6
    assert np.max(np.abs(y - dsp.fft_convolve(h, x))) <= 1e-9
    assert np.all(np.isfinite(y))


# ---------------------------------------------------------------- Schroeder

def test_comb_gain_closed_form():
    assert dsp.comb_gain(0.0297, 2.0) == pytest.approx(10 ** (-3 * 0.0297 / 2), rel=1e-12)
    assert dsp.comb_gain(0.0297, 2.0) == pytest.approx(0.9026, abs=1e-4)


def test_schroeder_silence_and_length():
    buf = AudioBuffer.mono(np.zeros(100), RATE)
    out = dsp.schroeder_reverb(buf, 0.051, 0.0)
    assert not np.any(out.data)
    assert out.frames == 100 + math.ceil(0.051 * RATE)


def test_schroeder_rt60_range():
    buf = AudioBuffer.mono(np.zeros(10), RATE)
    with pytest.raises(Rt60OutOfRange):
        dsp.schroeder_reverb(buf, 0.05)
    with pytest.raises(Rt60OutOfRange):
        dsp.schroeder_reverb(buf, 20.5)


def test_schroeder_predelay_shifts_output():
    x = np.zeros(256)
    x[0] = 1.0
    buf = AudioBuffer.mono(x, RATE)
    base = dsp.schroeder_reverb(buf, 0.5, 0.0).data
    shifted = dsp.schroeder_reverb(buf, 0.5, 10.0).data
    d = round(0.010 * RATE)
    assert np.allclose(shifted[d:], base[: len(base) - d], atol=1e-12)
    assert not np.any(shifted[:d])


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.integers(1, 200), elements=finite), st.floats(0.06, 1.0))
def test_schroeder_finite(x, rt60):
    out = dsp.schroeder_reverb(AudioBuffer.mono(x, RATE), rt60, 2.0)
    assert np.all(np.isfinite(out.data))
