import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import RATE, impulse, make_plan, noise, source
from spatialmix import dsp
from spatialmix.analysis import (
    analyze_render,
    azimuth_from_itd,
    azimuth_from_pan,
    estimate_ild,
    estimate_itd,
)
from spatialmix.dsp import AudioBuffer, HeadModel
from spatialmix.errors import BandAboveNyquist, ItdOutOfRange, NotStereo, TooShort
from spatialmix.render import RenderConfig
from spatialmix.scene import OutputFormat


def test_itd_identical_channels():
    x = noise(4000).data
    assert estimate_itd(AudioBuffer.stereo(x, x, RATE)) == 0.0


def test_itd_known_offset():
    left = np.zeros(4096)
    right = np.zeros(4096)
    right[100] = 1.0
    left[132] = 1.0
    itd = estimate_itd(AudioBuffer.stereo(left, right, RATE))
    assert itd * 1e6 == pytest.approx(666.7, abs=5.0)


def test_itd_errors():
    with pytest.raises(NotStereo):
        estimate_itd(noise(1000))
    with pytest.raises(TooShort):
        estimate_itd(AudioBuffer.stereo(np.zeros(50), np.zeros(50), RATE))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 40), st.booleans())
def test_itd_swap_antisymmetry(seed, delay, phat):
    x = np.random.default_rng(seed).standard_normal(2000)
    y = dsp.fractional_delay_array(x, delay)
    a = estimate_itd(AudioBuffer.stereo(y, x, RATE), phat=phat)
    b = estimate_itd(AudioBuffer.stereo(x, y, RATE), phat=phat)
    assert a == -b


def test_itd_phat_on_noise():
    x = noise(8000).data
    y = dsp.fractional_delay_array(x, 20.0)
    assert estimate_itd(AudioBuffer.stereo(y, x, RATE), phat=True) * RATE == pytest.approx(20.0, abs=0.5)


def test_ild_examples():
    x = noise(4000).data
    assert estimate_ild(AudioBuffer.stereo(x, x, RATE)) == 0.0
    assert estimate_ild(AudioBuffer.stereo(x, 2 * x, RATE)) == pytest.approx(20 * math.log10(2), abs=0.1)
    with pytest.raises(NotStereo):
        estimate_ild(noise(100))
    with pytest.raises(BandAboveNyquist):
        estimate_ild(AudioBuffer.stereo(x, x, RATE), (1000.0, 30000.0))


def test_ild_full_render_90(hrir_bank, rir_bank):
    from spatialmix.render import render
    plan = make_plan([source("a", 90, "ItdIld")])
    out, _ = render(plan, {"a": noise(RATE * 2, seed=11)}, hrir_bank, rir_bank, RenderConfig(normalize_peak_dbfs=None))
    assert estimate_ild(out) == pytest.approx(12.0, abs=0.5)
    assert estimate_ild(out, (0.0, 300.0)) == pytest.approx(0.0, abs=0.5)


def test_azimuth_from_itd_examples():
    head = HeadModel()
    assert azimuth_from_itd(0.0) == 0.0
    assert azimuth_from_itd(head.woodworth(60.0)) == pytest.approx(60.0, abs=0.5)
    assert azimuth_from_itd(-head.woodworth(60.0)) == pytest.approx(-60.0, abs=0.5)
    assert azimuth_from_itd(head.woodworth(90.0) + 5e-6) == 90.0
    with pytest.raises(ItdOutOfRange):
        azimuth_from_itd(head.woodworth(90.0) + 20e-6)


@given(st.floats(-90, 90))
def test_azimuth_from_itd_inverts_model(az):
    head = HeadModel()
    tau = math.copysign(head.woodworth(az), az)
    back = azimuth_from_itd(tau, head)
    assert abs(math.copysign(head.woodworth(back), back) - tau) < 1e-6


@given(st.floats(-90, 90))
def test_azimuth_from_pan_inverts_gains(az):
    gl, gr = dsp.pan_gains(az)
    x = noise(256).data
    assert azimuth_from_pan(AudioBuffer.stereo(gl * x, gr * x, RATE)) == pytest.approx(az, abs=1e-6)


def test_analyze_three_sources(hrir_bank, rir_bank):
    plan = make_plan([source(f"s{az}", az, "ItdIld", send=0.3) for az in (-60, 0, 30)], wet=0.3)
    stems = {s.source_id: noise(RATE // 4, seed=i) for i, s in enumerate(plan.sources)}
    report = analyze_render(plan, stems, hrir_bank, rir_bank)
    assert report.ok
    assert [round(s.measured_azimuth_deg) for s in report.sources] == [-60, 0, 30]
    assert all(s.deviation_deg <= 5.0 for s in report.sources)
    doc = json.loads(report.to_json())
    assert doc["ok"] and len(doc["sources"]) == 3
    assert "s-60" in report.table()


def test_analyze_panning_source(hrir_bank, rir_bank):
    plan = make_plan([source("p", -40, "Panning")], fmt=OutputFormat.STEREO)
    report = analyze_render(plan, {"p": noise()}, hrir_bank, rir_bank)
    (s,) = report.sources
    assert s.azimuth_from_itd == "not applicable" and s.method == "pan_ratio"
    assert s.itd_s is None
    assert s.measured_azimuth_deg == pytest.approx(-40.0, abs=1e-6)


def test_analyze_hrtf_uses_lateral_angle(hrir_bank, rir_bank):
    plan = make_plan([source("h", 120, "Hrtf")])
    (s,) = analyze_render(plan, {"h": impulse()}, hrir_bank, rir_bank).sources
    assert s.expected_azimuth_deg == pytest.approx(60.0)
    assert s.within_tolerance


def test_analyze_empty_plan(hrir_bank, rir_bank):
    report = analyze_render(make_plan([]), {}, hrir_bank, rir_bank)
    assert report.sources == [] and report.ok


def test_analyze_negative_control(hrir_bank, rir_bank):
    plan = make_plan([source("a", 45, "ItdIld")])
    report = analyze_render(plan, {"a": impulse()}, hrir_bank, rir_bank, RenderConfig(itd_enabled=False))
    assert not report.ok


def test_estimators_deterministic():
    x = noise(3000, seed=1).data
    buf = AudioBuffer.stereo(x, dsp.fractional_delay_array(x, 7.3), RATE)
    assert estimate_itd(buf) == estimate_itd(buf)
    assert estimate_ild(buf) == estimate_ild(buf)
