"""Objective interaural-cue measurements on rendered audio.

Multi-source mixes make per-source ITD/ILD measurement ambiguous, so
``analyze_render`` renders every source on its own (dry, unnormalized) and
measures each solo render. The renderer is deterministic, so the solo render
is exactly that source's contribution to the mix.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Mapping, Optional

import numpy as np
from scipy import signal

from .dsp import AudioBuffer, HeadModel
from .errors import BandAboveNyquist, ItdOutOfRange, NotStereo, TooShort
from .render import RenderConfig, render
from .scene import LocalizationMode, ReverbSpec, SpatialPlan

DEFAULT_ILD_BAND = (1500.0, 8000.0)
DEFAULT_TOLERANCE_DEG = 5.0


def _require_stereo(buf: AudioBuffer):
    if buf.channels != 2:
        raise NotStereo(f"expected 2 channels, got {buf.channels}")


def _lagged_dot(left: np.ndarray, right: np.ndarray, lag: int) -> float:
    """sum_n left[n + lag] * right[n]"""
    n = len(left)
    if lag >= 0:
        return float(np.dot(left[lag:], right[: n - lag]))
    return float(np.dot(left[: n + lag], right[-lag:]))


def _phat_one_way(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    n = len(a) + len(b)
    nfft = 1 << (n - 1).bit_length()
    cross = np.fft.rfft(a, nfft) * np.conj(np.fft.rfft(b, nfft))
    cross /= np.maximum(np.abs(cross), 1e-15)
    cc = np.fft.irfft(cross, nfft)
    return np.concatenate([cc[-max_lag:], cc[: max_lag + 1]]) if max_lag else cc[:1]


def _phat_correlation(left: np.ndarray, right: np.ndarray, max_lag: int) -> np.ndarray:
    # average both orderings so swapping channels mirrors the result bit for bit
    return 0.5 * (_phat_one_way(left, right, max_lag) + _phat_one_way(right, left, max_lag)[::-1])


def estimate_itd(stereo: AudioBuffer, max_lag_s: float = 0.001, phat: bool = False) -> float:
    """Interaural time difference in seconds; positive when the left channel lags.

    Peak of the normalized cross-correlation over +/-``max_lag_s``, refined by
    a parabola through the peak and its neighbours. Equal peaks resolve toward
    zero lag.
    """
    _require_stereo(stereo)
    rate = stereo.sample_rate_hz
    max_lag = int(round(max_lag_s * rate))
    left, right = stereo.left, stereo.right
    if stereo.frames <= 2 * max_lag:
        raise TooShort(f"{stereo.frames} frames, need more than {2 * max_lag}")
    lags = np.arange(-max_lag, max_lag + 1)
    if phat:
        cc = _phat_correlation(left, right, max_lag)
    else:
        energy = math.sqrt(float(np.dot(left, left)) * float(np.dot(right, right)))
        if energy == 0.0:
            return 0.0
        cc = np.array([_lagged_dot(left, right, int(k)) for k in lags]) / energy
    peak = cc.max()
    candidates = lags[cc == peak]
    best = int(candidates[np.argmin(np.abs(candidates))])
    i = best + max_lag
    offset = 0.0
    if 0 < i < len(cc) - 1:
        y_minus, y0, y_plus = cc[i - 1], cc[i], cc[i + 1]
        denom = (y_minus + y_plus) - 2.0 * y0
        if denom < 0:
            offset = 0.5 * (y_minus - y_plus) / denom
    return (best + offset) / rate


def _band_sos(band, rate):
    lo, hi = band
    if hi >= rate / 2:
        raise BandAboveNyquist(f"band edge {hi} Hz is not below Nyquist {rate / 2} Hz")
    if lo <= 0:
        return signal.butter(4, hi, btype="lowpass", fs=rate, output="sos")
    return signal.butter(4, [lo, hi], btype="bandpass", fs=rate, output="sos")


def estimate_ild(stereo: AudioBuffer, band=DEFAULT_ILD_BAND) -> float:
    """Interaural level difference in dB over ``band``; positive when the right channel is louder.

    A lower band edge of 0 selects a lowpass instead of a bandpass.
    """
    _require_stereo(stereo)
    sos = _band_sos(band, stereo.sample_rate_hz)
    e_left = float(np.sum(signal.sosfilt(sos, stereo.left) ** 2))
    e_right = float(np.sum(signal.sosfilt(sos, stereo.right) ** 2))
    if e_left == e_right:
        return 0.0
    if e_left == 0.0:
        return math.inf
    if e_right == 0.0:
        return -math.inf
    return 10.0 * math.log10(e_right / e_left)


def azimuth_from_itd(itd_s: float, head: Optional[HeadModel] = None) -> float:
    """Invert the Woodworth model by bisection on [0, 90] degrees."""
    head = head or HeadModel()
    tau_max = head.woodworth(90.0)
    mag = abs(itd_s)
    if mag > tau_max + 10e-6:
        raise ItdOutOfRange(f"|ITD| {mag * 1e6:.1f} us exceeds model maximum {tau_max * 1e6:.1f} us")
    if mag >= tau_max:
        return math.copysign(90.0, itd_s)
    lo, hi = 0.0, 90.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if head.woodworth(mid) < mag:
            lo = mid
        else:
            hi = mid
    return math.copysign(0.5 * (lo + hi), itd_s) if itd_s else 0.0


def azimuth_from_pan(stereo: AudioBuffer) -> float:
    """Invert the constant-power pan law from broadband channel RMS."""
    _require_stereo(stereo)
    rms_l = math.sqrt(float(np.mean(stereo.left ** 2))) if stereo.frames else 0.0
    rms_r = math.sqrt(float(np.mean(stereo.right ** 2))) if stereo.frames else 0.0
    theta = math.atan2(rms_r, rms_l)
    return theta * 360.0 / math.pi - 90.0


def lateral_angle(azimuth_deg: float, elevation_deg: float = 0.0) -> float:
    """Angle off the median plane; what an ITD can resolve (front/back folded)."""
    s = math.sin(math.radians(azimuth_deg)) * math.cos(math.radians(elevation_deg))
    return math.degrees(math.asin(max(-1.0, min(1.0, s))))


@dataclass
class SourceAnalysis:
    source_id: str
    mode: str
    requested_azimuth_deg: float
    expected_azimuth_deg: float
    method: str
    measured_azimuth_deg: Optional[float]
    itd_s: Optional[float]
    ild_db: Optional[float]
    deviation_deg: Optional[float]
    within_tolerance: bool
    azimuth_from_itd: str = "applicable"


@dataclass
class AnalysisReport:
    sources: list[SourceAnalysis]
    tolerance_deg: float

    @property
    def ok(self) -> bool:
        return all(s.within_tolerance for s in self.sources)

    def to_dict(self) -> dict:
        return {"tolerance_deg": self.tolerance_deg, "ok": self.ok, "sources": [asdict(s) for s in self.sources]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False, default=str) + "\n"

    def table(self) -> str:
        header = f"{'source':<16} {'mode':<7} {'req':>7} {'exp':>7} {'meas':>7} {'dev':>6} {'ITD us':>8} {'ILD dB':>7}  ok"
        rows = [header, "-" * len(header)]

        def fmt(v, spec):
            return format(v, spec) if v is not None and math.isfinite(v) else "-".rjust(int(spec.split(".")[0]))

        for s in self.sources:
            rows.append(
                f"{s.source_id[:16]:<16} {s.mode:<7} {s.requested_azimuth_deg:7.1f} {s.expected_azimuth_deg:7.1f} "
                f"{fmt(s.measured_azimuth_deg, '7.1f')} {fmt(s.deviation_deg, '6.1f')} "
                f"{fmt(None if s.itd_s is None else s.itd_s * 1e6, '8.1f')} {fmt(s.ild_db, '7.2f')}  "
                f"{'yes' if s.within_tolerance else 'NO'}"
            )
        return "\n".join(rows) + "\n"


def _finite_or_none(x):
    return x if x is not None and math.isfinite(x) else None


def analyze_render(
    plan: SpatialPlan,
    stems: Mapping[str, AudioBuffer],
    hrir_bank,
    rir_bank,
    cfg: Optional[RenderConfig] = None,
    tolerance_deg: float = DEFAULT_TOLERANCE_DEG,
) -> AnalysisReport:
    """Solo-render each source (dry, unnormalized) and compare requested vs measured azimuth."""
    cfg = replace(cfg or RenderConfig(), normalize_peak_dbfs=None)
    dry = ReverbSpec(plan.reverb.kind, 0.0)
    results = []
    for src in plan.sources:
        solo = replace(plan, sources=(replace(src, reverb_send=0.0),), reverb=dry)
        out, _ = render(solo, stems, hrir_bank, rir_bank, cfg)
        try:
            ild = _finite_or_none(estimate_ild(out))
        except BandAboveNyquist:
            ild = None
        if src.mode is LocalizationMode.PANNING:
            expected = max(-90.0, min(90.0, src.azimuth_deg))
            measured = azimuth_from_pan(out)
            method, itd, applicable = "pan_ratio", None, "not applicable"
        else:
            if src.mode is LocalizationMode.ITD_ILD:
                expected = lateral_angle(src.azimuth_deg)
            else:
                expected = lateral_angle(src.azimuth_deg, src.elevation_deg)
            itd = estimate_itd(out)
            try:
                measured = azimuth_from_itd(itd, cfg.head)
            except ItdOutOfRange:
                measured = None
            method, applicable = "itd", "applicable"
        deviation = None if measured is None else abs(measured - expected)
        results.append(SourceAnalysis(
            source_id=src.source_id,
            mode=src.mode.value,
            requested_azimuth_deg=src.azimuth_deg,
            expected_azimuth_deg=expected,
            method=method,
            measured_azimuth_deg=measured,
            itd_s=itd,
            ild_db=ild,
            deviation_deg=deviation,
            within_tolerance=deviation is not None and deviation <= tolerance_deg,
            azimuth_from_itd=applicable,
        ))
    return AnalysisReport(results, tolerance_deg)
