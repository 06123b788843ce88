"""Signal-processing primitives used by the renderer.

Everything here is a pure function of its arguments: buffers go in, new
buffers come out. Processing runs in float64 regardless of file bit depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import (
    AzimuthOutOfRange,
    DelayTooLong,
    NonpositiveDistance,
    Rt60OutOfRange,
    SampleRateMismatch,
)

SUPPORTED_RATES = (44100, 48000)
MAX_DELAY_SAMPLES = 4096

DEFAULT_ILD_MAX_DB = 12.0
DEFAULT_SHELF_FC_HZ = 1500.0
DEFAULT_SHELF_SLOPE = 1.5

COMB_DELAYS_MS = (29.7, 37.1, 41.1, 43.7)
ALLPASS_DELAYS_MS = (5.0, 1.7)
ALLPASS_GAIN = 0.7


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Sample-rate-tagged PCM block, shape ``(channels, frames)``.

    Samples are linear amplitude with nominal full scale +/-1.0. The array is
    copied to float64 and made read-only on construction.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        data = np.array(self.samples, dtype=np.float64, copy=True)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2 or data.shape[0] not in (1, 2):
            raise ValueError(f"expected 1 or 2 channels, got shape {data.shape}")
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise ValueError(f"sample rate {self.sample_rate_hz} not in {SUPPORTED_RATES}")
        if not np.all(np.isfinite(data)):
            raise ValueError("samples contain NaN or Inf")
        data.setflags(write=False)
        object.__setattr__(self, "samples", data)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @classmethod
    def mono(cls, samples, sample_rate_hz: int) -> AudioBuffer:
        return cls(np.asarray(samples, dtype=np.float64).reshape(1, -1), sample_rate_hz)

    @classmethod
    def stereo(cls, left, right, sample_rate_hz: int) -> AudioBuffer:
        return cls(np.vstack([np.asarray(left, np.float64), np.asarray(right, np.float64)]), sample_rate_hz)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def frames(self) -> int:
        return self.samples.shape[1]

    @property
    def data(self) -> np.ndarray:
        """The single channel of a mono buffer as a 1-D array."""
        if self.channels != 1:
            raise ValueError("buffer is not mono")
        return self.samples[0]

    @property
    def left(self) -> np.ndarray:
        return self.samples[0]

    @property
    def right(self) -> np.ndarray:
        return self.samples[-1]

    def __repr__(self):
        return f"AudioBuffer(channels={self.channels}, frames={self.frames}, sample_rate_hz={self.sample_rate_hz})"


@dataclass(frozen=True)
class HeadModel:
    head_radius_m: float = 0.0875
    speed_of_sound_mps: float = 343.0

    def __post_init__(self):
        if not 0.05 < self.head_radius_m < 0.15:
            raise ValueError(f"head_radius_m {self.head_radius_m} outside (0.05, 0.15)")
        if not 300.0 < self.speed_of_sound_mps < 400.0:
            raise ValueError(f"speed_of_sound_mps {self.speed_of_sound_mps} outside (300, 400)")

    def woodworth(self, azimuth_deg: float) -> float:
        """Lateral ITD magnitude in seconds for ``|azimuth_deg|`` <= 90."""
        theta = abs(azimuth_deg) * math.pi / 180.0
        return self.head_radius_m / self.speed_of_sound_mps * (theta + math.sin(theta))


def _require_mono(buf: AudioBuffer, name="input"):
    if buf.channels != 1:
        raise ValueError(f"{name} must be mono")


def pan_gains(azimuth_deg: float) -> tuple[float, float]:
    """Constant-power (sine-cosine) pan law.

    Azimuth is clamped to [-90, 90] (+ = right). Both gains are evaluated as
    cosines of mirrored arguments so that ``pan_gains(-a)`` is exactly the
    swapped pair of ``pan_gains(a)``.
    """
    az = min(90.0, max(-90.0, float(azimuth_deg)))
    gain_left = math.cos((90.0 + az) / 180.0 * (math.pi / 2.0))
    gain_right = math.cos((90.0 - az) / 180.0 * (math.pi / 2.0))
    return gain_left, gain_right


def itd_seconds(azimuth_deg: float, head: HeadModel | None = None) -> tuple[float, float]:
    """Per-ear onset delays ``(left, right)`` from the Woodworth spherical head.

    The ear facing away from the source gets the whole delay.
    """
    if not abs(azimuth_deg) <= 90.0:
        raise AzimuthOutOfRange(f"ITD model covers |azimuth| <= 90, got {azimuth_deg}")
    tau = (head or HeadModel()).woodworth(azimuth_deg)
    if azimuth_deg > 0:
        return tau, 0.0
    if azimuth_deg < 0:
        return 0.0, tau
    return 0.0, 0.0


def fractional_delay_array(x: np.ndarray, delay_samples: float) -> np.ndarray:
    if delay_samples < 0:
        raise ValueError(f"negative delay {delay_samples}")
    if delay_samples > MAX_DELAY_SAMPLES:
        raise DelayTooLong(f"{delay_samples:.2f} samples exceeds {MAX_DELAY_SAMPLES}")
    whole = int(math.floor(delay_samples))
    frac = delay_samples - whole
    n = len(x)
    out = np.zeros(n)
    if whole < n:
        out[whole:] = (1.0 - frac) * x[: n - whole]
    if frac > 0.0 and whole + 1 < n:
        out[whole + 1 :] += frac * x[: n - whole - 1]
    return out


def fractional_delay(buf: AudioBuffer, delay_s: float) -> AudioBuffer:
    """Delay a mono buffer by ``delay_s`` using linear interpolation.

    The output keeps the input length: leading samples are zero and the tail
    is truncated.
    """
    _require_mono(buf)
    return AudioBuffer.mono(fractional_delay_array(buf.data, delay_s * buf.sample_rate_hz), buf.sample_rate_hz)


def high_shelf_coefficients(gain_db: float, fc_hz: float, sample_rate_hz: int, slope: float = DEFAULT_SHELF_SLOPE):
    """Bilinear-transform second-order high shelf, midpoint ``fc_hz``.

    Unity gain at DC and exactly ``gain_db`` at Nyquist. Returns ``(b, a)``
    normalised so that ``a[0] == 1``.
    """
    amp = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * math.pi * fc_hz / sample_rate_hz
    cw, sw = math.cos(w0), math.sin(w0)
    alpha = sw / 2.0 * math.sqrt((amp + 1.0 / amp) * (1.0 / slope - 1.0) + 2.0)
    k = 2.0 * math.sqrt(amp) * alpha
    b = np.array([
        amp * ((amp + 1) + (amp - 1) * cw + k),
        -2 * amp * ((amp - 1) + (amp + 1) * cw),
        amp * ((amp + 1) + (amp - 1) * cw - k),
    ])
    a = np.array([
        (amp + 1) - (amp - 1) * cw + k,
        2 * ((amp - 1) - (amp + 1) * cw),
        (amp + 1) - (amp - 1) * cw - k,
    ])
    return b / a[0], a / a[0]


def ild_shelf_db(azimuth_deg: float, ear: str, ild_max_db: float = DEFAULT_ILD_MAX_DB) -> float:
    if not abs(azimuth_deg) <= 90.0:
        raise AzimuthOutOfRange(f"ILD model covers |azimuth| <= 90, got {azimuth_deg}")
    if ear == "ipsilateral":
        sign = 1.0
    elif ear == "contralateral":
        sign = -1.0
    else:
        raise ValueError(f"ear must be 'ipsilateral' or 'contralateral', not {ear!r}")
    return sign * (ild_max_db / 2.0) * math.sin(abs(azimuth_deg) * math.pi / 180.0)


def shelf_array(x: np.ndarray, gain_db: float, fc_hz: float, sample_rate_hz: int, slope: float) -> np.ndarray:
    if gain_db == 0.0:
        return np.array(x, dtype=np.float64, copy=True)
    b, a = high_shelf_coefficients(gain_db, fc_hz, sample_rate_hz, slope)
    return signal.lfilter(b, a, x)


def ild_filter(
    buf: AudioBuffer,
    azimuth_deg: float,
    ear: str,
    *,
    ild_max_db: float = DEFAULT_ILD_MAX_DB,
    shelf_fc_hz: float = DEFAULT_SHELF_FC_HZ,
    shelf_slope: float = DEFAULT_SHELF_SLOPE,
) -> AudioBuffer:
    """Head-shadow level shaping for one ear.

    The near (``"ipsilateral"``) ear is boosted and the far ear cut above the
    shelf, each by half of ``ild_max_db * sin|azimuth|``.
    """
    _require_mono(buf)
    gain_db = ild_shelf_db(azimuth_deg, ear, ild_max_db)
    return AudioBuffer.mono(shelf_array(buf.data, gain_db, shelf_fc_hz, buf.sample_rate_hz, shelf_slope), buf.sample_rate_hz)


def distance_gain(distance_m: float) -> float:
    """Inverse-distance gain referenced to 1 m, distance clamped at 0.25 m."""
    if not distance_m > 0:
        raise NonpositiveDistance(f"distance must be > 0, got {distance_m}")
    return 1.0 / max(distance_m, 0.25)


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fft_convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full linear convolution by FFT overlap-add."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    n, m = len(x), len(h)
    if n == 0 or m == 0:
        return np.zeros(0)
    if n < m:
        x, h, n, m = h, x, m, n
    out_len = n + m - 1
    nfft = max(64, _next_pow2(2 * m))
    if nfft >= out_len:
        nfft = _next_pow2(out_len)
        return np.fft.irfft(np.fft.rfft(x, nfft) * np.fft.rfft(h, nfft), nfft)[:out_len]
    hop = nfft - m + 1
    spec_h = np.fft.rfft(h, nfft)
    y = np.zeros(out_len + nfft)
    for start in range(0, n, hop):
        block = np.fft.irfft(np.fft.rfft(x[start : start + hop], nfft) * spec_h, nfft)
        y[start : start + nfft] += block
    return y[:out_len]


def convolve(buf: AudioBuffer, ir: AudioBuffer) -> AudioBuffer:
    _require_mono(buf)
    _require_mono(ir, "ir")
    if buf.sample_rate_hz != ir.sample_rate_hz:
        raise SampleRateMismatch(f"input at {buf.sample_rate_hz} Hz, ir at {ir.sample_rate_hz} Hz")
    return AudioBuffer.mono(fft_convolve(buf.data, ir.data), buf.sample_rate_hz)


def comb_gain(delay_s: float, rt60_s: float) -> float:
    """Feedback gain giving a 60 dB decay over ``rt60_s`` for a loop of ``delay_s``."""
    return 10.0 ** (-3.0 * delay_s / rt60_s)


def schroeder_array(x: np.ndarray, rt60_s: float, predelay_ms: float, rate: int) -> np.ndarray:
    if not 0.05 < rt60_s <= 20.0:
        raise Rt60OutOfRange(f"rt60_s {rt60_s} outside (0.05, 20]")
    if predelay_ms < 0:
        raise ValueError(f"negative predelay {predelay_ms}")
    out_len = len(x) + math.ceil(rt60_s * rate)
    pre = int(round(predelay_ms * rate / 1000.0))
    drive = np.zeros(out_len)
    if pre < out_len:
        drive[pre : pre + len(x)] = x[: out_len - pre]

    wet = np.zeros(out_len)
    for ms in COMB_DELAYS_MS:
        d = int(round(ms * rate / 1000.0))
        g = comb_gain(d / rate, rt60_s)
        b = np.zeros(d + 1)
        b[d] = 1.0
        a = np.zeros(d + 1)
        a[0], a[d] = 1.0, -g
        wet += signal.lfilter(b, a, drive)
    wet /= len(COMB_DELAYS_MS)

    for ms in ALLPASS_DELAYS_MS:
        d = int(round(ms * rate / 1000.0))
        b = np.zeros(d + 1)
        b[0], b[d] = -ALLPASS_GAIN, 1.0
        a = np.zeros(d + 1)
        a[0], a[d] = 1.0, -ALLPASS_GAIN
        wet = signal.lfilter(b, a, wet)
    return wet


def schroeder_reverb(buf: AudioBuffer, rt60_s: float, predelay_ms: float = 0.0, rate: int | None = None) -> AudioBuffer:
    """Four parallel feedback combs into two series allpasses.

    Output length is ``len(input) + ceil(rt60_s * rate)`` so the tail is kept.
    """
    _require_mono(buf)
    rate = buf.sample_rate_hz if rate is None else rate
    if rate != buf.sample_rate_hz:
        raise SampleRateMismatch(f"rate {rate} does not match buffer rate {buf.sample_rate_hz}")
    return AudioBuffer.mono(schroeder_array(buf.data, rt60_s, predelay_ms, rate), rate)
