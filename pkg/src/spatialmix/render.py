"""Apply a SpatialPlan to mono stems and produce a stereo mix plus a trace.

Each source runs through exactly one localization path:

* Panning: constant-power gains x distance gain.
* ItdIld: per-ear fractional delay (Woodworth ITD) and high shelf (ILD) on a
  sqrt(2)/2 base gain, x distance gain.
* Hrtf: convolution with the nearest measured HRIR pair x distance gain. No
  pan, delay or shelf stage runs, so cues are never applied twice.

Reverb is one shared mono bus fed by every source's send and returned equally
to both channels.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import dsp
from .audio_io import HrirBank, RirBank
from .dsp import AudioBuffer, HeadModel
from .errors import EmptyHrirBank, MissingStem, SampleRateMismatch, UnknownRir
from .scene import Algorithmic, LocalizationMode, RirConvolution, SpatialPlan

CENTER_GAIN = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class RenderConfig:
    head: HeadModel = field(default_factory=HeadModel)
    ild_max_db: float = dsp.DEFAULT_ILD_MAX_DB
    shelf_fc_hz: float = dsp.DEFAULT_SHELF_FC_HZ
    shelf_slope: float = dsp.DEFAULT_SHELF_SLOPE
    normalize_peak_dbfs: Optional[float] = -1.0  # None disables normalization
    itd_enabled: bool = True  # test hook: False skips the ITD delay stage
    # reverb_send is taken verbatim from the plan; distance only scales the dry path
    dry_wet_law: str = "independent"

    def __post_init__(self):
        if self.normalize_peak_dbfs is not None and self.normalize_peak_dbfs > 0:
            raise ValueError("normalize_peak_dbfs must be <= 0")
        if self.dry_wet_law != "independent":
            raise ValueError(f"unknown dry_wet_law {self.dry_wet_law!r}")

    @classmethod
    def from_dict(cls, doc: Mapping) -> RenderConfig:
        doc = dict(doc)
        known = {"head_radius_m", "speed_of_sound_mps", "ild_max_db", "shelf_fc_hz", "shelf_slope",
                 "normalize_peak_dbfs", "itd_enabled", "dry_wet_law"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config key(s) {sorted(unknown)}")
        head = HeadModel(doc.pop("head_radius_m", 0.0875), doc.pop("speed_of_sound_mps", 343.0))
        return cls(head=head, **doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        head = d.pop("head")
        return {**head, **d}


@dataclass
class SourceTrace:
    source_id: str
    mode: str
    distance_gain: float
    reverb_send: float
    pan_gains: Optional[tuple[float, float]] = None
    delay_samples: Optional[tuple[float, float]] = None
    shelf_db: Optional[tuple[float, float]] = None
    hrir_index: Optional[int] = None
    rir_id: Optional[str] = None


@dataclass
class RenderTrace:
    sources: list[SourceTrace]
    reverb: dict
    peak_before: float
    peak_after: float
    scale: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _unit_vector(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    az, el = np.radians(azimuth_deg), np.radians(elevation_deg)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el) * np.ones_like(az)], axis=-1)


def select_hrir(azimuth_deg: float, elevation_deg: float, bank: HrirBank):
    """Nearest measurement by great-circle angle; ties go to the lower index."""
    if not bank.entries:
        raise EmptyHrirBank("HRIR bank has no entries")
    pos = bank.positions()
    target = _unit_vector(azimuth_deg, elevation_deg)
    dots = np.clip(_unit_vector(pos[:, 0], pos[:, 1]) @ target, -1.0, 1.0)
    angles = np.arccos(dots)
    best = int(np.flatnonzero(angles <= angles.min() + 1e-12)[0])
    e = bank.entries[best]
    return e.hrir_left, e.hrir_right, e.index


def _pad(x: np.ndarray, n: int) -> np.ndarray:
    if len(x) >= n:
        return x
    return np.concatenate([x, np.zeros(n - len(x))])


def _render_source(src, stem: np.ndarray, rate: int, hrir_bank: Optional[HrirBank], cfg: RenderConfig):
    g = dsp.distance_gain(src.distance_m)
    trace = SourceTrace(src.source_id, src.mode.value, g, src.reverb_send)
    if src.mode is LocalizationMode.PANNING:
        gl, gr = dsp.pan_gains(src.azimuth_deg)
        trace.pan_gains = (gl, gr)
        return stem * (gl * g), stem * (gr * g), trace

    if src.mode is LocalizationMode.ITD_ILD:
        az = src.azimuth_deg
        if abs(az) > 90:
            # analytic model is front-hemisphere only; fold rear angles onto their lateral mirror
            az = math.copysign(180.0 - abs(az), az)
        dl, dr = dsp.itd_seconds(az, cfg.head) if cfg.itd_enabled else (0.0, 0.0)
        dl, dr = dl * rate, dr * rate
        if az > 0:
            ears = ("contralateral", "ipsilateral")
        elif az < 0:
            ears = ("ipsilateral", "contralateral")
        else:
            ears = ("ipsilateral", "ipsilateral")
        shelf = tuple(dsp.ild_shelf_db(az, ear, cfg.ild_max_db) for ear in ears)
        base = stem * CENTER_GAIN
        out = []
        for delay, gain_db in zip((dl, dr), shelf):
            y = dsp.fractional_delay_array(base, delay)
            y = dsp.shelf_array(y, gain_db, cfg.shelf_fc_hz, rate, cfg.shelf_slope)
            out.append(y * g)
        trace.delay_samples = (dl, dr)
        trace.shelf_db = shelf
        return out[0], out[1], trace

    if hrir_bank is None or not hrir_bank.entries:
        raise EmptyHrirBank(f"source {src.source_id!r} uses Hrtf but the HRIR bank is empty")
    if hrir_bank.sample_rate_hz != rate:
        raise SampleRateMismatch(f"HRIR bank at {hrir_bank.sample_rate_hz} Hz, plan at {rate} Hz")
    hl, hr, idx = select_hrir(src.azimuth_deg, src.elevation_deg, hrir_bank)
    trace.hrir_index = idx
    return dsp.fft_convolve(stem, hl.data) * g, dsp.fft_convolve(stem, hr.data) * g, trace


def render(
    plan: SpatialPlan,
    stems: Mapping[str, AudioBuffer],
    hrir_bank: Optional[HrirBank],
    rir_bank: Optional[RirBank],
    cfg: Optional[RenderConfig] = None,
) -> tuple[AudioBuffer, RenderTrace]:
    """Render ``plan`` to a stereo buffer. Identical inputs give bit-identical output."""
    cfg = cfg or RenderConfig()
    rate = plan.output.sample_rate_hz
    for src in plan.sources:
        if src.source_id not in stems:
            raise MissingStem(f"no stem for source {src.source_id!r}")
        buf = stems[src.source_id]
        if buf.channels != 1:
            raise ValueError(f"stem {src.source_id!r} must be mono")
        if buf.sample_rate_hz != rate:
            raise SampleRateMismatch(f"stem {src.source_id!r} at {buf.sample_rate_hz} Hz, plan at {rate} Hz")

    kind = plan.reverb.kind
    rir = None
    if isinstance(kind, RirConvolution):
        if rir_bank is None or kind.rir_id not in rir_bank:
            raise UnknownRir(f"RIR {kind.rir_id!r} not in bank")
        rir = rir_bank.get(kind.rir_id).ir
        if rir.sample_rate_hz != rate:
            raise SampleRateMismatch(f"RIR {kind.rir_id!r} at {rir.sample_rate_hz} Hz, plan at {rate} Hz")

    lefts, rights, traces = [], [], []
    bus = np.zeros(0)
    for src in plan.sources:
        stem = stems[src.source_id].data
        left, right, tr = _render_source(src, stem, rate, hrir_bank, cfg)
        if isinstance(kind, RirConvolution):
            tr.rir_id = kind.rir_id
        lefts.append(left)
        rights.append(right)
        traces.append(tr)
        if src.reverb_send > 0:
            n = max(len(bus), len(stem))
            bus = _pad(bus, n) + _pad(stem * src.reverb_send, n)

    wet = np.zeros(0)
    if plan.reverb.wet_gain > 0 and len(bus):
        if rir is not None:
            wet = dsp.fft_convolve(bus, rir.data)
        else:
            wet = dsp.schroeder_array(bus, kind.rt60_s, kind.predelay_ms, rate)
        wet = wet * plan.reverb.wet_gain

    n = max([len(x) for x in lefts + rights] + [len(wet)])
    left = np.zeros(n)
    right = np.zeros(n)
    for l_ch, r_ch in zip(lefts, rights):
        left[: len(l_ch)] += l_ch
        right[: len(r_ch)] += r_ch
    left[: len(wet)] += wet
    right[: len(wet)] += wet

    peak = float(max(np.max(np.abs(left), initial=0.0), np.max(np.abs(right), initial=0.0)))
    scale = 1.0
    if cfg.normalize_peak_dbfs is not None:
        target = 10.0 ** (cfg.normalize_peak_dbfs / 20.0)
        if peak > target:
            scale = target / peak
            left *= scale
            right *= scale
    reverb_info = {"kind": "RirConvolution", "rir_id": kind.rir_id} if isinstance(kind, RirConvolution) else {
        "kind": "Algorithmic", "rt60_s": kind.rt60_s, "predelay_ms": kind.predelay_ms}
    reverb_info["wet_gain"] = plan.reverb.wet_gain
    trace = RenderTrace(traces, reverb_info, peak, peak * scale, scale)
    return AudioBuffer.stereo(left, right, rate), trace
