"""Plan schema: placements, reverb, output spec, templates, and their validation.

Coordinate convention: azimuth 0 is straight ahead, positive azimuth is the
listener's right, +/-180 is behind. Elevation is positive upward. Distances
are meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence, Union

from . import lexicon
from .errors import PlanSchemaError

MAX_SOURCES = 16
MAX_TEMPLATE_SLOTS = 6
DEFAULT_POSITION = (0.0, 0.0, 2.0)
DEFAULT_REVERB_SEND = 0.25
DEFAULT_WET_GAIN = 0.25
DEFAULT_SAMPLE_RATE = 48000


class LocalizationMode(str, Enum):
    PANNING = "Panning"
    ITD_ILD = "ItdIld"
    HRTF = "Hrtf"


class OutputFormat(str, Enum):
    STEREO = "Stereo"
    BINAURAL = "Binaural"


@dataclass(frozen=True)
class SourcePlacement:
    source_id: str
    instrument: str
    azimuth_deg: float
    elevation_deg: float
    distance_m: float
    mode: LocalizationMode
    reverb_send: float = DEFAULT_REVERB_SEND


@dataclass(frozen=True)
class RirConvolution:
    rir_id: str


@dataclass(frozen=True)
class Algorithmic:
    rt60_s: float
    predelay_ms: float = 0.0


ReverbKind = Union[RirConvolution, Algorithmic]


@dataclass(frozen=True)
class ReverbSpec:
    kind: ReverbKind
    wet_gain: float = DEFAULT_WET_GAIN


@dataclass(frozen=True)
class OutputSpec:
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE
    format: OutputFormat = OutputFormat.BINAURAL


@dataclass(frozen=True)
class SpatialPlan:
    sources: tuple[SourcePlacement, ...]
    reverb: ReverbSpec
    output: OutputSpec = field(default_factory=OutputSpec)
    mix_notes: str = ""
    music_description: str = ""

    def to_dict(self) -> dict:
        return plan_to_dict(self)

    def to_json(self) -> str:
        return json.dumps(plan_to_dict(self), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, doc: Any) -> SpatialPlan:
        return plan_from_dict(doc)

    @classmethod
    def from_json(cls, text: str) -> SpatialPlan:
        return plan_from_dict(_strict_loads(text))


@dataclass(frozen=True)
class TemplateSlot:
    slot_instrument: str
    azimuth_deg: float
    elevation_deg: float
    distance_m: float


@dataclass(frozen=True)
class Template:
    template_id: str
    name: str
    keywords: tuple[str, ...]
    description: str
    slots: tuple[TemplateSlot, ...]
    default_environment: str


# ---------------------------------------------------------------- serialization

def _reject_constant(name):
    raise PlanSchemaError(f"non-finite number {name} not allowed")


def _strict_loads(text: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise PlanSchemaError(f"invalid JSON: {exc}") from exc


def _fields(doc, where: str, required: Sequence[str], optional: Sequence[str] = ()) -> dict:
    if not isinstance(doc, dict):
        raise PlanSchemaError(f"{where}: expected object, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(required) - set(optional))
    if unknown:
        raise PlanSchemaError(f"{where}: unknown field(s) {unknown}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise PlanSchemaError(f"{where}: missing field(s) {missing}")
    return doc


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PlanSchemaError(f"{where}: expected number, got {value!r}")
    return float(value)


def _str(value, where: str) -> str:
    if not isinstance(value, str):
        raise PlanSchemaError(f"{where}: expected string, got {value!r}")
    return value


def _enum(enum_cls, value, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = [m.value for m in enum_cls]
        raise PlanSchemaError(f"{where}: {value!r} not one of {allowed}") from None


def _reverb_kind_to_dict(kind: ReverbKind) -> dict:
    if isinstance(kind, RirConvolution):
        return {"RirConvolution": {"rir_id": kind.rir_id}}
    return {"Algorithmic": {"rt60_s": kind.rt60_s, "predelay_ms": kind.predelay_ms}}


def plan_to_dict(plan: SpatialPlan) -> dict:
    return {
        "sources": [
            {
                "source_id": s.source_id,
                "instrument": s.instrument,
                "azimuth_deg": s.azimuth_deg,
                "elevation_deg": s.elevation_deg,
                "distance_m": s.distance_m,
                "mode": s.mode.value,
                "reverb_send": s.reverb_send,
            }
            for s in plan.sources
        ],
        "reverb": {"kind": _reverb_kind_to_dict(plan.reverb.kind), "wet_gain": plan.reverb.wet_gain},
        "output": {"sample_rate_hz": plan.output.sample_rate_hz, "format": plan.output.format.value},
        "mix_notes": plan.mix_notes,
        "music_description": plan.music_description,
    }


def _reverb_kind_from_dict(doc) -> ReverbKind:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise PlanSchemaError("reverb.kind: expected an object with exactly one of RirConvolution/Algorithmic")
    (tag, body), = doc.items()
    if tag == "RirConvolution":
        _fields(body, "reverb.kind.RirConvolution", ["rir_id"])
        return RirConvolution(_str(body["rir_id"], "rir_id"))
    if tag == "Algorithmic":
        _fields(body, "reverb.kind.Algorithmic", ["rt60_s", "predelay_ms"])
        return Algorithmic(_num(body["rt60_s"], "rt60_s"), _num(body["predelay_ms"], "predelay_ms"))
    raise PlanSchemaError(f"reverb.kind: unknown kind {tag!r}")


def plan_from_dict(doc) -> SpatialPlan:
    """Build a plan from a decoded JSON document. Unknown or missing fields raise."""
    _fields(doc, "plan", ["sources", "reverb", "output", "mix_notes", "music_description"])
    if not isinstance(doc["sources"], list):
        raise PlanSchemaError("sources: expected array")
    sources = []
    for i, s in enumerate(doc["sources"]):
        where = f"sources[{i}]"
        _fields(s, where, ["source_id", "instrument", "azimuth_deg", "elevation_deg", "distance_m", "mode", "reverb_send"])
        sources.append(SourcePlacement(
            source_id=_str(s["source_id"], f"{where}.source_id"),
            instrument=_str(s["instrument"], f"{where}.instrument"),
            azimuth_deg=_num(s["azimuth_deg"], f"{where}.azimuth_deg"),
            elevation_deg=_num(s["elevation_deg"], f"{where}.elevation_deg"),
            distance_m=_num(s["distance_m"], f"{where}.distance_m"),
            mode=_enum(LocalizationMode, s["mode"], f"{where}.mode"),
            reverb_send=_num(s["reverb_send"], f"{where}.reverb_send"),
        ))
    rv = _fields(doc["reverb"], "reverb", ["kind", "wet_gain"])
    out = _fields(doc["output"], "output", ["sample_rate_hz", "format"])
    rate = out["sample_rate_hz"]
    if isinstance(rate, bool) or not isinstance(rate, int):
        raise PlanSchemaError(f"output.sample_rate_hz: expected integer, got {rate!r}")
    return SpatialPlan(
        sources=tuple(sources),
        reverb=ReverbSpec(_reverb_kind_from_dict(rv["kind"]), _num(rv["wet_gain"], "reverb.wet_gain")),
        output=OutputSpec(rate, _enum(OutputFormat, out["format"], "output.format")),
        mix_notes=_str(doc["mix_notes"], "mix_notes"),
        music_description=_str(doc["music_description"], "music_description"),
    )


def template_from_dict(doc, where: str = "template") -> Template:
    _fields(doc, where, ["template_id", "name", "keywords", "description", "slots", "default_environment"])
    if not isinstance(doc["keywords"], list) or not isinstance(doc["slots"], list):
        raise PlanSchemaError(f"{where}: keywords and slots must be arrays")
    slots = []
    for j, s in enumerate(doc["slots"]):
        w = f"{where}.slots[{j}]"
        _fields(s, w, ["slot_instrument", "azimuth_deg", "elevation_deg", "distance_m"])
        slots.append(TemplateSlot(
            _str(s["slot_instrument"], w), _num(s["azimuth_deg"], w), _num(s["elevation_deg"], w), _num(s["distance_m"], w)
        ))
    return Template(
        template_id=_str(doc["template_id"], where),
        name=_str(doc["name"], where),
        keywords=tuple(_str(k, where) for k in doc["keywords"]),
        description=_str(doc["description"], where),
        slots=tuple(slots),
        default_environment=_str(doc["default_environment"], where),
    )


def template_to_dict(t: Template) -> dict:
    return {
        "template_id": t.template_id,
        "name": t.name,
        "keywords": list(t.keywords),
        "description": t.description,
        "slots": [
            {"slot_instrument": s.slot_instrument, "azimuth_deg": s.azimuth_deg,
             "elevation_deg": s.elevation_deg, "distance_m": s.distance_m}
            for s in t.slots
        ],
        "default_environment": t.default_environment,
    }


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __str__(self):
        return "\n".join(f"{v.code} at {v.path}: {v.message}" for v in self.violations)


def _in_range(x: float, lo: float, hi: float) -> bool:
    return math.isfinite(x) and lo <= x <= hi


def coordinate_violations(azimuth_deg, elevation_deg, distance_m, path: str) -> list[Violation]:
    out = []
    if not _in_range(azimuth_deg, -180.0, 180.0):
        out.append(Violation("azimuth_range", f"{path}.azimuth_deg", f"{azimuth_deg} not in [-180, 180]"))
    if not _in_range(elevation_deg, -90.0, 90.0):
        out.append(Violation("elevation_range", f"{path}.elevation_deg", f"{elevation_deg} not in [-90, 90]"))
    if not (math.isfinite(distance_m) and distance_m > 0):
        out.append(Violation("distance_range", f"{path}.distance_m", f"{distance_m} must be > 0"))
    return out


def validate_plan(
    plan: SpatialPlan,
    available_stems: Iterable[str] | None = None,
    rir_bank_ids: Iterable[str] | None = None,
) -> ValidationReport:
    """Check every plan invariant and cross-reference.

    Violations come back as data with stable codes; nothing raises. Passing
    ``None`` for ``available_stems`` or ``rir_bank_ids`` skips that check.
    """
    v: list[Violation] = []
    n = len(plan.sources)
    if not 1 <= n <= MAX_SOURCES:
        v.append(Violation("source_count", "sources", f"{n} sources, expected 1..{MAX_SOURCES}"))

    stems = None if available_stems is None else set(available_stems)
    seen: set[str] = set()
    for i, s in enumerate(plan.sources):
        path = f"sources[{i}]"
        if s.source_id in seen:
            v.append(Violation("duplicate_source_id", f"{path}.source_id", f"{s.source_id!r} repeated"))
        seen.add(s.source_id)
        v.extend(coordinate_violations(s.azimuth_deg, s.elevation_deg, s.distance_m, path))
        if not _in_range(s.reverb_send, 0.0, 1.0):
            v.append(Violation("reverb_send_range", f"{path}.reverb_send", f"{s.reverb_send} not in [0, 1]"))
        if plan.output.format is OutputFormat.STEREO and s.mode is LocalizationMode.HRTF:
            v.append(Violation("mode_format_conflict", f"{path}.mode", "Hrtf source in a Stereo plan"))
        if stems is not None and s.source_id not in stems:
            v.append(Violation("missing_stem", f"{path}.source_id", f"no stem named {s.source_id!r}"))

    kind = plan.reverb.kind
    if isinstance(kind, RirConvolution):
        if rir_bank_ids is not None and kind.rir_id not in set(rir_bank_ids):
            v.append(Violation("unknown_rir", "reverb.kind.rir_id", f"{kind.rir_id!r} not in RIR bank"))
    else:
        if not (math.isfinite(kind.rt60_s) and 0.05 < kind.rt60_s <= 20.0):
            v.append(Violation("rt60_range", "reverb.kind.rt60_s", f"{kind.rt60_s} not in (0.05, 20]"))
        if not (math.isfinite(kind.predelay_ms) and kind.predelay_ms >= 0):
            v.append(Violation("predelay_range", "reverb.kind.predelay_ms", f"{kind.predelay_ms} must be >= 0"))
    if not _in_range(plan.reverb.wet_gain, 0.0, 1.0):
        v.append(Violation("wet_gain_range", "reverb.wet_gain", f"{plan.reverb.wet_gain} not in [0, 1]"))
    if plan.output.sample_rate_hz not in (44100, 48000):
        v.append(Violation("sample_rate", "output.sample_rate_hz", f"{plan.output.sample_rate_hz} not in (44100, 48000)"))
    return ValidationReport(tuple(v))


def template_violations(t: Template) -> list[str]:
    problems = []
    if not 1 <= len(t.slots) <= MAX_TEMPLATE_SLOTS:
        problems.append(f"{len(t.slots)} slots, expected 1..{MAX_TEMPLATE_SLOTS}")
    for j, s in enumerate(t.slots):
        problems.extend(f"{x.path}: {x.message}" for x in
                        coordinate_violations(s.azimuth_deg, s.elevation_deg, s.distance_m, f"slots[{j}]"))
    if any(k != k.lower() for k in t.keywords):
        problems.append("keywords must be lowercase")
    return problems


# ---------------------------------------------------------------- mode rule and template merge

def select_mode(azimuth_deg: float, elevation_deg: float, distance_m: float, output_format: OutputFormat) -> LocalizationMode:
    """Pick the localization mode for one source.

    Stereo output always pans. Binaural output uses measured HRIRs whenever the
    analytic lateral model cannot represent the position (off the horizontal
    plane, or behind the listener), otherwise analytic ITD/ILD.
    """
    del distance_m  # not part of the rule
    if OutputFormat(output_format) is OutputFormat.STEREO:
        return LocalizationMode.PANNING
    if elevation_deg != 0 or abs(azimuth_deg) > 90:
        return LocalizationMode.HRTF
    return LocalizationMode.ITD_ILD


@dataclass(frozen=True)
class Stem:
    stem_id: str
    instrument: str = ""


def assign_by_overlap(labels: Sequence[str], targets: Sequence[str]) -> dict[int, int]:
    """Greedy one-to-one matching of labels to targets by instrument-token overlap.

    Pairs with zero overlap are never matched. Higher overlap wins; ties go to
    the lower target index, then the earlier label. Returns label index ->
    target index.
    """
    label_toks = [lexicon.instrument_tokens(x) for x in labels]
    target_toks = [lexicon.instrument_tokens(x) for x in targets]
    pairs = []
    for li, lt in enumerate(label_toks):
        for ti, tt in enumerate(target_toks):
            score = len(lt & tt)
            if score:
                pairs.append((-score, ti, li))
    pairs.sort()
    used_l: set[int] = set()
    used_t: set[int] = set()
    out = {}
    for _, ti, li in pairs:
        if li in used_l or ti in used_t:
            continue
        out[li] = ti
        used_l.add(li)
        used_t.add(ti)
    return out


def merge_template(
    template: Template,
    stems: Sequence[Stem | tuple[str, str]],
    *,
    output_format: OutputFormat = OutputFormat.BINAURAL,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
    reverb_send: float = DEFAULT_REVERB_SEND,
    wet_gain: float = DEFAULT_WET_GAIN,
    mix_notes: str = "",
    music_description: str = "",
) -> SpatialPlan:
    """Place stems on a template's slots.

    A stem whose instrument shares no token with any free slot lands front
    center at 2 m. Reverb starts from the template's default environment.
    """
    stems = [s if isinstance(s, Stem) else Stem(*s) for s in stems]
    if not stems:
        raise ValueError("merge_template needs at least one stem")
    match = assign_by_overlap([s.instrument for s in stems], [sl.slot_instrument for sl in template.slots])
    sources = []
    for i, stem in enumerate(stems):
        if i in match:
            slot = template.slots[match[i]]
            az, el, dist = slot.azimuth_deg, slot.elevation_deg, slot.distance_m
        else:
            az, el, dist = DEFAULT_POSITION
        sources.append(SourcePlacement(
            source_id=stem.stem_id,
            instrument=stem.instrument,
            azimuth_deg=az,
            elevation_deg=el,
            distance_m=dist,
            mode=select_mode(az, el, dist, output_format),
            reverb_send=reverb_send,
        ))
    return SpatialPlan(
        sources=tuple(sources),
        reverb=ReverbSpec(RirConvolution(template.default_environment), wet_gain),
        output=OutputSpec(sample_rate_hz, OutputFormat(output_format)),
        mix_notes=mix_notes,
        music_description=music_description,
    )
