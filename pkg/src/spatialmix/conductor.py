"""The planning step: prompt + stems (+ templates) -> validated SpatialPlan.

The rule-based backend is the default and is a pure function of its inputs.
An optional remote chat backend can propose the plan instead; anything it
returns that does not parse and validate is discarded in favour of the
rule-based plan, with a ``RemoteFallbackWarning``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import urllib.error
import urllib.request
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

from . import lexicon
from .audio_io import RirBank
from .errors import NoStems, PlanSchemaError, UnknownRir
from .prompt import Description, classify, normalize_query
from .scene import (
    DEFAULT_POSITION,
    DEFAULT_REVERB_SEND,
    DEFAULT_SAMPLE_RATE,
    DEFAULT_WET_GAIN,
    OutputFormat,
    OutputSpec,
    ReverbSpec,
    RirConvolution,
    SourcePlacement,
    SpatialPlan,
    Stem,
    Template,
    assign_by_overlap,
    merge_template,
    select_mode,
    validate_plan,
)
from .templates import FALLBACK_TEMPLATE_ID, TemplateBank, load_bank, retrieve

log = logging.getLogger(__name__)

ENV_ENDPOINT = "STASE_LLM_ENDPOINT"
ENV_MODEL = "STASE_LLM_MODEL"
ENV_TIMEOUT = "STASE_LLM_TIMEOUT_MS"


class RemoteFallbackWarning(UserWarning):
    """The remote backend failed; the rule-based plan was used instead."""


@dataclass(frozen=True)
class RuleBased:
    pass


@dataclass(frozen=True)
class Remote:
    endpoint_url: str
    model_name: str = "default"
    timeout_ms: int = 30000
    temperature: float = field(default=0.0, init=False)
    top_p: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not 100 <= self.timeout_ms <= 120000:
            raise ValueError(f"timeout_ms {self.timeout_ms} outside [100, 120000]")


ConductorBackend = Union[RuleBased, Remote]


def backend_from_env(env: Mapping[str, str] = os.environ) -> ConductorBackend:
    endpoint = env.get(ENV_ENDPOINT, "").strip()
    if not endpoint:
        return RuleBased()
    return Remote(endpoint, env.get(ENV_MODEL, "default"), int(env.get(ENV_TIMEOUT, "30000")))


# ---------------------------------------------------------------- rules

def select_rir(template: Template, mix_notes: str, rir_bank: RirBank) -> str:
    """Template's default environment, unless the mix notes name another one by keyword."""
    if template.default_environment not in rir_bank:
        raise UnknownRir(f"template {template.template_id!r} points at unknown RIR {template.default_environment!r}")
    words = set(lexicon.words(mix_notes))
    best, best_hits = None, 0
    for entry in rir_bank.entries:
        hits = sum(1 for kw in entry.keywords if kw in words)
        if hits > best_hits:
            best, best_hits = entry.rir_id, hits
    return best or template.default_environment


def _normalize_stems(stems) -> list[Stem]:
    out = []
    for s in stems:
        if isinstance(s, Stem):
            stem_id, instrument = s.stem_id, s.instrument
        elif isinstance(s, Mapping):
            stem_id, instrument = s["stem_id"], s.get("instrument") or ""
        elif isinstance(s, str):
            stem_id, instrument = s, ""
        else:
            stem_id, instrument = s[0], (s[1] if len(s) > 1 else "") or ""
        out.append(Stem(stem_id, instrument or lexicon.infer_instrument(stem_id)))
    return out


def _wrap_azimuth(az: float) -> float:
    if -180.0 <= az <= 180.0:
        return az
    return (az + 180.0) % 360.0 - 180.0


def _pick_template(bank: TemplateBank, prompt: str) -> Template:
    ranking = retrieve(bank, normalize_query(prompt))
    if ranking.low_confidence:
        try:
            return bank.get(FALLBACK_TEMPLATE_ID)
        except KeyError:
            pass
    return bank.get(ranking.top[0])


def _rule_based(prompt, stems: list[Stem], bank: TemplateBank, rir_bank, output_format, sample_rate_hz) -> SpatialPlan:
    route = classify(prompt)
    template = _pick_template(bank, prompt if isinstance(route, Description) else route.query)
    mix_notes = prompt.strip()
    base = merge_template(template, stems, output_format=output_format, sample_rate_hz=sample_rate_hz,
                          mix_notes=mix_notes, music_description=prompt.strip())

    if isinstance(route, Description):
        cues = list(route.cues)
        match = assign_by_overlap([c.instrument for c in cues], [s.instrument for s in stems])
        free_stems = [i for i in range(len(stems)) if i not in match.values()]
        for ci, cue in enumerate(cues):
            if ci not in match and not cue.instrument and free_stems:
                match[ci] = free_stems.pop(0)
        cue_for_stem = {si: cues[ci] for ci, si in match.items()}
        # stems without a cue go through the template on their own
        rest = [s for i, s in enumerate(stems) if i not in cue_for_stem]
        rest_plan = {}
        if rest:
            rest_plan = {p.source_id: p for p in merge_template(
                template, rest, output_format=output_format, sample_rate_hz=sample_rate_hz).sources}
        sources = []
        for i, stem in enumerate(stems):
            cue = cue_for_stem.get(i)
            if cue is None:
                sources.append(rest_plan[stem.stem_id])
                continue
            az = _wrap_azimuth(cue.azimuth_deg) if cue.azimuth_deg is not None else DEFAULT_POSITION[0]
            el = max(-90.0, min(90.0, cue.elevation_deg)) if cue.elevation_deg is not None else DEFAULT_POSITION[1]
            dist = cue.distance_m if cue.distance_m is not None and cue.distance_m > 0 else DEFAULT_POSITION[2]
            sources.append(SourcePlacement(stem.stem_id, stem.instrument, az, el, dist,
                                           select_mode(az, el, dist, output_format), DEFAULT_REVERB_SEND))
        base = replace(base, sources=tuple(sources))

    if rir_bank is not None:
        base = replace(base, reverb=ReverbSpec(RirConvolution(select_rir(template, mix_notes, rir_bank)), DEFAULT_WET_GAIN))
    return base


# ---------------------------------------------------------------- remote

def plan_json_schema() -> dict:
    """JSON Schema sent to the remote backend so it can emit a conforming plan."""
    number = {"type": "number"}
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["sources", "reverb", "output", "mix_notes", "music_description"],
        "properties": {
            "sources": {
                "type": "array", "minItems": 1, "maxItems": 16,
                "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["source_id", "instrument", "azimuth_deg", "elevation_deg", "distance_m", "mode", "reverb_send"],
                    "properties": {
                        "source_id": {"type": "string"},
                        "instrument": {"type": "string"},
                        "azimuth_deg": {"type": "number", "minimum": -180, "maximum": 180},
                        "elevation_deg": {"type": "number", "minimum": -90, "maximum": 90},
                        "distance_m": {"type": "number", "exclusiveMinimum": 0},
                        "mode": {"enum": ["Panning", "ItdIld", "Hrtf"]},
                        "reverb_send": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                },
            },
            "reverb": {
                "type": "object", "additionalProperties": False, "required": ["kind", "wet_gain"],
                "properties": {
                    "kind": {"oneOf": [
                        {"type": "object", "additionalProperties": False, "required": ["RirConvolution"],
                         "properties": {"RirConvolution": {"type": "object", "additionalProperties": False,
                                                           "required": ["rir_id"], "properties": {"rir_id": {"type": "string"}}}}},
                        {"type": "object", "additionalProperties": False, "required": ["Algorithmic"],
                         "properties": {"Algorithmic": {"type": "object", "additionalProperties": False,
                                                        "required": ["rt60_s", "predelay_ms"],
                                                        "properties": {"rt60_s": number, "predelay_ms": number}}}},
                    ]},
                    "wet_gain": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
            "output": {
                "type": "object", "additionalProperties": False, "required": ["sample_rate_hz", "format"],
                "properties": {"sample_rate_hz": {"enum": [44100, 48000]}, "format": {"enum": ["Stereo", "Binaural"]}},
            },
            "mix_notes": {"type": "string"},
            "music_description": {"type": "string"},
        },
    }


def remote_request_body(backend: Remote, prompt: str, stems: Sequence[Stem], output_format, sample_rate_hz,
                        rir_ids: Optional[Iterable[str]]) -> dict:
    content = {
        "task": "Return one JSON object: a spatial mix plan for the stems that follows the schema exactly.",
        "prompt": prompt,
        "stems": [{"stem_id": s.stem_id, "instrument": s.instrument} for s in stems],
        "output": {"sample_rate_hz": sample_rate_hz, "format": OutputFormat(output_format).value},
        "rir_ids": sorted(rir_ids) if rir_ids is not None else None,
        "schema": plan_json_schema(),
    }
    return {
        "model": backend.model_name,
        "temperature": backend.temperature,
        "top_p": backend.top_p,
        "stream": False,
        "messages": [{"role": "user", "content": json.dumps(content, ensure_ascii=False)}],
    }


def extract_plan_text(response: dict) -> str:
    if isinstance(response, dict) and "choices" in response:
        return response["choices"][0]["message"]["content"]
    if isinstance(response, dict) and isinstance(response.get("content"), str):
        return response["content"]
    raise PlanSchemaError("response has neither choices[0].message.content nor content")


def _call_remote(backend: Remote, body: dict) -> dict:
    req = urllib.request.Request(
        backend.endpoint_url,
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req, timeout=backend.timeout_ms / 1000.0) as resp:
        return json.loads(resp.read().decode("utf-8"))


def _remote_plan(backend, prompt, stems, output_format, sample_rate_hz, rir_bank) -> SpatialPlan:
    rir_ids = rir_bank.ids() if rir_bank is not None else None
    body = remote_request_body(backend, prompt, stems, output_format, sample_rate_hz, rir_ids)
    response = _call_remote(backend, body)
    plan = SpatialPlan.from_json(extract_plan_text(response))
    report = validate_plan(plan, [s.stem_id for s in stems], rir_ids)
    if not report.ok:
        raise PlanSchemaError(f"remote plan failed validation: {', '.join(report.codes())}")
    return plan


# ---------------------------------------------------------------- entry point

def build_plan(
    prompt: str,
    stems,
    backend: Optional[ConductorBackend] = None,
    bank: Optional[TemplateBank] = None,
    *,
    rir_bank: Optional[RirBank] = None,
    output_format: OutputFormat = OutputFormat.BINAURAL,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
) -> SpatialPlan:
    """Turn a prompt and a stem list into a validated plan.

    ``stems`` items may be ``Stem``, ``(stem_id, instrument)`` tuples, dicts
    with ``stem_id``/``instrument`` or bare stem ids; missing instrument labels
    are inferred from the stem id. With ``rir_bank`` the reverb environment is
    picked by ``select_rir``; otherwise the template default is used.
    """
    stems = _normalize_stems(stems)
    if not stems:
        raise NoStems("at least one stem is required")
    backend = backend or RuleBased()
    bank = bank or load_bank()
    output_format = OutputFormat(output_format)

    if isinstance(backend, Remote):
        try:
            return _remote_plan(backend, prompt, stems, output_format, sample_rate_hz, rir_bank)
        except (OSError, urllib.error.URLError, ValueError, KeyError, IndexError, TypeError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            warnings.warn(f"remote backend failed ({reason}); using rule-based plan", RemoteFallbackWarning, stacklevel=2)
            plan = _rule_based(prompt, stems, bank, rir_bank, output_format, sample_rate_hz)
            return replace(plan, mix_notes=f"{plan.mix_notes}\n[remote backend fallback: {reason}]".strip())

    plan = _rule_based(prompt, stems, bank, rir_bank, output_format, sample_rate_hz)
    report = validate_plan(plan, [s.stem_id for s in stems], rir_bank.ids() if rir_bank is not None else None)
    if not report.ok:
        raise AssertionError(f"rule-based plan failed validation:\n{report}")
    return plan
