"""Rule grammar for explicit spatial cues in prompts, and Description/Abstract routing.

A prompt is split into clauses on commas, semicolons, sentence periods and the
word "and". Each clause may contribute an instrument noun phrase, angles
(``<number>`` followed by ``°``/``deg``/``degrees``, optionally tagged
azimuth/elevation), distances (``<number>`` followed by m/meters/ft/feet) and
direction words. A clause with numbers but no instrument continues the cue of
the clause before it.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, replace
from typing import Optional, Union

from . import lexicon
from .errors import EmptyPrompt

FEET_TO_M = 0.3048
SLIGHT_SCALE = 1.0 / 3.0

DIRECTION_AZIMUTH = {"left": -90.0, "right": 90.0, "front": 0.0, "behind": 180.0, "center": 0.0}
DIRECTION_ELEVATION = {"above": 45.0, "below": -45.0}

_DIRECTION_ALIASES = {
    "left": "left", "right": "right", "front": "front", "ahead": "front",
    "behind": "behind", "back": "behind", "rear": "behind",
    "center": "center", "centre": "center", "middle": "center", "centered": "center", "centred": "center",
    "above": "above", "overhead": "above", "below": "below", "beneath": "below", "under": "below",
}
_SLIGHT = {"slightly", "slight", "somewhat"}

_NUM = r"(?<![\w.])(?P<num>[+-]?(?:\d+(?:\.\d+)?|\.\d+))"
_ANGLE_RE = re.compile(_NUM + r"\s*(?:°|º|deg(?:ree)?s?\b)")
_DIST_RE = re.compile(_NUM + r"\s*(?P<unit>m|meters?|metres?|ft|feet|foot)\b")
_CLAUSE_SPLIT = re.compile(r"[,;]|\band\b|\.(?!\d)")
_WORD = re.compile(r"[a-z0-9]+(?:-[a-z]+)*")

_LEAD_IN = {"place", "put", "position", "pan", "move", "set", "have", "add", "with", "the", "a", "an", "my", "our"}
_PHRASE_STOP = {
    "at", "to", "on", "in", "from", "about", "around", "near", "by", "is", "goes", "should", "slightly",
    "slight", "far", "hard", "away", "azimuth", "elevation", "distance", "sitting", "placed", "positioned",
}


@dataclass(frozen=True)
class ParsedCue:
    instrument: str
    azimuth_deg: Optional[float] = None
    elevation_deg: Optional[float] = None
    distance_m: Optional[float] = None
    direction_word: Optional[str] = None
    modifier: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Description:
    cues: tuple[ParsedCue, ...]
    kind = "Description"


@dataclass(frozen=True)
class Abstract:
    query: str
    kind = "Abstract"


PromptRoute = Union[Description, Abstract]


def normalize_query(text: str) -> str:
    """Lowercase, drop punctuation, collapse whitespace."""
    return " ".join(re.sub(r"[^\w\s]", " ", text.lower()).split())


def _prepare(text: str) -> str:
    return " ".join(text.replace("−", "-").lower().split())


def _instrument_phrase(words: list[str]) -> Optional[str]:
    """First run of instrument/modifier words containing at least one instrument noun."""
    i = 0
    while i < len(words):
        if words[i] in lexicon.SYNONYMS or words[i] in lexicon.MODIFIERS:
            j = i
            while j < len(words) and (words[j] in lexicon.SYNONYMS or words[j] in lexicon.MODIFIERS):
                j += 1
            run = words[i:j]
            if any(w in lexicon.SYNONYMS for w in run):
                return " ".join(run)
            i = j
        else:
            i += 1
    return None


def _fallback_phrase(words: list[str]) -> Optional[str]:
    """Unknown instrument: the words after a leading verb/determiner, up to a preposition or number."""
    i = 0
    while i < len(words) and words[i] in _LEAD_IN:
        i += 1
    out = []
    for w in words[i:]:
        if w in _PHRASE_STOP or w in _DIRECTION_ALIASES or w[0].isdigit():
            break
        out.append(w)
    return " ".join(out) or None


def _tag_near(text: str, start: int, end: int, prev_end: int) -> Optional[str]:
    """Classify an angle as azimuth or elevation from the words around it."""
    after = _WORD.findall(text[end:])[:2]
    for w in after:
        if w in ("azimuth", "az"):
            return "azimuth"
        if w in ("elevation", "elev", "up", "high", "down"):
            return "elevation"
    before = _WORD.findall(text[prev_end:start])
    for w in reversed(before):
        if w in ("azimuth", "az"):
            return "azimuth"
        if w in ("elevation", "elev"):
            return "elevation"
    return None


def _parse_clause(clause: str) -> tuple[Optional[str], bool, bool, dict]:
    """Returns (instrument, instrument_is_known, has_explicit_number, fields)."""
    fields: dict = {}
    angles = []
    prev_end = 0
    for m in _ANGLE_RE.finditer(clause):
        value = float(m.group("num"))
        if math.isfinite(value):
            angles.append((value, _tag_near(clause, m.start(), m.end(), prev_end), m.end()))
        prev_end = m.end()
    for value, tag, end in angles:
        following = _WORD.findall(clause[end:])[:1]
        if tag is None:
            tag = "azimuth" if "azimuth_deg" not in fields else "elevation"
        key = f"{tag}_deg"
        if key in fields:
            continue
        if tag == "elevation" and following and following[0] == "down":
            value = -abs(value)
        fields[key] = value

    dist = _DIST_RE.search(clause)
    if dist:
        value = float(dist.group("num"))
        if dist.group("unit") in ("ft", "feet", "foot"):
            value *= FEET_TO_M
        if math.isfinite(value):
            fields["distance_m"] = value

    explicit = bool(fields)
    words = _WORD.findall(clause)
    found = [_DIRECTION_ALIASES[w] for w in words if w in _DIRECTION_ALIASES]
    if found:
        fields["direction_word"] = found[0]
        slight = any(w in _SLIGHT for w in words) or "a bit" in clause or "a little" in clause
        scale = SLIGHT_SCALE if slight else 1.0
        if slight:
            fields["modifier"] = "slight"
        if "azimuth_deg" in fields:
            if "left" in found:
                fields["azimuth_deg"] = -abs(fields["azimuth_deg"])
            elif "right" in found:
                fields["azimuth_deg"] = abs(fields["azimuth_deg"])
        else:
            horizontal = next((d for d in found if d in DIRECTION_AZIMUTH), None)
            if horizontal is not None:
                fields["azimuth_deg"] = DIRECTION_AZIMUTH[horizontal] * scale
        if "elevation_deg" not in fields:
            vertical = next((d for d in found if d in DIRECTION_ELEVATION), None)
            if vertical is not None:
                fields["elevation_deg"] = DIRECTION_ELEVATION[vertical] * scale

    known = _instrument_phrase(words)
    if known is not None:
        return known, True, explicit, fields
    return _fallback_phrase(words), False, explicit, fields


def parse_cues(prompt: str) -> list[ParsedCue]:
    """Extract explicit spatial cues, in prompt order. Unparseable clauses yield nothing."""
    text = _prepare(prompt)
    cues: list[ParsedCue] = []
    pending: Optional[str] = None  # instrument named in the previous clause without any cue
    last_had_cue = False
    for clause in _CLAUSE_SPLIT.split(text):
        clause = clause.strip()
        if not clause:
            continue
        instrument, known, numeric, fields = _parse_clause(clause)
        if instrument is not None and (numeric or (known and "direction_word" in fields)):
            cues.append(ParsedCue(instrument=instrument, **fields))
            pending, last_had_cue = None, True
        elif numeric and instrument is None and pending is not None:
            cues.append(ParsedCue(instrument=pending, **fields))
            pending, last_had_cue = None, True
        elif numeric and instrument is None and last_had_cue:
            prev = cues[-1]
            update = {k: v for k, v in fields.items() if getattr(prev, k) is None}
            cues[-1] = replace(prev, **update)
        elif numeric and instrument is None:
            cues.append(ParsedCue(instrument="", **fields))
            last_had_cue = True
        else:
            if known:
                pending, last_had_cue = instrument, False
            else:
                last_had_cue = False
    return cues


def classify(prompt: str) -> PromptRoute:
    """Route a prompt: Description when any explicit cue parses, else Abstract."""
    if not prompt.strip():
        raise EmptyPrompt("prompt is empty")
    cues = parse_cues(prompt)
    if cues:
        return Description(tuple(cues))
    return Abstract(normalize_query(prompt))
