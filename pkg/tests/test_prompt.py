import json
import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

import spatialmix
from spatialmix.errors import EmptyPrompt
from spatialmix.prompt import (
    DIRECTION_AZIMUTH,
    DIRECTION_ELEVATION,
    Abstract,
    Description,
    ParsedCue,
    classify,
    normalize_query,
    parse_cues,
)

DATA = Path(spatialmix.__file__).parent / "data"


def load_fixture():
    prompts = (DATA / "prompts_fixture.txt").read_text(encoding="utf-8").splitlines()
    expected = json.loads((DATA / "prompts_fixture.json").read_text(encoding="utf-8"))
    return prompts, expected


def cues_match(got, want):
    if len(got) != len(want):
        return False
    for g, w in zip(got, want):
        gd = g.to_dict()
        for key, value in w.items():
            if isinstance(value, float) or (isinstance(value, int) and key.endswith(("_deg", "_m"))):
                if gd[key] is None or not math.isclose(gd[key], value, abs_tol=1e-9):
                    return False
            elif gd[key] != value:
                return False
    return True


def test_fixture_files_agree():
    prompts, expected = load_fixture()
    assert len(prompts) == len(expected) == 20
    assert [e["prompt"] for e in expected] == prompts


@pytest.mark.parametrize("entry", load_fixture()[1], ids=lambda e: e["prompt"][:40])
def test_fixture_prompt(entry):
    assert cues_match(parse_cues(entry["prompt"]), entry["cues"])


def test_lead_guitar_example():
    route = classify("place the lead guitar at 45° azimuth, 10 m distance")
    assert isinstance(route, Description)
    assert route.cues == (ParsedCue("lead guitar", azimuth_deg=45.0, distance_m=10.0),)


def test_abstract_example():
    assert classify("a grand orchestral arrangement") == Abstract("a grand orchestral arrangement")
    assert classify("Warm, sunset vibes!") == Abstract("warm sunset vibes")
    assert parse_cues("warm sunset vibes") == []


@pytest.mark.parametrize("text", ["", "   ", "\n\t"])
def test_empty_prompt(text):
    with pytest.raises(EmptyPrompt):
        classify(text)


def test_slight_modifier_and_defaults():
    drums, bass = parse_cues("drums behind, bass slightly left")
    assert (drums.instrument, drums.azimuth_deg, drums.direction_word) == ("drums", 180.0, "behind")
    assert (bass.instrument, bass.azimuth_deg, bass.modifier) == ("bass", -30.0, "slight")


def test_degrees_and_meters():
    assert parse_cues("piano at -30 degrees, 3 meters") == [ParsedCue("piano", azimuth_deg=-30.0, distance_m=3.0)]


def test_feet_conversion():
    (cue,) = parse_cues("place the saxophone 12 feet away at 20° azimuth")
    assert cue.distance_m == pytest.approx(12 * 0.3048, abs=1e-12)
    assert cue.azimuth_deg == 20.0


def test_direction_word_without_instrument_is_not_a_cue():
    assert parse_cues("turn left at the corner") == []


def test_radians_not_accepted():
    assert parse_cues("guitar at 0.5 rad") == []


def test_routing_tied_to_parser():
    prompts, _ = load_fixture()
    for p in prompts:
        assert isinstance(classify(p), Abstract) == (parse_cues(p) == [])


def test_normalize_query():
    assert normalize_query("  A Grand,  Orchestral arrangement. ") == "a grand orchestral arrangement"


INSTRUMENTS = ["guitar", "lead guitar", "piano", "drums", "bass", "violin", "cello", "vocals", "synth", "flute"]
DIRECTIONS = list(DIRECTION_AZIMUTH) + list(DIRECTION_ELEVATION)


@given(st.sampled_from(INSTRUMENTS), st.sampled_from(DIRECTIONS), st.booleans())
def test_direction_defaults_exact(instrument, direction, slight):
    text = f"{instrument} {'slightly ' if slight else ''}{direction}"
    (cue,) = parse_cues(text)
    assert cue.instrument == instrument and cue.direction_word == direction
    if direction in DIRECTION_AZIMUTH:
        want = DIRECTION_AZIMUTH[direction] / 3.0 if slight else DIRECTION_AZIMUTH[direction]
        assert cue.azimuth_deg == want
    else:
        want = DIRECTION_ELEVATION[direction] / 3.0 if slight else DIRECTION_ELEVATION[direction]
        assert cue.elevation_deg == want


@given(st.sampled_from(load_fixture()[0]), st.sampled_from(["", " ", "  ", "\t"]))
def test_case_and_whitespace_insensitive(prompt, pad):
    spaced = pad + prompt.replace(" ", " " + pad) + pad
    assert parse_cues(prompt.upper()) == parse_cues(prompt)
    assert parse_cues(spaced) == parse_cues(prompt)
    assert parse_cues(" ".join(spaced.split())) == parse_cues(prompt)


@given(st.text(max_size=80))
def test_parse_never_raises_and_cues_are_finite(text):
    for cue in parse_cues(text):
        assert cue.azimuth_deg is not None or cue.distance_m is not None or cue.direction_word is not None \
            or cue.elevation_deg is not None
        for v in (cue.azimuth_deg, cue.elevation_deg, cue.distance_m):
            assert v is None or math.isfinite(v)
