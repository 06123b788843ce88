"""Instrument vocabulary shared by the parser, template matching and stem labelling."""

import re

# token -> instrument family
SYNONYMS = {
    "drum": "drums", "drums": "drums", "kick": "drums", "snare": "drums", "hihat": "drums",
    "hat": "drums", "tom": "drums", "toms": "drums", "cymbal": "drums", "cymbals": "drums",
    "kit": "drums", "overheads": "drums",
    "percussion": "percussion", "timpani": "percussion", "conga": "percussion", "congas": "percussion",
    "bongo": "percussion", "bongos": "percussion", "tabla": "percussion", "djembe": "percussion",
    "shaker": "percussion", "tambourine": "percussion", "cajon": "percussion",
    "bass": "bass", "bassline": "bass", "contrabass": "bass", "basses": "bass", "sub": "bass",
    "guitar": "guitar", "guitars": "guitar", "gtr": "guitar",
    "piano": "piano", "keys": "piano", "keyboard": "piano", "keyboards": "piano",
    "rhodes": "piano", "wurlitzer": "piano", "epiano": "piano",
    "organ": "organ",
    "violin": "strings", "violins": "strings", "viola": "strings", "violas": "strings",
    "cello": "strings", "cellos": "strings", "fiddle": "strings", "string": "strings",
    "strings": "strings", "harp": "strings",
    "trumpet": "brass", "trumpets": "brass", "trombone": "brass", "trombones": "brass",
    "horn": "brass", "horns": "brass", "tuba": "brass", "cornet": "brass", "flugelhorn": "brass",
    "brass": "brass",
    "flute": "woodwinds", "flutes": "woodwinds", "clarinet": "woodwinds", "clarinets": "woodwinds",
    "oboe": "woodwinds", "oboes": "woodwinds", "bassoon": "woodwinds", "bassoons": "woodwinds",
    "piccolo": "woodwinds", "sax": "woodwinds", "saxophone": "woodwinds", "woodwind": "woodwinds",
    "woodwinds": "woodwinds",
    "vocal": "vocals", "vocals": "vocals", "vox": "vocals", "voice": "vocals", "voices": "vocals",
    "singer": "vocals", "vocalist": "vocals", "soprano": "vocals", "sopranos": "vocals",
    "alto": "vocals", "altos": "vocals", "tenor": "vocals", "tenors": "vocals",
    "baritone": "vocals", "baritones": "vocals", "choir": "vocals",
    "synth": "synth", "synths": "synth", "synthesizer": "synth", "pad": "synth", "pads": "synth",
    "arp": "synth", "sampler": "synth",
    "sitar": "world", "oud": "world", "kora": "world", "koto": "world", "didgeridoo": "world",
    "erhu": "world", "bouzouki": "world", "accordion": "world",
    "turntables": "electronic", "turntable": "electronic", "dj": "electronic", "808": "drums",
}

# descriptors that may precede an instrument noun inside a noun phrase
MODIFIERS = {
    "lead", "rhythm", "backing", "acoustic", "electric", "upright", "grand", "double", "bass",
    "solo", "first", "second", "main", "harmony", "slide", "pedal", "steel", "string",
    "snare", "kick", "hi", "tenor", "alto", "soprano", "baritone", "french", "muted",
}

STOPWORDS = {"the", "a", "an", "of", "and", "with", "my", "our", "stem", "track", "wav", "mix"}

_TOKEN = re.compile(r"[a-z0-9]+")


def words(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def singular(token: str) -> str:
    if token.endswith("s") and token[:-1] in SYNONYMS:
        return token[:-1]
    return token


def instrument_tokens(label: str) -> frozenset[str]:
    """Comparable tokens for an instrument label: each word (singularised) plus its family."""
    out = set()
    for tok in words(label):
        if tok in STOPWORDS:
            continue
        out.add(singular(tok))
        fam = SYNONYMS.get(tok)
        if fam:
            out.add(fam)
    return frozenset(out)


def overlap(a: str, b: str) -> int:
    return len(instrument_tokens(a) & instrument_tokens(b))


def infer_instrument(name: str) -> str:
    """Best-effort instrument label from a stem file name such as ``03_Kick-In``."""
    toks = [t for t in re.split(r"[^a-z]+", name.lower()) if t]
    known = [t for t in toks if t in SYNONYMS]
    if known:
        return " ".join(known)
    return " ".join(toks) or name
