"""Spatial configuration templates and lexical tf-idf retrieval over them."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError, PlanSchemaError, SchemaError
from .prompt import normalize_query
from .scene import Template, template_from_dict, template_to_dict, template_violations

LOW_CONFIDENCE = 0.05
FALLBACK_TEMPLATE_ID = "studio_recording"

CANONICAL_TEMPLATE_IDS = (
    "classical_orchestra", "jazz_ensemble", "rock_band", "chamber_music", "electronic_dj",
    "choir_formation", "solo_performance", "world_music", "studio_recording", "outdoor_festival",
)


def shipped_templates_path() -> Path:
    return Path(str(resources.files("spatialmix") / "data" / "templates.json"))


def tokenize(text: str) -> list[str]:
    return normalize_query(text).split()


def template_document(t: Template) -> list[str]:
    tokens = []
    for kw in t.keywords:
        tokens.extend(tokenize(kw))
    tokens.extend(tokenize(t.description))
    return tokens


@dataclass(frozen=True)
class Retrieval:
    ranking: tuple[tuple[str, float], ...]

    @property
    def top(self) -> tuple[str, float]:
        return self.ranking[0]

    @property
    def low_confidence(self) -> bool:
        return not self.ranking or self.ranking[0][1] < LOW_CONFIDENCE

    def __iter__(self):
        return iter(self.ranking)

    def __len__(self):
        return len(self.ranking)

    def __getitem__(self, i):
        return self.ranking[i]


@dataclass(frozen=True)
class TemplateBank:
    """Immutable template collection with a tf-idf index over keywords + description."""

    templates: tuple[Template, ...]
    idf: dict[str, float] = field(repr=False)
    vectors: tuple[dict[str, float], ...] = field(repr=False)

    @classmethod
    def build(cls, templates: Iterable[Template]) -> TemplateBank:
        templates = tuple(templates)
        seen = set()
        for t in templates:
            problems = template_violations(t)
            if problems:
                raise SchemaError(f"template {t.template_id!r}: " + "; ".join(problems))
            if t.template_id in seen:
                raise SchemaError(f"duplicate template_id {t.template_id!r}")
            seen.add(t.template_id)
        docs = [Counter(template_document(t)) for t in templates]
        n = len(docs)
        df = Counter(tok for d in docs for tok in d)
        idf = {tok: n / c for tok, c in df.items()}
        vectors = tuple(_unit({tok: tf * idf[tok] for tok, tf in d.items()}) for d in docs)
        return cls(templates, idf, vectors)

    def ids(self) -> list[str]:
        return [t.template_id for t in self.templates]

    def get(self, template_id: str) -> Template:
        for t in self.templates:
            if t.template_id == template_id:
                return t
        raise KeyError(template_id)

    def __len__(self):
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)


def _unit(vec: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm == 0:
        return {}
    return {k: v / norm for k, v in vec.items()}


def load_bank(path: str | Path | None = None) -> TemplateBank:
    """Load and validate a template bank JSON file (the shipped bank when ``path`` is None)."""
    path = Path(path) if path is not None else shipped_templates_path()
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, list) or not doc:
        raise ParseError(f"{path}: expected a non-empty JSON array of templates")
    templates = []
    for i, entry in enumerate(doc):
        try:
            templates.append(template_from_dict(entry, where=f"templates[{i}]"))
        except PlanSchemaError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    return TemplateBank.build(templates)


def save_bank(templates: Sequence[Template], path: str | Path) -> None:
    Path(path).write_text(json.dumps([template_to_dict(t) for t in templates], indent=2) + "\n", encoding="utf-8")


def retrieve(bank: TemplateBank, query: str, k: int | None = None) -> Retrieval:
    """Rank templates by tf-idf cosine similarity to ``query``.

    Scores are in [0, 1], sorted descending with ties broken by ascending
    template_id. ``k=None`` returns the full ranking.
    """
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(tokenize(query))
    qvec = _unit({tok: tf * bank.idf[tok] for tok, tf in counts.items() if tok in bank.idf})
    scored = []
    for t, dvec in zip(bank.templates, bank.vectors):
        score = sum(w * dvec.get(tok, 0.0) for tok, w in qvec.items())
        scored.append((t.template_id, min(1.0, max(0.0, score))))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return Retrieval(tuple(scored if k is None else scored[:k]))
