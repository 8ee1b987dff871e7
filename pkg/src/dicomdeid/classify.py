"""Header element classification and sensitive-value harvesting.

Runs per patient in two passes: first every file contributes its
sensible-tag values to the patient's store, then each element is
classified by a fixed precedence of rules. The store is also what the
pixel-text matcher and the post-run audit hunt for.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import tags as T
from .config import Config
from .dataset import DataElement, Dataset
from .errors import EmptySeeds
from .fuzzy import match_sensible, normalize
from .parser import parse_file
from .tags import Tag, vr_of
from .vr import TEXT_SCAN_VRS

# Categories in precedence order (first match wins).
IDENTITY = "Identity"
DATETIME = "DateTime"
UID = "Uid"
SENSIBLE_MATCH = "SensibleMatch"
INSTITUTION = "Institution"
GEOGRAPHIC = "Geographic"
PERSON_CONTEXT = "PersonContext"
PRIVATE = "Private"
CLEAN = "Clean"

# Tokens keep ^ . - when they join word characters, so person-name
# carets, UID dots, and hyphenated names survive as single tokens.
_TOKEN_RE = re.compile(r"[^\W_]+(?:[.^\-][^\W_]+)*", re.UNICODE)

_PHONE_MIN_DIGITS = 5


@dataclass
class Classification:
    tag: Tag
    path: str
    category: str
    vr: str = ""
    evidence: str = ""
    score: int | None = None
    value_excerpt: str = ""

    def to_json(self) -> dict:
        out = {
            "tagPath": self.path,
            "category": self.category,
            "evidence": self.evidence,
            "excerpt": self.value_excerpt,
        }
        if self.score is not None:
            out["score"] = self.score
        return out


class SensibleValueStore:
    """Normalized sensitive strings per patient, with their source tags."""

    def __init__(self):
        self._patients: dict[str, dict[str, Tag]] = {}

    def add(self, patient: str, value: str, source: Tag) -> None:
        self._patients.setdefault(patient, {}).setdefault(value, source)

    def add_contribution(self, patient: str, contribution: list[tuple[str, Tag]]) -> None:
        for value, source in contribution:
            self.add(patient, value, source)

    def values(self, patient: str) -> dict[str, Tag]:
        return self._patients.get(patient, {})

    def all_values(self) -> dict[str, Tag]:
        merged: dict[str, Tag] = {}
        for values in self._patients.values():
            for v, t in values.items():
                merged.setdefault(v, t)
        return merged

    def patients(self) -> list[str]:
        return sorted(self._patients)

    def merge(self, other: "SensibleValueStore") -> None:
        for patient, values in other._patients.items():
            for v, t in values.items():
                self.add(patient, v, t)

    def is_empty(self) -> bool:
        return not any(self._patients.values())

    def to_json(self) -> str:
        doc = {
            patient: {value: str(tag) for value, tag in sorted(values.items())}
            for patient, values in sorted(self._patients.items())
        }
        return json.dumps({"patients": doc}, indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "SensibleValueStore":
        store = cls()
        doc = json.loads(text)
        for patient, values in doc.get("patients", {}).items():
            for value, tag_text in values.items():
                store.add(patient, value, Tag.parse(tag_text))
        return store


def harvest_sensible_values(
    ds: Dataset, sensible_tags: list[Tag], exclude: set[str] | None = None
) -> list[tuple[str, Tag]]:
    """Extract and normalize the values of every present sensible tag.

    Person names contribute the whole value, each caret component, the
    components joined with spaces, and individual word tokens, so a name
    can be found no matter how it was re-assembled elsewhere.
    """
    wanted = set(sensible_tags)
    exclude = exclude or set()
    contribution: list[tuple[str, Tag]] = []

    def keep(value: str, source: Tag) -> None:
        v = normalize(value)
        if len(v) >= 2 and v not in exclude:
            contribution.append((v, source))

    for _, el, _ in ds.walk():
        if el.tag not in wanted or el.is_sequence():
            continue
        text = element_text(el)
        if not text.strip():
            continue
        for value in text.split("\\"):
            if not value.strip():
                continue
            keep(value, el.tag)
            if el.vr == "PN":
                components = [c for c in value.split("^") if c.strip()]
                for comp in components:
                    keep(comp, el.tag)
                    for token in comp.split():
                        keep(token, el.tag)
                if len(components) > 1:
                    keep(" ".join(components), el.tag)
    return contribution


def element_text(el: DataElement) -> str:
    """Searchable text of an element; empty when it has none."""
    if el.is_sequence():
        return ""
    if el.vr in TEXT_SCAN_VRS:
        return el.text
    if el.vr == "UN" or (el.vr == "OB" and el.tag.is_private()):
        text = el.text
        if text and all(c.isprintable() or c in "\t\r\n" for c in text):
            return text
        return ""
    return ""


def fold(text: str) -> str:
    """Case folding for keyword matching: lowercase, diacritics preserved.

    lower() leaves one-to-many mappings alone, so "STRASSE" does not
    collapse into "straße"; users list such variants explicitly.
    """
    return " ".join(text.lower().split())


def tokenize(text: str) -> list[tuple[str, int]]:
    """(token, start offset) pairs."""
    return [(m.group(0), m.start()) for m in _TOKEN_RE.finditer(text)]


class Classifier:
    """Precompiled keyword machinery for one configuration."""

    def __init__(self, cfg: Config):
        self.cfg = cfg
        self.sensible = set(cfg.sensible_tags)
        self.institution = self._compile(cfg.institution_keywords)
        self.geographic = self._compile(cfg.geographic_keywords)
        self.preposition = {fold(k) for k in cfg.preposition_keywords if k.strip()}
        self.threshold = cfg.similarity_threshold

    @staticmethod
    def _compile(keywords: list[str]) -> tuple[set[str], set[tuple[str, ...]]]:
        singles: set[str] = set()
        phrases: set[tuple[str, ...]] = set()
        for keyword in keywords:
            parts = tuple(fold(keyword).split())
            if not parts:
                continue
            if len(parts) == 1:
                singles.add(parts[0])
            else:
                phrases.add(parts)
        return singles, phrases

    def classify_element(self, el: DataElement, values: dict[str, Tag], path: str = "") -> Classification:
        path = path or str(el.tag)
        tag = el.tag

        if tag in self.sensible:
            return Classification(tag, path, IDENTITY, el.vr, evidence=f"sensible-tag {tag}")
        if el.vr in ("DA", "DT", "TM"):
            return Classification(tag, path, DATETIME, el.vr, evidence=f"vr {el.vr}")
        if el.vr == "UI":
            return Classification(tag, path, UID, el.vr, evidence="vr UI")

        raw_text = element_text(el)
        if raw_text:
            hits = match_sensible(raw_text, values.keys(), self.threshold)
            if hits:
                value, score = hits[0]
                return Classification(
                    tag, path, SENSIBLE_MATCH, el.vr,
                    evidence=value, score=score, value_excerpt=_excerpt(raw_text),
                )

            raw_tokens = tokenize(raw_text)
            folded = [fold(tok) for tok, _ in raw_tokens]

            hit = self._keyword_hit(folded, self.institution)
            if hit:
                return Classification(tag, path, INSTITUTION, el.vr, evidence=hit, value_excerpt=_excerpt(raw_text))
            hit = self._keyword_hit(folded, self.geographic)
            if hit:
                return Classification(tag, path, GEOGRAPHIC, el.vr, evidence=hit, value_excerpt=_excerpt(raw_text))
            hit = self._person_context_hit(raw_tokens, folded)
            if hit:
                return Classification(tag, path, PERSON_CONTEXT, el.vr, evidence=hit, value_excerpt=_excerpt(raw_text))
            if tag.is_private() and any(c.isalpha() for c in raw_text):
                return Classification(tag, path, PRIVATE, el.vr, evidence="text in private tag", value_excerpt=_excerpt(raw_text))

        return Classification(tag, path, CLEAN, el.vr)

    @staticmethod
    def _keyword_hit(folded: list[str], compiled: tuple[set[str], set[tuple[str, ...]]]) -> str | None:
        singles, phrases = compiled
        for token in folded:
            if token in singles:
                return token
        for phrase in phrases:
            k = len(phrase)
            for i in range(len(folded) - k + 1):
                if tuple(folded[i : i + k]) == phrase:
                    return " ".join(phrase)
        return None

    def _person_context_hit(self, raw_tokens: list[tuple[str, int]], folded: list[str]) -> str | None:
        for i, token in enumerate(folded):
            if token not in self.preposition or i + 1 >= len(folded):
                continue
            nxt_raw = raw_tokens[i + 1][0]
            first_alpha = next((c for c in nxt_raw if c.isalpha()), None)
            if first_alpha is not None and first_alpha.isupper():
                return f"{token} {nxt_raw}"
            digits = _digit_run(folded, i + 1)
            if digits >= _PHONE_MIN_DIGITS:
                return f"{token} <{digits}-digit run>"
        return None

    def classify_dataset(self, ds: Dataset, values: dict[str, Tag]) -> list[Classification]:
        return [self.classify_element(el, values, path) for path, el, _ in ds.walk()]


def _digit_run(folded: list[str], start: int) -> int:
    """Digits in the run of numeric-looking tokens from `start` (separators - . / allowed)."""
    total = 0
    for token in folded[start:]:
        stripped = token.replace("-", "").replace(".", "").replace("/", "")
        if stripped and stripped.isdigit():
            total += len(stripped)
        else:
            break
    return total


def _excerpt(text: str, limit: int = 60) -> str:
    return text if len(text) <= limit else text[: limit - 3] + "..."


# --- keyword mining -------------------------------------------------------

# Source tags treated as person names even when absent from the dictionary.
_PERSON_SOURCES = {Tag(0x0040, 0x0075)}
_ADDRESS_SOURCES = {Tag(0x0010, 0x1040), Tag(0x0008, 0x0081), Tag(0x0038, 0x0400)}


@dataclass
class KeywordCandidate:
    word: str
    category: str  # institution | geographic | preposition
    frequency: int = 0
    primary: bool = False  # seen immediately before a seed at least once
    contexts: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "category": self.category,
            "frequency": self.frequency,
            "primary": self.primary,
            "contexts": self.contexts,
        }


def seed_category(source: Tag) -> str:
    if source in _ADDRESS_SOURCES:
        return "geographic"
    if source in _PERSON_SOURCES or vr_of(source) == "PN":
        return "preposition"
    if vr_of(source) == "ST":
        return "geographic"
    return "institution"


def deep_search(corpus, seeds: SensibleValueStore, exclude: set[str] | None = None) -> list[KeywordCandidate]:
    """Mine the words that precede known sensitive values across a corpus.

    For every aligned occurrence of a seed inside any text element, the
    token immediately before it becomes a primary candidate and the one
    before that a secondary candidate, categorized by the seed's source.
    """
    if seeds.is_empty():
        raise EmptySeeds("no seed values to search for")
    exclude_folded = {normalize(w) for w in (exclude or set())}
    seed_tokens = {
        token
        for values in (seeds.values(p) for p in seeds.patients())
        for v in values
        for token in normalize(v).split()
    }

    found: dict[tuple[str, str], KeywordCandidate] = {}

    def record(word: str, category: str, primary: bool, context: str) -> None:
        if not word or word in exclude_folded or word in seed_tokens:
            return
        cand = found.setdefault((word, category), KeywordCandidate(word, category))
        cand.frequency += 1
        cand.primary = cand.primary or primary
        if len(cand.contexts) < 3 and context not in cand.contexts:
            cand.contexts.append(context)

    for patient, _, _, inst in corpus.iter_instances():
        patient_values = seeds.values(patient) or seeds.all_values()
        if not patient_values:
            continue
        f = parse_file(Path(inst.path).read_bytes(), source_path=str(inst.path))
        for _, el, _ in f.dataset.walk():
            text = element_text(el)
            if not text:
                continue
            norm = normalize(text)
            tokens = tokenize(norm)
            starts = {pos: idx for idx, (_, pos) in enumerate(tokens)}
            for value, source in patient_values.items():
                category = seed_category(source)
                pos = norm.find(value)
                while pos != -1:
                    idx = starts.get(pos)
                    if idx is not None:
                        context = _excerpt(text)
                        if idx >= 1:
                            record(tokens[idx - 1][0], category, True, context)
                        if idx >= 2:
                            record(tokens[idx - 2][0], category, False, context)
                    pos = norm.find(value, pos + 1)

    candidates = sorted(found.values(), key=lambda c: (-c.frequency, c.word))
    return candidates
