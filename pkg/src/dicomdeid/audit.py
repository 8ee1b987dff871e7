"""Post-run verification: hunt surviving sensitive values in the output.

The score is recall over (value, file) opportunity pairs: a pair counts
when the normalized store value occurs in the original file's header
text, and counts as removed when the de-identified counterpart no
longer matches it. Values made of digits and punctuation (dates,
numeric IDs) are checked by exact substring; shifted dates would
otherwise fuzzy-match their own former value forever.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

from .classify import SensibleValueStore
from .collection import Hierarchy
from .dataset import Dataset
from .errors import DicomDeidError, MissingCounterpart, UnsupportedPixelFormat
from .fuzzy import normalize, partial_similarity
from .ocr import OcrEngine
from .parser import parse_file
from .scrub import detect_text, rescale_of, to_8bit, window_of
from .pixels import decode_pixel_data
from .vr import STRING_VRS

log = logging.getLogger("dicomdeid")


@dataclass
class AuditFinding:
    file: str
    location: str  # tag path, or "pixel frame=N box=..."
    value_hash: str
    score: int

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "location": self.location,
            "valueHash": self.value_hash,
            "score": self.score,
        }


@dataclass
class AuditScore:
    total_targets: int
    removed: int

    @property
    def score(self) -> float:
        if self.total_targets == 0:
            return 100.0
        return 100.0 * self.removed / self.total_targets

    def to_json(self) -> dict:
        return {
            "totalTargets": self.total_targets,
            "removed": self.removed,
            "score": round(self.score, 4),
        }


def _value_hash(value: str) -> str:
    return hashlib.sha256(value.encode("utf-8")).hexdigest()[:12]


def _audit_texts(ds: Dataset) -> list[tuple[str, str]]:
    """(path, normalized text) for every element with character content."""
    out = []
    for path, el, _ in ds.walk():
        if el.is_sequence():
            continue
        if el.vr in STRING_VRS or el.vr == "UN":
            text = el.text
            if text.strip():
                out.append((path, normalize(text)))
    return out


def _is_numeric_value(value: str) -> bool:
    return not any(c.isalpha() for c in value)


def scan_residual(
    original: Hierarchy,
    deidentified: Hierarchy,
    store: SensibleValueStore,
    threshold: int,
) -> tuple[list[AuditFinding], AuditScore]:
    """Locate each store value in the originals, verify it is gone from the output."""
    if original.root is None or deidentified.root is None:
        raise DicomDeidError("scan_residual needs hierarchies built from directory roots")

    deid_paths = {Path(p).resolve() for p in deidentified.file_paths()}
    findings: list[AuditFinding] = []
    total = 0
    removed = 0

    for patient, _, _, inst in original.iter_instances():
        rel = Path(inst.path).resolve().relative_to(Path(original.root).resolve())
        counterpart = (Path(deidentified.root) / rel).resolve()
        if counterpart not in deid_paths:
            raise MissingCounterpart(str(rel))

        original_texts = _audit_texts(parse_file(Path(inst.path).read_bytes()).dataset)
        deid_texts = _audit_texts(parse_file(counterpart.read_bytes()).dataset)

        values = [v for v in store.values(patient) if len(v) >= 3]
        for value in values:
            if not any(value in text for _, text in original_texts):
                continue
            total += 1
            survived = False
            for path, text in deid_texts:
                if _is_numeric_value(value):
                    hit = value in text
                    score = 100 if hit else 0
                else:
                    score = partial_similarity(value, text)
                    hit = score > threshold
                if hit:
                    findings.append(AuditFinding(str(rel), path, _value_hash(value), score))
                    survived = True
            if not survived:
                removed += 1

    return findings, AuditScore(total, removed)


def audit_pixels(
    deidentified: Hierarchy,
    store: SensibleValueStore,
    engine: OcrEngine,
    threshold: int,
) -> list[AuditFinding]:
    """Re-run detection on output frames; report detections matching the store."""
    from .fuzzy import match_sensible

    findings: list[AuditFinding] = []
    for patient, _, _, inst in deidentified.iter_instances():
        values = store.values(patient) or store.all_values()
        if not values:
            continue
        try:
            f = parse_file(Path(inst.path).read_bytes(), source_path=str(inst.path))
            matrix = decode_pixel_data(f.dataset)
        except (DicomDeidError, UnsupportedPixelFormat):
            continue
        rescale = rescale_of(f.dataset)
        window = window_of(f.dataset)
        for frame in range(matrix.frames):
            img = to_8bit(matrix, rescale, window, frame=frame)
            for det in detect_text(img, engine, Path(inst.path)):
                hits = match_sensible(det.text, values, threshold)
                if hits:
                    value, score = hits[0]
                    findings.append(
                        AuditFinding(
                            str(inst.path),
                            f"pixel frame={frame} box={det.box}",
                            _value_hash(value),
                            score,
                        )
                    )
    return findings
