"""Sorting files into the patient / study / series / instance hierarchy."""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import tags as T
from .errors import DicomDeidError
from .parser import parse_file

UNKNOWN_PATIENT = "UNKNOWN"


@dataclass
class Instance:
    sop_uid: str
    path: Path
    instance_number: int | None = None


@dataclass
class Hierarchy:
    # patient key -> study uid -> series uid -> instances
    patients: dict[str, dict[str, dict[str, list[Instance]]]] = field(default_factory=dict)
    root: Path | None = None
    duplicates: list[tuple[str, Path]] = field(default_factory=list)

    def insert(self, patient: str, study: str, series: str, instance: Instance) -> None:
        leaf = (
            self.patients.setdefault(patient, {})
            .setdefault(study, {})
            .setdefault(series, [])
        )
        if any(existing.sop_uid == instance.sop_uid for existing in leaf):
            self.duplicates.append((instance.sop_uid, instance.path))
        leaf.append(instance)

    def instance_count(self) -> int:
        return sum(1 for _ in self.iter_instances())

    def counts(self) -> tuple[int, int, int, int]:
        """(patients, studies, series, instances)."""
        studies = sum(len(s) for s in self.patients.values())
        series = sum(len(se) for s in self.patients.values() for se in s.values())
        return len(self.patients), studies, series, self.instance_count()

    def iter_instances(self):
        """(patient, study, series, instance) in deterministic sorted order."""
        for patient in sorted(self.patients):
            for study in sorted(self.patients[patient]):
                for series in sorted(self.patients[patient][study]):
                    for inst in self.patients[patient][study][series]:
                        yield patient, study, series, inst

    def file_paths(self) -> list[Path]:
        return [inst.path for _, _, _, inst in self.iter_instances()]

    def to_dict(self) -> dict:
        return {
            patient: {
                study: {
                    series: [
                        {"sop": i.sop_uid, "path": str(i.path), "instanceNumber": i.instance_number}
                        for i in instances
                    ]
                    for series, instances in series_map.items()
                }
                for study, series_map in studies.items()
            }
            for patient, studies in self.patients.items()
        }


def sort_collection(
    paths: list[Path], threads: int = 1, root: Path | None = None
) -> tuple[Hierarchy, list[tuple[Path, str]]]:
    """Group files by the four hierarchy UIDs; collect per-file failures.

    Files that parse but lack a study/series/SOP UID are grouped under a
    sentinel key derived from the file content hash, never dropped.
    """
    hierarchy = Hierarchy(root=root)
    skipped: list[tuple[Path, str]] = []

    def read_keys(path: Path):
        data = Path(path).read_bytes()
        f = parse_file(data, source_path=str(path))
        ds = f.dataset
        digest = hashlib.sha256(data).hexdigest()[:16]
        patient = ds.first(T.PATIENT_ID) or UNKNOWN_PATIENT
        study = ds.first(T.STUDY_INSTANCE_UID) or f"UNKEYED.{digest}"
        series = ds.first(T.SERIES_INSTANCE_UID) or f"UNKEYED.{digest}"
        sop = ds.first(T.SOP_INSTANCE_UID) or f"UNKEYED.{digest}"
        number = ds.first(T.INSTANCE_NUMBER)
        try:
            inst_no = int(number)
        except ValueError:
            inst_no = None
        return patient, study, series, Instance(sop, Path(path), inst_no)

    results: list[tuple[Path, object]] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [(p, pool.submit(read_keys, p)) for p in paths]
            for path, fut in futures:
                try:
                    results.append((path, fut.result()))
                except (DicomDeidError, OSError) as exc:
                    results.append((path, exc))
    else:
        for path in paths:
            try:
                results.append((path, read_keys(path)))
            except (DicomDeidError, OSError) as exc:
                results.append((path, exc))

    for path, outcome in results:
        if isinstance(outcome, Exception):
            skipped.append((Path(path), f"{type(outcome).__name__}: {outcome}"))
        else:
            patient, study, series, inst = outcome
            hierarchy.insert(patient, study, series, inst)

    for studies in hierarchy.patients.values():
        for series_map in studies.values():
            for instances in series_map.values():
                instances.sort(key=lambda i: (i.instance_number is None, i.instance_number, i.sop_uid))
    return hierarchy, skipped


def scan_directory(root: Path) -> list[Path]:
    """All regular files under root, recursively, in sorted order.

    Detection sidecars (*.ocr.json) are companions of their image, not inputs.
    """
    return sorted(
        p for p in Path(root).rglob("*") if p.is_file() and not p.name.endswith(".ocr.json")
    )
