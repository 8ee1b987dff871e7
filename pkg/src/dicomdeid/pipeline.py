"""End-to-end run orchestration shared by the CLI commands.

Three passes over the input: sort into the hierarchy, harvest the
per-patient stores and pre-assign UID mappings in deterministic order,
then process files (classify, apply actions, scrub pixels, write).
Pre-assigning the UID map is what keeps multi-threaded runs
byte-identical to serial ones.
"""

from __future__ import annotations

import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import tags as T
from .classify import Classifier, SensibleValueStore, harvest_sensible_values
from .collection import Hierarchy, scan_directory, sort_collection
from .config import Config, config_digest
from .deid import DeidContext, deid_file, _is_well_known
from .errors import DicomDeidError, EngineUnavailable, UnsupportedPixelFormat
from .fuzzy import normalize
from .ocr import EngineProvider, FixtureEngine, MockEngine, OcrEngine, SidecarEngine
from .parser import parse_file
from .scrub import scrub_pixels
from .writer import write_file

log = logging.getLogger("dicomdeid")


@dataclass
class FileOutcome:
    path: str
    rel_path: str
    patient: str
    categories: dict[str, int] = field(default_factory=dict)
    actions: dict[str, int] = field(default_factory=dict)
    redactions: int = 0
    flags: list[str] = field(default_factory=list)
    classifications: list[dict] = field(default_factory=list)

    def to_json(self, include_classifications: bool = False) -> dict:
        out = {
            "path": self.path,
            "relPath": self.rel_path,
            "patient": self.patient,
            "categories": self.categories,
            "actions": self.actions,
            "redactions": self.redactions,
            "flags": self.flags,
        }
        if include_classifications:
            out["classifications"] = self.classifications
        return out


@dataclass
class RunReport:
    tool: str = f"dicomdeid {__version__}"
    config_digest: str = ""
    duration_seconds: float = 0.0
    files_in: int = 0
    files_out: int = 0
    skipped: list[dict] = field(default_factory=list)
    duplicates: list[dict] = field(default_factory=list)
    hierarchy_counts: tuple[int, int, int, int] = (0, 0, 0, 0)
    action_counts: dict[str, int] = field(default_factory=dict)
    redactions: int = 0
    files: list[FileOutcome] = field(default_factory=list)

    def to_json(self, include_classifications: bool = False) -> dict:
        patients, studies, series, instances = self.hierarchy_counts
        return {
            "tool": self.tool,
            "configDigest": self.config_digest,
            "durationSeconds": round(self.duration_seconds, 3),
            "counts": {
                "filesIn": self.files_in,
                "filesOut": self.files_out,
                "skipped": len(self.skipped),
                "actions": dict(sorted(self.action_counts.items())),
                "redactions": self.redactions,
            },
            "hierarchy": {
                "patients": patients,
                "studies": studies,
                "series": series,
                "instances": instances,
            },
            "skipped": self.skipped,
            "duplicates": self.duplicates,
            "files": [f.to_json(include_classifications) for f in self.files],
        }


def engine_from_config(cfg: Config) -> OcrEngine:
    if cfg.ocr.engine == "fixture":
        return FixtureEngine()
    if cfg.ocr.engine == "sidecar":
        return SidecarEngine(cfg.ocr.command)
    return MockEngine([])


def atomic_write(path: Path, data: bytes) -> None:
    """Write via temp file and rename so a killed run never leaves half a file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".deid-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def harvest_corpus(hierarchy: Hierarchy, cfg: Config, threads: int = 1) -> SensibleValueStore:
    """Pass one: populate the per-patient stores across the whole corpus."""
    store = SensibleValueStore()
    placeholders = {normalize(v) for v in cfg.vr_defaults.values()}
    jobs = list(hierarchy.iter_instances())

    def one(job):
        patient, _, _, inst = job
        f = parse_file(Path(inst.path).read_bytes(), source_path=str(inst.path))
        return patient, harvest_sensible_values(f.dataset, cfg.sensible_tags, exclude=placeholders)

    for patient, contribution in _map_jobs(one, jobs, threads):
        store.add_contribution(patient, contribution)
    return store


def preassign_uids(hierarchy: Hierarchy, ctx: DeidContext, threads: int = 1) -> None:
    """Assign every UID mapping in sorted hierarchy order before parallel work."""
    jobs = list(hierarchy.iter_instances())

    def collect(job):
        _, _, _, inst = job
        f = parse_file(Path(inst.path).read_bytes())
        uids: list[str] = []
        for _, el, _ in f.dataset.walk():
            if el.vr == "UI" and not el.is_sequence():
                uids.extend(v.strip() for v in el.values if v.strip())
        meta_uid = f.file_meta.first(T.MEDIA_SOP_INSTANCE_UID)
        if meta_uid:
            uids.append(meta_uid)
        return uids

    from .deid import remap_uid

    for uids in _map_jobs(collect, jobs, threads):
        for uid in uids:
            if not _is_well_known(uid):
                remap_uid(uid, ctx)


def _map_jobs(fn, jobs, threads):
    """Run fn over jobs, preserving job order in the yielded results."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(fn, jobs)
    else:
        for job in jobs:
            yield fn(job)


@dataclass
class PipelineOptions:
    do_deid: bool = True
    do_scrub: bool = True
    dry_run: bool = False
    threads: int = 1
    strict: bool = False
    keep_classifications: bool = False


def run_pipeline(
    cfg: Config,
    in_dir: Path,
    out_dir: Path | None,
    options: PipelineOptions | None = None,
    *,
    ctx: DeidContext | None = None,
    store: SensibleValueStore | None = None,
    engine: OcrEngine | None = None,
) -> tuple[RunReport, SensibleValueStore, DeidContext]:
    options = options or PipelineOptions()
    started = time.monotonic()
    in_dir = Path(in_dir)

    paths = scan_directory(in_dir)
    hierarchy, skipped = sort_collection(paths, threads=options.threads, root=in_dir)
    if options.strict and skipped:
        path, reason = skipped[0]
        raise DicomDeidError(f"{path}: {reason}")

    if store is None:
        store = harvest_corpus(hierarchy, cfg, threads=options.threads)
    ctx = ctx or DeidContext.from_config(cfg)
    if options.do_deid and not options.dry_run:
        preassign_uids(hierarchy, ctx, threads=options.threads)

    classifier = Classifier(cfg)
    provider = None
    if options.do_scrub:
        if engine is not None:
            provider = EngineProvider.for_engine(engine)
        elif cfg.ocr.engine == "sidecar" and options.threads > 1:
            # one sidecar process per worker; serial engines would bottleneck
            provider = EngineProvider.for_engine(lambda: SidecarEngine(cfg.ocr.command))
        else:
            provider = EngineProvider.for_engine(engine_from_config(cfg))
    ocr_modalities = set(cfg.ocr.modalities)

    report = RunReport(config_digest=config_digest(cfg))
    report.files_in = len(paths)
    report.skipped = [{"path": str(p), "reason": r} for p, r in skipped]
    report.duplicates = [{"sop": sop, "path": str(p)} for sop, p in hierarchy.duplicates]
    report.hierarchy_counts = hierarchy.counts()

    def process(job) -> FileOutcome:
        patient, _, _, inst = job
        path = Path(inst.path)
        rel = path.relative_to(in_dir)
        outcome = FileOutcome(str(path), str(rel), patient)

        f = parse_file(path.read_bytes(), source_path=str(path))
        values = store.values(patient)
        classifications = classifier.classify_dataset(f.dataset, values)
        for c in classifications:
            outcome.categories[c.category] = outcome.categories.get(c.category, 0) + 1
        if options.keep_classifications or options.dry_run:
            outcome.classifications = [c.to_json() for c in classifications]

        if options.dry_run:
            return outcome

        if options.do_deid:
            _, entries, counters = deid_file(f, classifications, ctx, cfg, patient=patient)
            outcome.actions = counters

        if options.do_scrub and T.PIXEL_DATA in f.dataset:
            modality = f.dataset.first(T.MODALITY).upper()
            if modality in ocr_modalities:
                try:
                    _, records = scrub_pixels(
                        f.dataset,
                        values,
                        provider.get(),
                        cfg.similarity_threshold,
                        margin=cfg.ocr.margin,
                        first_frame_only=cfg.ocr.first_frame_only,
                        source_path=path,
                    )
                    outcome.redactions = len(records)
                except UnsupportedPixelFormat as exc:
                    outcome.flags.append(f"pixels-unsupported: {exc}")
                except EngineUnavailable as exc:
                    outcome.flags.append(f"ocr-unavailable: {exc}")
                    if options.strict:
                        raise
            else:
                outcome.flags.append(f"ocr-skipped-modality: {modality or '<none>'}")

        if out_dir is not None:
            atomic_write(Path(out_dir) / rel, write_file(f, strict=options.strict))
        return outcome

    jobs = list(hierarchy.iter_instances())
    outcomes: list[FileOutcome] = []
    errors: list[tuple[str, str]] = []
    try:
        if options.threads > 1:
            with ThreadPoolExecutor(max_workers=options.threads) as pool:
                futures = [(job, pool.submit(process, job)) for job in jobs]
                for job, fut in futures:
                    try:
                        outcomes.append(fut.result())
                    except DicomDeidError as exc:
                        if options.strict:
                            raise
                        errors.append((str(job[3].path), f"{type(exc).__name__}: {exc}"))
        else:
            for job in jobs:
                try:
                    outcomes.append(process(job))
                except DicomDeidError as exc:
                    if options.strict:
                        raise
                    errors.append((str(job[3].path), f"{type(exc).__name__}: {exc}"))
    finally:
        if provider is not None:
            provider.close_all()

    report.skipped.extend({"path": p, "reason": r} for p, r in errors)
    outcomes.sort(key=lambda o: o.path)
    report.files = outcomes
    report.files_out = 0 if (options.dry_run or out_dir is None) else len(outcomes)
    for outcome in outcomes:
        for action, count in outcome.actions.items():
            report.action_counts[action] = report.action_counts.get(action, 0) + count
        report.redactions += outcome.redactions
    report.duration_seconds = time.monotonic() - started
    return report, store, ctx
