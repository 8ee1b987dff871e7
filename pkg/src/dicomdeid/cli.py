"""Command line entry point.

Subcommands cover each stage on its own plus the whole pipeline:
sort, train-keywords, classify, deid, scrub, audit, pipeline.
Exit codes: 0 success, 1 fatal configuration or I/O error,
2 completed with skipped files or audit findings.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .audit import audit_pixels, scan_residual
from .classify import SensibleValueStore, deep_search
from .collection import scan_directory, sort_collection
from .config import Config, load_config
from .deid import DeidContext
from .errors import DicomDeidError
from .pipeline import (
    PipelineOptions,
    engine_from_config,
    harvest_corpus,
    run_pipeline,
)

log = logging.getLogger("dicomdeid")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_WITH_SKIPS = 2


def _add_common(p: argparse.ArgumentParser, needs_out: bool = False) -> None:
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--in", dest="in_dir", type=Path, required=True, help="input directory")
    if needs_out:
        p.add_argument("--out", dest="out_dir", type=Path, required=True, help="output directory")
    p.add_argument("--report", type=Path, help="write the machine-readable run report here")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (default 1)")
    p.add_argument("--strict", action="store_true", help="stop at the first per-file error")
    p.add_argument("--dry-run", action="store_true", help="classify and report only, write nothing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicomdeid",
        description="DICOM de-identification: header scrubbing and burned-in text removal",
    )
    parser.add_argument("--version", action="version", version=f"dicomdeid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sort", help="index files into the patient/study/series/instance hierarchy")
    p.add_argument("--in", dest="in_dir", type=Path, required=True)
    p.add_argument("--dump-hierarchy", type=Path, metavar="OUT.json")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("train-keywords", help="mine context words that precede known values")
    p.add_argument("--config", type=Path)
    p.add_argument("--in", dest="in_dir", type=Path, required=True)
    p.add_argument("--seeds", type=Path, help="seed store JSON; defaults to harvesting the corpus")
    p.add_argument("--out", dest="out_path", type=Path, help="candidates JSON (default stdout)")
    p.add_argument("--tsv", action="store_true", help="emit TSV instead of JSON")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("classify", help="classify every element and emit the report")
    _add_common(p)

    p = sub.add_parser("deid", help="de-identify headers")
    _add_common(p, needs_out=True)
    p.add_argument("--uid-map", type=Path, help="persist/reuse the UID map at this path")
    p.add_argument("--store", type=Path, help="write the harvested value store here")

    p = sub.add_parser("scrub", help="redact burned-in text in pixel data only")
    _add_common(p, needs_out=True)

    p = sub.add_parser("pipeline", help="sort, harvest, classify, deid, scrub, report")
    _add_common(p, needs_out=True)
    p.add_argument("--uid-map", type=Path)
    p.add_argument("--store", type=Path)

    p = sub.add_parser("audit", help="scan de-identified output for residual values")
    p.add_argument("--config", type=Path)
    p.add_argument("--original", type=Path, required=True)
    p.add_argument("--deid", dest="deid_dir", type=Path, required=True)
    p.add_argument("--store", type=Path, required=True, help="value store JSON to hunt for")
    p.add_argument("--report", type=Path)
    p.add_argument("--audit-pixels", action="store_true", help="re-run OCR on output pixels")
    p.add_argument("--threads", type=int, default=1)

    return parser


def _load_config_arg(path: Path | None, mode: str = "deid") -> Config:
    if path is None:
        if mode == "deid":
            raise DicomDeidError("--config is required for this command")
        return load_config("{}", mode=mode)
    return load_config(Path(path).read_text(encoding="utf-8"), mode=mode)


def _write_report(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if path is None:
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def cmd_sort(args) -> int:
    hierarchy, skipped = sort_collection(
        scan_directory(args.in_dir), threads=args.threads, root=args.in_dir
    )
    patients, studies, series, instances = hierarchy.counts()
    log.info(
        "sorted %d instances (%d patients, %d studies, %d series), %d skipped",
        instances, patients, studies, series, len(skipped),
    )
    if args.dump_hierarchy:
        payload = {
            "hierarchy": hierarchy.to_dict(),
            "skipped": [{"path": str(p), "reason": r} for p, r in skipped],
            "duplicates": [{"sop": s, "path": str(p)} for s, p in hierarchy.duplicates],
        }
        _write_report(args.dump_hierarchy, payload)
    return EXIT_WITH_SKIPS if skipped else EXIT_OK


def cmd_train_keywords(args) -> int:
    cfg = _load_config_arg(args.config, mode="audit")
    hierarchy, skipped = sort_collection(
        scan_directory(args.in_dir), threads=args.threads, root=args.in_dir
    )
    if args.seeds:
        seeds = SensibleValueStore.from_json(Path(args.seeds).read_text(encoding="utf-8"))
    else:
        seeds = harvest_corpus(hierarchy, cfg, threads=args.threads)
    exclude = set(cfg.institution_keywords) | set(cfg.geographic_keywords) | set(cfg.preposition_keywords)
    candidates = deep_search(hierarchy, seeds, exclude=exclude)
    if args.tsv:
        lines = ["word\tcategory\tfrequency\tprimary"]
        lines += [f"{c.word}\t{c.category}\t{c.frequency}\t{int(c.primary)}" for c in candidates]
        output = "\n".join(lines) + "\n"
    else:
        output = json.dumps([c.to_json() for c in candidates], indent=2, ensure_ascii=False) + "\n"
    if args.out_path:
        Path(args.out_path).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    return EXIT_WITH_SKIPS if skipped else EXIT_OK


def _run(args, do_deid: bool, do_scrub: bool, force_dry: bool = False) -> int:
    cfg = _load_config_arg(args.config)
    options = PipelineOptions(
        do_deid=do_deid,
        do_scrub=do_scrub,
        dry_run=force_dry or getattr(args, "dry_run", False),
        threads=max(1, args.threads),
        strict=args.strict or cfg.strictness == "strict",
        keep_classifications=force_dry,
    )
    ctx = DeidContext.from_config(cfg)
    uid_map_path = getattr(args, "uid_map", None)
    if uid_map_path and Path(uid_map_path).exists():
        ctx.load_uid_map(Path(uid_map_path).read_text(encoding="utf-8"))

    out_dir = getattr(args, "out_dir", None)
    report, store, ctx = run_pipeline(cfg, args.in_dir, out_dir, options, ctx=ctx)

    if not options.dry_run:
        if uid_map_path:
            Path(uid_map_path).parent.mkdir(parents=True, exist_ok=True)
            Path(uid_map_path).write_text(ctx.dump_uid_map() + "\n", encoding="utf-8")
        store_path = getattr(args, "store", None)
        if store_path:
            Path(store_path).parent.mkdir(parents=True, exist_ok=True)
            Path(store_path).write_text(store.to_json() + "\n", encoding="utf-8")

    _write_report(args.report, report.to_json(include_classifications=options.dry_run))
    log.info(
        "%d in, %d out, %d skipped, %d redactions",
        report.files_in, report.files_out, len(report.skipped), report.redactions,
    )
    return EXIT_WITH_SKIPS if report.skipped else EXIT_OK


def cmd_classify(args) -> int:
    return _run(args, do_deid=False, do_scrub=False, force_dry=True)


def cmd_deid(args) -> int:
    return _run(args, do_deid=True, do_scrub=False)


def cmd_scrub(args) -> int:
    return _run(args, do_deid=False, do_scrub=True)


def cmd_pipeline(args) -> int:
    return _run(args, do_deid=True, do_scrub=True)


def cmd_audit(args) -> int:
    cfg = _load_config_arg(args.config, mode="audit")
    store = SensibleValueStore.from_json(Path(args.store).read_text(encoding="utf-8"))
    original, orig_skipped = sort_collection(
        scan_directory(args.original), threads=args.threads, root=args.original
    )
    deid, deid_skipped = sort_collection(
        scan_directory(args.deid_dir), threads=args.threads, root=args.deid_dir
    )
    findings, score = scan_residual(original, deid, store, cfg.similarity_threshold)
    pixel_findings = []
    if args.audit_pixels:
        engine = engine_from_config(cfg)
        try:
            pixel_findings = audit_pixels(deid, store, engine, cfg.similarity_threshold)
        finally:
            engine.close()
    payload = {
        "score": score.to_json(),
        "findings": [f.to_json() for f in findings],
        "pixelFindings": [f.to_json() for f in pixel_findings],
        "skipped": {
            "original": [{"path": str(p), "reason": r} for p, r in orig_skipped],
            "deid": [{"path": str(p), "reason": r} for p, r in deid_skipped],
        },
    }
    _write_report(args.report, payload)
    log.info("audit score %.2f with %d findings", score.score, len(findings) + len(pixel_findings))
    if findings or pixel_findings:
        return EXIT_WITH_SKIPS
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "sort": cmd_sort,
        "train-keywords": cmd_train_keywords,
        "classify": cmd_classify,
        "deid": cmd_deid,
        "scrub": cmd_scrub,
        "pipeline": cmd_pipeline,
        "audit": cmd_audit,
    }
    try:
        return handlers[args.command](args)
    except DicomDeidError as exc:
        log.error("%s", exc)
        return EXIT_FATAL
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
