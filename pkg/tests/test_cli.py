import json
import subprocess
import sys
from pathlib import Path

import assembler as asm
from corpus import make_instance, write_corpus

from dicomdeid import parse_file, Tag
from dicomdeid.cli import main


def _corpus(root: Path, n=6) -> list[Path]:
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n):
        p = root / f"sub{i % 2}" / f"img{i}.dcm"
        p.parent.mkdir(exist_ok=True)
        p.write_bytes(
            make_instance(
                patient_id=f"P{i % 2}",
                patient_name=f"WEBER^HANS{i % 2}",
                study_uid=f"1.9.{i % 2}.1",
                series_uid=f"1.9.{i % 2}.1.1",
                sop_uid=f"1.9.{i % 2}.1.1.{i}",
                instance_number=i,
                extra=[(0x0010, 0x21B0, "LT", "Treated at Memorial Hospital")],
            )
        )
        paths.append(p)
    return paths


def test_pipeline_end_to_end(tmp_path, config_file):
    cfg = config_file()
    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    _corpus(in_dir)
    report_path = tmp_path / "report.json"
    code = main(
        [
            "pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir),
            "--report", str(report_path),
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["counts"]["filesIn"] == 6
    assert report["counts"]["filesOut"] == 6
    assert report["counts"]["skipped"] == 0
    assert report["hierarchy"]["patients"] == 2
    out_files = sorted(out_dir.rglob("*.dcm"))
    assert len(out_files) == 6
    f = parse_file(out_files[0].read_bytes())
    assert f.dataset.text(Tag(0x0012, 0x0062)) == "YES"
    assert f.dataset.first(Tag(0x0010, 0x0010)) == "Anonymized"
    assert f.dataset.first(Tag(0x0010, 0x21B0)) == "Anonymized"


def test_pipeline_skips_unsupported_syntax(tmp_path, config_file):
    cfg = config_file()
    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    _corpus(in_dir, n=2)
    jpeg = in_dir / "compressed.dcm"
    jpeg.write_bytes(
        asm.part10(asm.ev(0x0008, 0x0060, "CS", "OT"), transfer_syntax="1.2.840.10008.1.2.4.50")
    )
    report_path = tmp_path / "report.json"
    code = main(
        [
            "pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir),
            "--report", str(report_path),
        ]
    )
    assert code == 2
    report = json.loads(report_path.read_text())
    assert report["counts"]["skipped"] == 1
    assert "compressed.dcm" in report["skipped"][0]["path"]
    assert "UnsupportedTransferSyntax" in report["skipped"][0]["reason"]
    assert not (out_dir / "compressed.dcm").exists()


def test_strict_mode_stops_on_first_error(tmp_path, config_file):
    cfg = config_file()
    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    _corpus(in_dir, n=2)
    (in_dir / "broken.dcm").write_bytes(b"junk that is not dicom")
    code = main(
        ["pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir), "--strict"]
    )
    assert code == 1


def test_dry_run_writes_nothing(tmp_path, config_file):
    cfg = config_file()
    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    paths = _corpus(in_dir, n=2)
    before = {p: p.read_bytes() for p in paths}
    code = main(
        [
            "pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir),
            "--dry-run",
        ]
    )
    assert code == 0
    assert not out_dir.exists() or not list(out_dir.rglob("*"))
    for p, data in before.items():
        assert p.read_bytes() == data


def test_determinism_across_thread_counts(tmp_path, config_file):
    cfg = config_file()
    in_dir = tmp_path / "in"
    write_corpus(in_dir, n_files=24)
    outs = {}
    for threads in (1, 4):
        out_dir = tmp_path / f"out{threads}"
        code = main(
            [
                "pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir),
                "--threads", str(threads),
            ]
        )
        assert code == 0
        outs[threads] = {
            p.relative_to(out_dir): p.read_bytes() for p in sorted(out_dir.rglob("*.dcm"))
        }
    assert outs[1] == outs[4]


def test_classify_dry_report(tmp_path, config_file):
    cfg = config_file()
    in_dir = tmp_path / "in"
    _corpus(in_dir, n=2)
    report_path = tmp_path / "classify.json"
    code = main(
        ["classify", "--config", str(cfg), "--in", str(in_dir), "--report", str(report_path)]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    first = report["files"][0]
    assert first["classifications"]
    categories = {c["category"] for c in first["classifications"]}
    assert "Identity" in categories
    assert "Institution" in categories


def test_deid_uid_map_persisted_and_reused(tmp_path, config_file):
    cfg = config_file()
    in_dir = tmp_path / "in"
    _corpus(in_dir, n=2)
    map_path = tmp_path / "uid-map.json"

    out1 = tmp_path / "out1"
    assert main(["deid", "--config", str(cfg), "--in", str(in_dir), "--out", str(out1),
                 "--uid-map", str(map_path)]) == 0
    first = {p.name: parse_file(p.read_bytes()).dataset.first(Tag(0x0020, 0x000D))
             for p in out1.rglob("*.dcm")}

    out2 = tmp_path / "out2"
    assert main(["deid", "--config", str(cfg), "--in", str(in_dir), "--out", str(out2),
                 "--uid-map", str(map_path)]) == 0
    second = {p.name: parse_file(p.read_bytes()).dataset.first(Tag(0x0020, 0x000D))
              for p in out2.rglob("*.dcm")}
    assert first == second
    doc = json.loads(map_path.read_text())
    assert doc["map"]


def test_sort_dump_hierarchy(tmp_path):
    in_dir = tmp_path / "in"
    _corpus(in_dir, n=4)
    dump = tmp_path / "hier.json"
    assert main(["sort", "--in", str(in_dir), "--dump-hierarchy", str(dump)]) == 0
    doc = json.loads(dump.read_text())
    assert set(doc["hierarchy"]) == {"P0", "P1"}


def test_audit_after_pipeline(tmp_path, config_file):
    cfg = config_file()
    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    _corpus(in_dir)
    store_path = tmp_path / "store.json"
    assert main(["pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir),
                 "--store", str(store_path)]) == 0
    report_path = tmp_path / "audit.json"
    code = main(["audit", "--config", str(cfg), "--original", str(in_dir),
                 "--deid", str(out_dir), "--store", str(store_path),
                 "--report", str(report_path)])
    assert code == 0
    audit = json.loads(report_path.read_text())
    assert audit["score"]["score"] == 100.0
    assert audit["findings"] == []


def test_audit_nonzero_exit_on_findings(tmp_path, config_file):
    cfg = config_file()
    in_dir, out_dir = tmp_path / "in", tmp_path / "out"
    _corpus(in_dir, n=2)
    store_path = tmp_path / "store.json"
    assert main(["pipeline", "--config", str(cfg), "--in", str(in_dir), "--out", str(out_dir),
                 "--store", str(store_path)]) == 0
    # sabotage one output: reinstate a name
    victim = next(out_dir.rglob("*.dcm"))
    f = parse_file(victim.read_bytes())
    f.dataset[Tag(0x0010, 0x21B0)].set_text("call Weber Hans0")
    from dicomdeid.writer import write_file

    victim.write_bytes(write_file(f))
    code = main(["audit", "--config", str(cfg), "--original", str(in_dir),
                 "--deid", str(out_dir), "--store", str(store_path)])
    assert code == 2


def test_train_keywords_cli(tmp_path, config_file):
    # drop "dr"/"by" from the lists; mining should rediscover them
    cfg = config_file(
        keywords={
            "institution": ["hospital"],
            "geographic": ["street"],
            "preposition": ["for", "to", "on", "call", "at", "prof"],
        }
    )
    in_dir = tmp_path / "in"
    in_dir.mkdir()
    for i in range(3):
        (in_dir / f"f{i}.dcm").write_bytes(
            make_instance(
                sop_uid=f"1.9.1.1.1.{i}",
                extra=[(0x0010, 0x21B0, "LT", "Reviewed by Dr Weber")],
            )
        )
    seeds = tmp_path / "seeds.json"
    seeds.write_text(
        json.dumps({"patients": {"PAT001": {"weber": "0008,0090"}}})
    )
    out_path = tmp_path / "candidates.json"
    code = main(["train-keywords", "--config", str(cfg), "--in", str(in_dir),
                 "--seeds", str(seeds), "--out", str(out_path)])
    assert code == 0
    candidates = json.loads(out_path.read_text())
    words = {c["word"]: c for c in candidates}
    assert words["dr"]["frequency"] == 3 and words["dr"]["primary"]
    assert words["by"]["frequency"] == 3 and not words["by"]["primary"]


def test_console_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "dicomdeid.cli", "--version"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "dicomdeid" in result.stdout


def test_missing_config_is_fatal(tmp_path):
    in_dir = tmp_path / "in"
    _corpus(in_dir, n=1)
    code = main(["deid", "--in", str(in_dir), "--out", str(tmp_path / "out")])
    assert code == 1
