from pathlib import Path

import assembler as asm
from corpus import make_instance

from dicomdeid.collection import scan_directory, sort_collection


def _write(tmp_path, name, **kw):
    p = tmp_path / name
    p.write_bytes(make_instance(**kw))
    return p


def test_three_files_one_series(tmp_path):
    paths = [
        _write(tmp_path, f"f{i}.dcm", sop_uid=f"1.9.1.1.1.{i}", instance_number=i)
        for i in range(3)
    ]
    h, skipped = sort_collection(paths)
    assert skipped == []
    assert h.counts() == (1, 1, 1, 3)


def test_empty_input():
    h, skipped = sort_collection([])
    assert h.counts() == (0, 0, 0, 0)
    assert skipped == []


def test_two_by_two_by_two_by_two(tmp_path):
    # Synthetic corpus built by construction: counts are known exactly.
    paths = []
    n = 0
    for p in range(2):
        for st in range(2):
            for se in range(2):
                for i in range(2):
                    paths.append(
                        _write(
                            tmp_path,
                            f"f{n}.dcm",
                            patient_id=f"P{p}",
                            study_uid=f"1.9.{p}.{st}",
                            series_uid=f"1.9.{p}.{st}.{se}",
                            sop_uid=f"1.9.{p}.{st}.{se}.{i}",
                            instance_number=i,
                        )
                    )
                    n += 1
    h, skipped = sort_collection(paths)
    assert skipped == []
    assert h.counts() == (2, 4, 8, 16)


def test_unparseable_files_collected_not_raised(tmp_path):
    good = _write(tmp_path, "good.dcm")
    bad = tmp_path / "bad.dcm"
    bad.write_bytes(b"not dicom at all")
    h, skipped = sort_collection([good, bad])
    assert h.instance_count() == 1
    assert len(skipped) == 1
    assert skipped[0][0] == bad
    assert h.instance_count() + len(skipped) == 2


def test_missing_uids_get_content_hash_sentinel(tmp_path):
    body = asm.ev(0x0008, 0x0060, "CS", "OT") + asm.ev(0x0010, 0x0010, "PN", "A^B")
    p = tmp_path / "bare.dcm"
    p.write_bytes(asm.part10(body))
    h, skipped = sort_collection([p])
    assert skipped == []
    assert list(h.patients) == ["UNKNOWN"]
    study = next(iter(h.patients["UNKNOWN"]))
    assert study.startswith("UNKEYED.")


def test_duplicate_sop_flagged_both_kept(tmp_path):
    a = _write(tmp_path, "a.dcm")
    b = _write(tmp_path, "b.dcm")
    h, skipped = sort_collection([a, b])
    assert h.instance_count() == 2
    assert len(h.duplicates) == 1


def test_resort_of_flattened_list_reproduces(tmp_path):
    paths = [
        _write(tmp_path, f"f{i}.dcm", patient_id=f"P{i%2}", sop_uid=f"1.9.1.1.1.{i}", instance_number=i)
        for i in range(6)
    ]
    h1, _ = sort_collection(paths)
    h2, _ = sort_collection(h1.file_paths())
    assert h1.to_dict() == h2.to_dict()


def test_parallel_matches_serial(tmp_path):
    paths = [
        _write(tmp_path, f"f{i}.dcm", patient_id=f"P{i%3}", sop_uid=f"1.9.1.1.1.{i}", instance_number=i)
        for i in range(9)
    ]
    h1, s1 = sort_collection(paths, threads=1)
    h4, s4 = sort_collection(paths, threads=4)
    assert h1.to_dict() == h4.to_dict()
    assert s1 == s4


def test_non_integer_instance_numbers_tolerated(tmp_path):
    import assembler as asmod
    from corpus import encode_elements

    elements = [
        (0x0008, 0x0018, "UI", "1.9.1.1.1.9"),
        (0x0010, 0x0020, "LO", "P1"),
        (0x0020, 0x000D, "UI", "1.9.1"),
        (0x0020, 0x000E, "UI", "1.9.1.1"),
        (0x0020, 0x0013, "IS", "²"),
    ]
    p = tmp_path / "odd.dcm"
    p.write_bytes(asmod.part10(encode_elements(elements, True)))
    h, skipped = sort_collection([p])
    assert skipped == []
    assert h.instance_count() == 1


def test_scan_directory_recursive(tmp_path):
    (tmp_path / "x" / "y").mkdir(parents=True)
    _write(tmp_path / "x" / "y", "deep.dcm")
    _write(tmp_path, "top.dcm")
    found = scan_directory(tmp_path)
    assert [p.name for p in found] == ["top.dcm", "deep.dcm"]
