import json

import pytest

from corpus import make_instance

from dicomdeid import parse_file, write_file, Tag
from dicomdeid.classify import (
    Classification,
    Classifier,
    SensibleValueStore,
    harvest_sensible_values,
)
from dicomdeid.config import ActionSpec, load_config
from dicomdeid.dataset import DataElement, Dataset
from dicomdeid.deid import (
    DeidContext,
    apply_action,
    deid_dataset,
    deid_file,
    remap_uid,
    resolve_action,
    shift_date,
    shift_datetime,
    shift_time,
)
from dicomdeid.errors import MalformedDate, MalformedTime, UnmappableValue
from dicomdeid.fuzzy import normalize

BASE_DOC = {
    "keywords": {
        "institution": ["clinic", "hospital", "memorial", "follow up"],
        "geographic": ["street", "via"],
        "preposition": ["for", "to", "on", "call", "at", "by", "prof", "dr"],
    },
    "actions": {
        "0008,0020": "shiftDate",
        "0008,0021": "shiftDate",
        "0010,0030": "shiftDate",
        "0010,1010": "keep",
    },
    "dateShiftDays": -21,
    "timeShiftSeconds": 3600,
    "uidRoot": "1.2.840.99999",
}
CFG = load_config(json.dumps(BASE_DOC))


def ctx():
    return DeidContext.from_config(CFG)


# --- shift primitives -------------------------------------------------------


def test_shift_date_leap_day():
    assert shift_date("20200301", -1) == "20200229"


def test_shift_date_zero():
    assert shift_date("20200115", 0) == "20200115"


def test_shift_date_century_rollover():
    assert shift_date("19991231", 1) == "20000101"


def test_shift_date_malformed():
    for bad in ("2020011", "abcdefgh", "20201340", ""):
        with pytest.raises(MalformedDate):
            shift_date(bad, 1)


def test_shift_date_interval_preserved():
    d1, d2 = "19840229", "20200301"
    from datetime import date

    def as_date(s):
        return date(int(s[:4]), int(s[4:6]), int(s[6:8]))

    for days in (-1000, -1, 0, 1, 911):
        s1, s2 = shift_date(d1, days), shift_date(d2, days)
        assert (as_date(s2) - as_date(s1)) == (as_date(d2) - as_date(d1))


def test_shift_time_wraps_midnight():
    assert shift_time("235959", 2) == "000001"


def test_shift_time_fraction_preserved():
    assert shift_time("120000.500000", 0) == "120000.500000"


def test_shift_time_precision_preserved():
    assert shift_time("0830", 3600) == "0930"
    assert shift_time("08", 3600) == "09"


def test_shift_time_negative():
    assert shift_time("000001", -2) == "235959"


def test_shift_time_interval_preserved_mod_24h():
    def seconds_of(t):
        return int(t[0:2]) * 3600 + int(t[2:4]) * 60 + int(t[4:6])

    t1, t2 = "081500", "231045"
    for shift in (-7200, 0, 2, 86399):
        s1, s2 = shift_time(t1, shift), shift_time(t2, shift)
        assert (seconds_of(s2) - seconds_of(s1)) % 86400 == (
            seconds_of(t2) - seconds_of(t1)
        ) % 86400


def test_shift_time_malformed():
    for bad in ("9999", "1", "ab", "123456.1234567", "²3"):
        with pytest.raises(MalformedTime):
            shift_time(bad, 1)


def test_shift_datetime_carry_and_zone():
    assert shift_datetime("20200115230000", 0, 7200) == "20200116010000"
    assert shift_datetime("20200115120000+0100", 1, 0) == "20200116120000+0100"
    assert shift_datetime("20200115", -14, 0) == "20200101"


# --- uid remapping ----------------------------------------------------------


def test_remap_uid_deterministic_within_run():
    c = ctx()
    assert remap_uid("1.2.3.4", c) == remap_uid("1.2.3.4", c)


def test_remap_uid_injective():
    c = ctx()
    assert remap_uid("1.2.3.4", c) != remap_uid("1.2.3.5", c)


def test_remap_uid_counter_scheme():
    c = DeidContext(uid_root="1.2.840.99999")
    assert remap_uid("1.2.3.4", c) == "1.2.840.99999.1"
    assert remap_uid("1.2.3.5", c) == "1.2.840.99999.2"


def test_remap_uid_generated_uids_are_fixed_points():
    c = ctx()
    new = remap_uid("1.2.3.4", c)
    assert remap_uid(new, c) == new


def test_generated_uids_fit_64_chars():
    # longest permitted root plus a large counter still fits the UI limit
    c = DeidContext(uid_root="1." * 26 + "99", _counter=10**8)
    out = remap_uid("1.2.3", c)
    assert len(out) <= 64
    assert out.startswith(c.uid_root + ".")


def test_uid_map_round_trip():
    c = ctx()
    remap_uid("1.2.3.4", c)
    dumped = c.dump_uid_map()
    c2 = DeidContext(uid_root=CFG.uid_root)
    c2.load_uid_map(dumped)
    assert remap_uid("1.2.3.4", c2) == c.uid_map["1.2.3.4"]
    assert remap_uid("5.5.5", c2) != remap_uid("1.2.3.4", c2)


# --- action resolution ------------------------------------------------------


def test_keep_patient_age_custom():
    c = Classification(Tag(0x0010, 0x1010), "0010,1010", "Identity", "AS")
    assert resolve_action(c, CFG).kind == "keep"


def test_clean_resolves_keep():
    c = Classification(Tag(0x0008, 0x0060), "0008,0060", "Clean", "CS")
    assert resolve_action(c, CFG).kind == "keep"


def test_study_date_resolves_shift():
    c = Classification(Tag(0x0008, 0x0020), "0008,0020", "DateTime", "DA")
    assert resolve_action(c, CFG).kind == "shiftDate"


def test_category_defaults():
    cases = {
        "Identity": "replaceDefault",
        "SensibleMatch": "replaceDefault",
        "Institution": "replaceDefault",
        "Geographic": "replaceDefault",
        "PersonContext": "replaceDefault",
        "Uid": "remapUid",
        "Private": "zeroLength",
        "Clean": "keep",
    }
    for category, expected in cases.items():
        c = Classification(Tag(0x0032, 0x1030), "0032,1030", category, "LO")
        assert resolve_action(c, CFG).kind == expected, category


def test_datetime_default_by_vr():
    da = Classification(Tag(0x0008, 0x0022), "0008,0022", "DateTime", "DA")
    tm = Classification(Tag(0x0008, 0x0032), "0008,0032", "DateTime", "TM")
    dt = Classification(Tag(0x0008, 0x002A), "0008,002A", "DateTime", "DT")
    assert resolve_action(da, CFG).kind == "shiftDate"
    assert resolve_action(tm, CFG).kind == "shiftTime"
    assert resolve_action(dt, CFG).kind == "shiftDate"


def test_pattern_specificity_exact_over_group_over_private():
    doc = dict(
        BASE_DOC,
        actions={
            "0009,1001": "keep",
            "0009,xxxx": "remove",
            "private": "zeroLength",
        },
    )
    cfg = load_config(json.dumps(doc))
    exact = Classification(Tag(0x0009, 0x1001), "0009,1001", "Private", "LO")
    group = Classification(Tag(0x0009, 0x2002), "0009,2002", "Private", "LO")
    other_private = Classification(Tag(0x0011, 0x0001), "0011,0001", "Private", "LO")
    assert resolve_action(exact, cfg).kind == "keep"
    assert resolve_action(group, cfg).kind == "remove"
    assert resolve_action(other_private, cfg).kind == "zeroLength"


# --- action application -----------------------------------------------------


def _el(group, elem, vr, text):
    e = DataElement(Tag(group, elem), vr)
    e.set_text(text)
    return e


def test_replace_default_pn():
    e = _el(0x0010, 0x0010, "PN", "DOE^JOHN")
    apply_action(e, ActionSpec("replaceDefault"), ctx(), CFG)
    assert e.text == "Anonymized"


def test_replace_default_ds_string_zero():
    e = _el(0x0010, 0x1030, "DS", "1.5")
    apply_action(e, ActionSpec("replaceDefault"), ctx(), CFG)
    assert e.text == "0"


def test_replace_default_binary_zero():
    e = DataElement(Tag(0x0028, 0x0010), "US")
    e.set_numbers([512, 512])
    apply_action(e, ActionSpec("replaceDefault"), ctx(), CFG)
    assert e.numbers() == [0, 0]


def test_replace_default_multivalue():
    e = _el(0x0010, 0x1000, "LO", "A111\\B222")
    apply_action(e, ActionSpec("replaceDefault"), ctx(), CFG)
    assert e.values == ["Anonymized", "Anonymized"]


def test_zero_length_keeps_element():
    e = _el(0x0009, 0x1001, "LO", "SECRET")
    out = apply_action(e, ActionSpec("zeroLength"), ctx(), CFG)
    assert out is e and e.raw == b""


def test_remove_returns_marker():
    e = _el(0x0010, 0x21B0, "LT", "history")
    assert apply_action(e, ActionSpec("remove"), ctx(), CFG) is None


def test_replace_with_value():
    e = _el(0x0008, 0x0080, "LO", "Memorial")
    apply_action(e, ActionSpec("replaceWith", "SITE-A"), ctx(), CFG)
    assert e.text == "SITE-A"


def test_remap_action_idempotent_within_run():
    c = ctx()
    e1 = _el(0x0020, 0x000D, "UI", "1.2.3.4")
    e2 = _el(0x0020, 0x000D, "UI", "1.2.3.4")
    apply_action(e1, ActionSpec("remapUid"), c, CFG)
    apply_action(e2, ActionSpec("remapUid"), c, CFG)
    assert e1.text == e2.text


def test_well_known_uids_kept():
    c = ctx()
    e = _el(0x0008, 0x0016, "UI", "1.2.840.10008.5.1.4.1.1.7")
    apply_action(e, ActionSpec("remapUid"), c, CFG)
    assert e.text == "1.2.840.10008.5.1.4.1.1.7"


def test_remap_uid_wildcard_on_non_ui_falls_back():
    doc = dict(BASE_DOC, actions=dict(BASE_DOC["actions"], **{"0010,xxxx": "remapUid"}))
    cfg = load_config(json.dumps(doc))
    e = _el(0x0010, 0x1001, "PN", "OTHER^NAME")
    apply_action(e, ActionSpec("remapUid"), ctx(), cfg)
    assert e.text == "Anonymized"
    strict_cfg = load_config(json.dumps(dict(doc, strictness="strict")))
    e2 = _el(0x0010, 0x1001, "PN", "OTHER^NAME")
    with pytest.raises(UnmappableValue):
        apply_action(e2, ActionSpec("remapUid"), ctx(), strict_cfg)


def test_shift_malformed_lenient_falls_back():
    e = _el(0x0008, 0x0020, "DA", "NOTADATE")
    apply_action(e, ActionSpec("shiftDate"), ctx(), CFG)
    assert e.text == "00010101"


def test_shift_malformed_strict_raises():
    strict_cfg = load_config(json.dumps(dict(BASE_DOC, strictness="strict")))
    e = _el(0x0008, 0x0020, "DA", "NOTADATE")
    with pytest.raises(UnmappableValue):
        apply_action(e, ActionSpec("shiftDate"), ctx(), strict_cfg)


def test_empty_date_left_alone():
    e = DataElement(Tag(0x0008, 0x0020), "DA")
    apply_action(e, ActionSpec("shiftDate"), ctx(), CFG)
    assert e.raw == b""


def test_age_cap_opt_in():
    cap_cfg = load_config(json.dumps(dict(BASE_DOC, capAge90=True)))
    e = _el(0x0010, 0x1010, "AS", "097Y")
    apply_action(e, ActionSpec("keep"), ctx(), cap_cfg)
    assert e.text == "090Y"
    e2 = _el(0x0010, 0x1010, "AS", "042Y")
    apply_action(e2, ActionSpec("keep"), ctx(), cap_cfg)
    assert e2.text == "042Y"


# --- whole dataset ----------------------------------------------------------


def _classified_file(data, cfg=CFG, store=None):
    f = parse_file(data)
    patient = f.dataset.first(Tag(0x0010, 0x0020)) or "UNKNOWN"
    store = store or SensibleValueStore()
    store.add_contribution(
        patient,
        harvest_sensible_values(f.dataset, cfg.sensible_tags, exclude={normalize(v) for v in cfg.vr_defaults.values()}),
    )
    clf = Classifier(cfg)
    classifications = clf.classify_dataset(f.dataset, store.values(patient))
    return f, classifications, patient, store


def test_clean_only_dataset_untouched_except_markers():
    ds = Dataset()
    ds.add(_el(0x0008, 0x0060, "CS", "OT"))
    e = DataElement(Tag(0x0028, 0x0010), "US")
    e.set_numbers([4])
    ds.add(e)
    before = {el.tag: el.raw for el in ds}
    clf = Classifier(CFG)
    _, entries, counters = deid_dataset(ds, clf.classify_dataset(ds, {}), ctx(), CFG)
    for tag, raw in before.items():
        assert ds[tag].raw == raw
    assert ds.text(Tag(0x0012, 0x0062)) == "YES"
    assert "dicomdeid" in ds.text(Tag(0x0012, 0x0063))
    assert entries == []


def test_no_store_value_survives_in_output():
    data = make_instance(
        patient_name="WEBER^HANS",
        patient_id="XK4491",
        referring="ROSSI^MARIA",
        extra=[(0x0010, 0x21B0, "LT", "patient weber hans seen at Memorial")],
    )
    f, classifications, patient, store = _classified_file(data)
    deid_file(f, classifications, ctx(), CFG, patient=patient)
    texts = [el.text.casefold() for _, el, _ in f.dataset.walk() if not el.is_sequence()]
    for value in store.values(patient):
        if len(value) < 3:
            continue
        for text in texts:
            assert value not in text, (value, text)


def test_shared_study_uid_consistent_across_files():
    c = ctx()
    outputs = []
    for i in range(2):
        data = make_instance(sop_uid=f"1.9.1.1.1.{i}", study_uid="1.9.55.1")
        f, classifications, patient, _ = _classified_file(data)
        deid_file(f, classifications, c, CFG, patient=patient)
        outputs.append(f.dataset.first(Tag(0x0020, 0x000D)))
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith("1.2.840.99999.")


def test_meta_media_uid_follows_dataset_sop():
    data = make_instance()
    f, classifications, patient, _ = _classified_file(data)
    deid_file(f, classifications, ctx(), CFG, patient=patient)
    assert f.file_meta.text(Tag(0x0002, 0x0003)) == f.dataset.first(Tag(0x0008, 0x0018))


def test_interval_preservation_across_dataset():
    data = make_instance(study_date="20200301", birth_date="19840229")
    f, classifications, patient, _ = _classified_file(data)
    deid_file(f, classifications, ctx(), CFG, patient=patient)
    from datetime import date

    def as_date(s):
        return date(int(s[:4]), int(s[4:6]), int(s[6:8]))

    study = as_date(f.dataset.first(Tag(0x0008, 0x0020)))
    birth = as_date(f.dataset.first(Tag(0x0010, 0x0030)))
    assert (study - birth).days == (as_date("20200301") - as_date("19840229")).days


def test_pixel_data_untouched_by_header_deid():
    data = make_instance(pixels="mono16")
    f, classifications, patient, _ = _classified_file(data)
    before = f.dataset[Tag(0x7FE0, 0x0010)].raw
    deid_file(f, classifications, ctx(), CFG, patient=patient)
    assert f.dataset[Tag(0x7FE0, 0x0010)].raw == before


def test_idempotence_with_persisted_context():
    data = make_instance(
        extra=[(0x0010, 0x21B0, "LT", "seen at Memorial Hospital by Dr Weber")]
    )
    c = ctx()
    f, classifications, patient, _ = _classified_file(data)
    deid_file(f, classifications, c, CFG, patient=patient)
    first = write_file(f)

    # Second pass over its own output with the same context.
    f2, classifications2, patient2, _ = _classified_file(first)
    deid_file(f2, classifications2, c, CFG, patient=patient2)
    assert write_file(f2) == first


def test_deid_inside_sequences():
    data = make_instance(with_sequence=True)
    f, classifications, patient, _ = _classified_file(data)
    deid_file(f, classifications, ctx(), CFG, patient=patient)
    seq = f.dataset[Tag(0x0008, 0x1110)]
    for item in seq.items:
        uid = item.first(Tag(0x0008, 0x1155))
        assert uid.startswith("1.2.840.99999.")
        assert item.first(Tag(0x0008, 0x1150)) == "1.2.840.10008.3.1.2.3.1"


def test_per_patient_shift_scope():
    doc = dict(BASE_DOC, dateShiftScope="per-patient", shiftSalt="s3cr3t")
    cfg = load_config(json.dumps(doc))
    c = DeidContext.from_config(cfg)
    d1, _ = c.shifts_for("P1")
    d2, _ = c.shifts_for("P2")
    assert c.shifts_for("P1") == c.shifts_for("P1")
    assert (d1, d2) != (cfg.date_shift_days, cfg.date_shift_days) or d1 != d2
