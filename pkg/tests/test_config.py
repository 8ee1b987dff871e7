import json

import pytest

from dicomdeid.config import (
    ActionSpec,
    TagPattern,
    default_keyword_lists,
    load_config,
    serialize_config,
)
from dicomdeid.errors import InvalidAction, InvalidTag, SchemaError
from dicomdeid.tags import Tag

MINIMAL = {
    "keywords": {
        "institution": ["hospital"],
        "geographic": ["street"],
        "preposition": ["dr"],
    }
}


def test_vr_defaults_when_omitted():
    cfg = load_config(json.dumps(MINIMAL))
    assert cfg.vr_defaults["DA"] == "00010101"
    assert cfg.vr_defaults["TM"] == "000000.000000"
    assert cfg.vr_defaults["DT"] == "00010101010101"
    assert cfg.vr_defaults["PN"] == "Anonymized"
    assert cfg.vr_defaults["DS"] == "0"
    assert cfg.vr_defaults["US"] == "0"


def test_empty_object_fails_with_missing_lists():
    with pytest.raises(SchemaError) as exc:
        load_config("{}")
    msg = str(exc.value)
    assert "keywords.institution" in msg
    assert "keywords.geographic" in msg
    assert "keywords.preposition" in msg


def test_audit_mode_tolerates_missing_keywords():
    cfg = load_config("{}", mode="audit")
    assert cfg.similarity_threshold == 49


def test_sensible_tag_strings_parse():
    doc = dict(MINIMAL, sensibleTags=["0010,0010", "0008,0090"])
    cfg = load_config(json.dumps(doc))
    assert cfg.sensible_tags == [Tag(0x0010, 0x0010), Tag(0x0008, 0x0090)]
    assert str(cfg.sensible_tags[0]) == "0010,0010"


def test_default_sensible_tags_cover_stock_list():
    cfg = load_config(json.dumps(MINIMAL))
    assert Tag(0x0010, 0x0010) in cfg.sensible_tags
    assert Tag(0x0008, 0x0090) in cfg.sensible_tags
    assert len(cfg.sensible_tags) == 10


def test_default_keyword_lists_content():
    institution, geographic, preposition = default_keyword_lists()
    assert "hospital" in institution
    assert "memorial" in institution
    assert "uiversity" in institution and "university" in institution
    assert "follow up" in institution
    assert "straße" in geographic
    assert "via" in geographic
    assert "dr" in preposition
    assert "prof" in preposition


def test_threshold_default_and_range():
    assert load_config(json.dumps(MINIMAL)).similarity_threshold == 49
    with pytest.raises(SchemaError):
        load_config(json.dumps(dict(MINIMAL, similarityThreshold=101)))


def test_invalid_tag_string():
    with pytest.raises(InvalidTag):
        load_config(json.dumps(dict(MINIMAL, sensibleTags=["10,0010"])))


def test_action_vr_legality_checked_at_load():
    with pytest.raises(InvalidAction):
        load_config(json.dumps(dict(MINIMAL, actions={"0010,0010": "shiftDate"})))
    with pytest.raises(InvalidAction):
        load_config(json.dumps(dict(MINIMAL, actions={"0008,0020": "remapUid"})))
    cfg = load_config(json.dumps(dict(MINIMAL, actions={"0008,0020": "shiftDate"})))
    assert cfg.custom_actions["0008,0020"] == ActionSpec("shiftDate")


def test_replace_with_requires_value():
    with pytest.raises(InvalidAction):
        load_config(json.dumps(dict(MINIMAL, actions={"0010,0010": {"action": "replaceWith"}})))
    cfg = load_config(
        json.dumps(dict(MINIMAL, actions={"0010,0010": {"action": "replaceWith", "value": "X"}}))
    )
    assert cfg.custom_actions["0010,0010"].value == "X"


def test_strict_mode_rejects_unknown_keys():
    doc = dict(MINIMAL, strictness="strict", bogus=1)
    with pytest.raises(SchemaError):
        load_config(json.dumps(doc))
    load_config(json.dumps(dict(MINIMAL, bogus=1)))  # lenient tolerates


def test_tag_patterns():
    assert TagPattern("0008,xxxx").matches(Tag(0x0008, 0x9999))
    assert not TagPattern("0008,xxxx").matches(Tag(0x0010, 0x0010))
    assert TagPattern("private").matches(Tag(0x0009, 0x0001))
    assert not TagPattern("private").matches(Tag(0x0008, 0x0001))
    assert TagPattern("0010,0010").matches(Tag(0x0010, 0x0010))
    with pytest.raises(InvalidTag):
        TagPattern("zz,xxxx")
    exact, group, private = TagPattern("0010,0010"), TagPattern("0010,xxxx"), TagPattern("private")
    assert exact.specificity > group.specificity > private.specificity


def test_round_trip_serialize_load():
    doc = dict(
        MINIMAL,
        sensibleTags=["0010,0010"],
        actions={"0008,0020": "shiftDate", "private": "zeroLength"},
        dateShiftDays=-30,
        timeShiftSeconds=120,
        uidRoot="1.2.840.99999",
        similarityThreshold=60,
        ocr={"engine": "fixture", "modalities": ["DX"], "margin": 3},
    )
    cfg = load_config(json.dumps(doc))
    again = load_config(serialize_config(cfg))
    assert again == cfg


def test_uid_root_validation():
    with pytest.raises(SchemaError):
        load_config(json.dumps(dict(MINIMAL, uidRoot="not.a.uid!")))
    with pytest.raises(SchemaError):
        load_config(json.dumps(dict(MINIMAL, uidRoot="1." * 40 + "1")))


def test_sidecar_engine_requires_command():
    with pytest.raises(SchemaError):
        load_config(json.dumps(dict(MINIMAL, ocr={"engine": "sidecar"})))
