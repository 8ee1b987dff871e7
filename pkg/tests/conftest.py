import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dicomdeid.config import default_keyword_lists


def standard_config_doc(**overrides) -> dict:
    """Full run configuration: stock keyword lists, date-tag shifts, age kept."""
    institution, geographic, preposition = default_keyword_lists()
    doc = {
        "keywords": {
            "institution": institution,
            "geographic": geographic,
            "preposition": preposition,
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
        "similarityThreshold": 49,
        "ocr": {"engine": "mock", "modalities": ["DX", "CR", "MG", "OT"]},
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def config_file(tmp_path):
    def make(**overrides) -> Path:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(standard_config_doc(**overrides), ensure_ascii=False))
        return path

    return make
