"""Run configuration: keyword lists, sensible tags, actions, defaults.

Everything the pipeline needs comes from one JSON document. Keyword
lists must be stated explicitly for de-identification runs; replacement
defaults and the sensible tag list fall back to the stock tables
shipped here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import vr as vrmod
from .errors import InvalidAction, InvalidTag, SchemaError
from .tags import Tag, vr_of

DEFAULT_SIMILARITY_THRESHOLD = 49
DEFAULT_OCR_MODALITIES = ("DX", "CR", "MG")


def default_keyword_lists() -> tuple[list[str], list[str], list[str]]:
    """Stock (institution, geographic, preposition) keyword lists.

    The institution list ships both "uiversity" and the corrected
    "university": the first appears in deployed configurations and is
    kept so existing matches do not regress.
    """
    institution = [
        "clinic",
        "hospital",
        "department",
        "medical",
        "uiversity",
        "university",
        "clinician",
        "hospice",
        "memorial",
        "follow up",
    ]
    geographic = ["street", "road", "route", "avenue", "straße", "allee", "via", "corso"]
    preposition = ["for", "to", "on", "call", "at", "by", "prof", "dr"]
    return institution, geographic, preposition


def default_vr_defaults() -> dict[str, str]:
    """Replacement values per VR used by the replace-with-default action."""
    defaults = {
        "DT": "00010101010101",
        "TM": "000000.000000",
        "DA": "00010101",
    }
    for code in ("LO", "LT", "SH", "PN", "CS", "ST", "UT", "UN", "AE", "AS"):
        defaults[code] = "Anonymized"
    for code in ("FD", "FL", "SS", "US", "SL", "UL", "DS", "IS"):
        defaults[code] = "0"
    return defaults


def default_sensible_tags() -> list[Tag]:
    """Stock list of tags whose values are hunted in other tags and pixels."""
    return [
        Tag(0x0008, 0x0020),  # study date
        Tag(0x0008, 0x0021),  # series date
        Tag(0x0008, 0x0090),  # referring physician
        Tag(0x0008, 0x1048),  # physicians of record
        Tag(0x0008, 0x1050),  # performing physician
        Tag(0x0008, 0x1070),  # operator's name
        Tag(0x0010, 0x0010),  # patient's name
        Tag(0x0010, 0x0020),  # patient id
        Tag(0x0010, 0x0030),  # patient's birth date
        Tag(0x0040, 0x0075),  # verifying observer
    ]


ACTION_KINDS = (
    "replaceDefault",
    "zeroLength",
    "remove",
    "keep",
    "shiftDate",
    "shiftTime",
    "remapUid",
    "replaceWith",
)


@dataclass(frozen=True)
class ActionSpec:
    kind: str
    value: str | None = None  # only for replaceWith

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise InvalidAction(f"unknown action kind {self.kind!r}")
        if self.kind == "replaceWith" and self.value is None:
            raise InvalidAction("replaceWith requires a value")

    def to_json(self):
        if self.kind == "replaceWith":
            return {"action": self.kind, "value": self.value}
        return self.kind

    @classmethod
    def from_json(cls, obj) -> "ActionSpec":
        if isinstance(obj, str):
            return cls(obj)
        if isinstance(obj, dict):
            return cls(obj.get("action", ""), obj.get("value"))
        raise InvalidAction(f"action must be a string or object, got {type(obj).__name__}")


@dataclass(frozen=True)
class TagPattern:
    """Exact tag, group wildcard ("0008,xxxx"), or the "private" class."""

    text: str

    def __post_init__(self):
        t = self.text.lower()
        if t == "private":
            return
        if t.endswith(",xxxx"):
            group = t.split(",")[0]
            if len(group) != 4 or any(c not in "0123456789abcdef" for c in group):
                raise InvalidTag(f"bad group wildcard {self.text!r}")
            return
        Tag.parse(self.text)

    @property
    def specificity(self) -> int:
        # exact > group wildcard > private class
        t = self.text.lower()
        if t == "private":
            return 0
        if t.endswith(",xxxx"):
            return 1
        return 2

    def matches(self, tag: Tag) -> bool:
        t = self.text.lower()
        if t == "private":
            return tag.is_private()
        if t.endswith(",xxxx"):
            return tag.group == int(t.split(",")[0], 16)
        return Tag.parse(self.text) == tag


@dataclass
class OcrConfig:
    engine: str = "mock"  # mock | fixture | sidecar
    command: list[str] = field(default_factory=list)
    modalities: list[str] = field(default_factory=lambda: list(DEFAULT_OCR_MODALITIES))
    margin: int = 2
    first_frame_only: bool = False


@dataclass
class Config:
    institution_keywords: list[str]
    geographic_keywords: list[str]
    preposition_keywords: list[str]
    sensible_tags: list[Tag] = field(default_factory=default_sensible_tags)
    custom_actions: dict[str, ActionSpec] = field(default_factory=dict)
    vr_defaults: dict[str, str] = field(default_factory=default_vr_defaults)
    date_shift_days: int = 0
    time_shift_seconds: int = 0
    date_shift_scope: str = "global"  # global | per-patient
    shift_salt: str = ""
    uid_root: str = "1.2.840.99999"
    similarity_threshold: int = DEFAULT_SIMILARITY_THRESHOLD
    ocr: OcrConfig = field(default_factory=OcrConfig)
    strictness: str = "lenient"
    cap_age_90: bool = False

    def keyword_lists(self) -> tuple[list[str], list[str], list[str]]:
        return self.institution_keywords, self.geographic_keywords, self.preposition_keywords

    def action_patterns(self) -> list[tuple[TagPattern, ActionSpec]]:
        pairs = [(TagPattern(k), v) for k, v in self.custom_actions.items()]
        pairs.sort(key=lambda p: -p[0].specificity)
        return pairs


_TOP_LEVEL_KEYS = {
    "keywords",
    "sensibleTags",
    "actions",
    "vrDefaults",
    "dateShiftDays",
    "timeShiftSeconds",
    "dateShiftScope",
    "shiftSalt",
    "uidRoot",
    "similarityThreshold",
    "ocr",
    "strictness",
    "capAge90",
}


def load_config(json_text: str, mode: str = "deid") -> Config:
    """Parse and validate a configuration document.

    mode "deid" requires the keyword lists; mode "audit" tolerates their
    absence (auditing needs only thresholds and defaults).
    """
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("config root must be an object")

    strictness = _expect(doc, "strictness", str, "lenient")
    if strictness not in ("strict", "lenient"):
        raise SchemaError(f"strictness must be strict|lenient, got {strictness!r}")
    if strictness == "strict":
        unknown = set(doc) - _TOP_LEVEL_KEYS
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")

    keywords = doc.get("keywords")
    missing = []
    lists: dict[str, list[str]] = {}
    for name in ("institution", "geographic", "preposition"):
        values = (keywords or {}).get(name)
        if not values:
            missing.append(f"keywords.{name}")
            lists[name] = []
        else:
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise SchemaError(f"keywords.{name} must be a list of strings")
            lists[name] = [v.strip() for v in values if v.strip()]
    if mode == "deid" and missing:
        raise SchemaError(f"missing keyword lists: {', '.join(missing)}")

    sensible = doc.get("sensibleTags")
    if sensible is None:
        sensible_tags = default_sensible_tags()
    else:
        if not isinstance(sensible, list):
            raise SchemaError("sensibleTags must be a list of GGGG,EEEE strings")
        sensible_tags = [Tag.parse(s) for s in sensible]

    actions_doc = doc.get("actions", {})
    if not isinstance(actions_doc, dict):
        raise SchemaError("actions must be an object keyed by tag pattern")
    custom_actions: dict[str, ActionSpec] = {}
    for pattern_text, action_obj in actions_doc.items():
        pattern = TagPattern(pattern_text)
        action = ActionSpec.from_json(action_obj)
        _validate_action_for_pattern(pattern, action)
        custom_actions[pattern_text] = action

    vr_defaults = default_vr_defaults()
    overrides = doc.get("vrDefaults", {})
    if not isinstance(overrides, dict):
        raise SchemaError("vrDefaults must be an object keyed by VR")
    for code, value in overrides.items():
        if code not in vrmod.KNOWN_VRS:
            raise SchemaError(f"vrDefaults: unknown VR {code!r}")
        if not isinstance(value, str):
            raise SchemaError(f"vrDefaults.{code} must be a string")
        vr_defaults[code] = value

    threshold = _expect(doc, "similarityThreshold", int, DEFAULT_SIMILARITY_THRESHOLD)
    if not 0 <= threshold <= 100:
        raise SchemaError(f"similarityThreshold must be in [0,100], got {threshold}")

    ocr_doc = doc.get("ocr", {})
    if not isinstance(ocr_doc, dict):
        raise SchemaError("ocr must be an object")
    engine = ocr_doc.get("engine", "mock")
    if engine not in ("mock", "fixture", "sidecar"):
        raise SchemaError(f"ocr.engine must be mock|fixture|sidecar, got {engine!r}")
    ocr = OcrConfig(
        engine=engine,
        command=list(ocr_doc.get("command", [])),
        modalities=[m.upper() for m in ocr_doc.get("modalities", DEFAULT_OCR_MODALITIES)],
        margin=int(ocr_doc.get("margin", 2)),
        first_frame_only=bool(ocr_doc.get("firstFrameOnly", False)),
    )
    if engine == "sidecar" and not ocr.command:
        raise SchemaError("ocr.engine=sidecar requires ocr.command")

    scope = _expect(doc, "dateShiftScope", str, "global")
    if scope not in ("global", "per-patient"):
        raise SchemaError(f"dateShiftScope must be global|per-patient, got {scope!r}")

    uid_root = _expect(doc, "uidRoot", str, "1.2.840.99999").strip().rstrip(".")
    if uid_root and not all(part.isdigit() for part in uid_root.split(".")):
        raise SchemaError(f"uidRoot must be dotted-decimal, got {uid_root!r}")
    if len(uid_root) > 54:
        raise SchemaError("uidRoot too long to leave room for suffixes (max 54 chars)")

    return Config(
        institution_keywords=lists["institution"],
        geographic_keywords=lists["geographic"],
        preposition_keywords=lists["preposition"],
        sensible_tags=sensible_tags,
        custom_actions=custom_actions,
        vr_defaults=vr_defaults,
        date_shift_days=_expect(doc, "dateShiftDays", int, 0),
        time_shift_seconds=_expect(doc, "timeShiftSeconds", int, 0),
        date_shift_scope=scope,
        shift_salt=_expect(doc, "shiftSalt", str, ""),
        uid_root=uid_root,
        similarity_threshold=threshold,
        ocr=ocr,
        strictness=strictness,
        cap_age_90=bool(doc.get("capAge90", False)),
    )


def serialize_config(cfg: Config) -> str:
    doc = {
        "keywords": {
            "institution": cfg.institution_keywords,
            "geographic": cfg.geographic_keywords,
            "preposition": cfg.preposition_keywords,
        },
        "sensibleTags": [str(t) for t in cfg.sensible_tags],
        "actions": {k: v.to_json() for k, v in cfg.custom_actions.items()},
        "vrDefaults": cfg.vr_defaults,
        "dateShiftDays": cfg.date_shift_days,
        "timeShiftSeconds": cfg.time_shift_seconds,
        "dateShiftScope": cfg.date_shift_scope,
        "shiftSalt": cfg.shift_salt,
        "uidRoot": cfg.uid_root,
        "similarityThreshold": cfg.similarity_threshold,
        "ocr": {
            "engine": cfg.ocr.engine,
            "command": cfg.ocr.command,
            "modalities": cfg.ocr.modalities,
            "margin": cfg.ocr.margin,
            "firstFrameOnly": cfg.ocr.first_frame_only,
        },
        "strictness": cfg.strictness,
        "capAge90": cfg.cap_age_90,
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)


def config_digest(cfg: Config) -> str:
    import hashlib

    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()[:16]


def _expect(doc: dict, key: str, typ, default):
    value = doc.get(key, default)
    if typ is int and isinstance(value, bool):
        raise SchemaError(f"{key} must be {typ.__name__}")
    if not isinstance(value, typ):
        raise SchemaError(f"{key} must be {typ.__name__}, got {type(value).__name__}")
    return value


def _validate_action_for_pattern(pattern: TagPattern, action: ActionSpec) -> None:
    """Reject date/time/uid actions on exact tags whose dictionary VR disagrees."""
    if pattern.specificity != 2:
        return  # wildcards cannot be checked until runtime
    tag = Tag.parse(pattern.text)
    vr = vr_of(tag)
    if vr == "UN":
        return  # not in dictionary, checked at apply time
    if action.kind == "shiftDate" and vr not in ("DA", "DT"):
        raise InvalidAction(f"shiftDate targets {tag} with VR {vr}")
    if action.kind == "shiftTime" and vr not in ("TM", "DT"):
        raise InvalidAction(f"shiftTime targets {tag} with VR {vr}")
    if action.kind == "remapUid" and vr != "UI":
        raise InvalidAction(f"remapUid targets {tag} with VR {vr}")
