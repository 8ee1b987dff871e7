"""Action resolution and application: the de-identification engine.

Every classified element maps to one action. Custom overrides win by
pattern specificity (exact tag, then group wildcard, then the private
class); otherwise the category decides. Dates and times shift by a
constant offset so intervals survive, and UIDs remap through one
injective map per run so cross-file references stay intact.
"""

from __future__ import annotations

import hashlib
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from . import __version__
from . import tags as T
from .classify import (
    CLEAN,
    Classification,
    DATETIME,
    GEOGRAPHIC,
    IDENTITY,
    INSTITUTION,
    PERSON_CONTEXT,
    PRIVATE,
    SENSIBLE_MATCH,
    UID,
)
from .config import ActionSpec, Config
from .dataset import DataElement, Dataset, DicomFile
from .errors import MalformedDate, MalformedTime, UnmappableValue
from .tags import Tag
from .vr import BINARY_NUMERIC_VRS

log = logging.getLogger("dicomdeid")

TOOL_ID = f"dicomdeid {__version__}"

# UIDs under the DICOM-defined root are structural (SOP classes,
# transfer syntaxes); replacing them breaks consumers without removing
# any identifying data.
WELL_KNOWN_UID_ROOT = "1.2.840.10008"

_REPLACEABLE = {IDENTITY, SENSIBLE_MATCH, INSTITUTION, GEOGRAPHIC, PERSON_CONTEXT}


@dataclass
class DeidContext:
    """Shared state of one de-identification run."""

    uid_root: str
    date_shift_days: int = 0
    time_shift_seconds: int = 0
    date_shift_scope: str = "global"
    shift_salt: str = ""
    uid_map: dict[str, str] = field(default_factory=dict)
    _counter: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def from_config(cls, cfg: Config) -> "DeidContext":
        return cls(
            uid_root=cfg.uid_root,
            date_shift_days=cfg.date_shift_days,
            time_shift_seconds=cfg.time_shift_seconds,
            date_shift_scope=cfg.date_shift_scope,
            shift_salt=cfg.shift_salt,
        )

    def shifts_for(self, patient: str) -> tuple[int, int]:
        """(days, seconds) offset for a patient under the configured scope."""
        if self.date_shift_scope != "per-patient":
            return self.date_shift_days, self.time_shift_seconds
        digest = hashlib.sha256((self.shift_salt + patient).encode("utf-8")).digest()
        days = int.from_bytes(digest[:4], "big") % 365 - 182
        seconds = int.from_bytes(digest[4:8], "big") % 86400 - 43200
        return self.date_shift_days + days, self.time_shift_seconds + seconds

    def load_uid_map(self, text: str) -> None:
        import json

        doc = json.loads(text)
        with self._lock:
            self.uid_map.update(doc.get("map", {}))
            self._counter = int(doc.get("counter", self._counter))

    def dump_uid_map(self) -> str:
        import json

        with self._lock:
            return json.dumps(
                {"root": self.uid_root, "counter": self._counter, "map": self.uid_map},
                indent=2,
                sort_keys=True,
            )


def remap_uid(uid: str, ctx: DeidContext) -> str:
    """Stable, injective replacement under ctx.uid_root.

    Fresh UIDs register themselves as fixed points so a later run with
    the same persisted map leaves them alone.
    """
    with ctx._lock:
        existing = ctx.uid_map.get(uid)
        if existing is not None:
            return existing
        ctx._counter += 1
        new = f"{ctx.uid_root}.{ctx._counter}"
        ctx.uid_map[uid] = new
        ctx.uid_map[new] = new
        return new


_DATE_RE = re.compile(r"^(\d{8})$")
_TIME_RE = re.compile(r"^(\d{2})(\d{2})?(\d{2})?(\.\d{1,6})?$")
_DATETIME_RE = re.compile(r"^(\d{8})(\d{2})?(\d{2})?(\d{2})?(\.\d{1,6})?([+-]\d{4})?$")


def shift_date(value: str, days: int) -> str:
    m = _DATE_RE.match(value.strip())
    if not m:
        raise MalformedDate(f"not a YYYYMMDD date: {value!r}")
    try:
        parsed = date(int(value[0:4]), int(value[4:6]), int(value[6:8]))
        shifted = parsed + timedelta(days=days)
    except (ValueError, OverflowError) as exc:
        raise MalformedDate(f"cannot shift {value!r} by {days}: {exc}") from exc
    return f"{shifted.year:04d}{shifted.month:02d}{shifted.day:02d}"


def shift_time(value: str, seconds: int) -> str:
    """Shift modulo 24h, preserving the precision and fraction of the input."""
    m = _TIME_RE.match(value.strip())
    if not m:
        raise MalformedTime(f"not a HH[MM[SS[.F]]] time: {value!r}")
    hh, mm, ss, frac = m.groups()
    try:
        # \d also matches non-ASCII digits that int() rejects
        h, mn, s = int(hh), int(mm or 0), int(ss or 0)
    except ValueError as exc:
        raise MalformedTime(f"not a parseable time: {value!r}") from exc
    if h > 23 or mn > 59 or s > 60:
        raise MalformedTime(f"time out of range: {value!r}")
    total = (h * 3600 + mn * 60 + s + seconds) % 86400
    h, rest = divmod(total, 3600)
    mn, s = divmod(rest, 60)
    out = f"{h:02d}"
    if mm is not None:
        out += f"{mn:02d}"
    if ss is not None:
        out += f"{s:02d}"
    if frac is not None:
        out += frac
    return out


def shift_datetime(value: str, days: int, seconds: int) -> str:
    """Shift a combined date-time, carrying seconds into the date; zone suffix kept."""
    m = _DATETIME_RE.match(value.strip())
    if not m:
        raise MalformedDate(f"not a DICOM datetime: {value!r}")
    dpart, hh, mm, ss, frac, zone = m.groups()
    try:
        base = datetime(
            int(dpart[0:4]), int(dpart[4:6]), int(dpart[6:8]),
            int(hh or 0), int(mm or 0), int(ss or 0),
        )
        shifted = base + timedelta(days=days, seconds=seconds)
    except (ValueError, OverflowError) as exc:
        raise MalformedDate(f"cannot shift {value!r}: {exc}") from exc
    out = f"{shifted.year:04d}{shifted.month:02d}{shifted.day:02d}"
    if hh is not None:
        out += f"{shifted.hour:02d}"
    if mm is not None:
        out += f"{shifted.minute:02d}"
    if ss is not None:
        out += f"{shifted.second:02d}"
    if frac is not None:
        out += frac
    if zone is not None:
        out += zone
    return out


def resolve_action(c: Classification, cfg: Config) -> ActionSpec:
    """Custom pattern match wins (exact > group wildcard > private class), then defaults."""
    for pattern, action in cfg.action_patterns():
        if pattern.matches(c.tag):
            return action
    if c.category in _REPLACEABLE:
        return ActionSpec("replaceDefault")
    if c.category == DATETIME:
        return ActionSpec("shiftTime" if c.vr == "TM" else "shiftDate")
    if c.category == UID:
        return ActionSpec("remapUid")
    if c.category == PRIVATE:
        return ActionSpec("zeroLength")
    return ActionSpec("keep")


def apply_action(
    el: DataElement,
    action: ActionSpec,
    ctx: DeidContext,
    cfg: Config,
    *,
    patient: str = "",
    already_deidentified: bool = False,
) -> DataElement | None:
    """Transformed element, or None as the removal marker. Mutates in place."""
    kind = action.kind
    if already_deidentified and kind in ("shiftDate", "shiftTime"):
        kind = "keep"

    if kind == "keep":
        if cfg.cap_age_90 and el.vr == "AS" and not el.is_sequence():
            _cap_age(el)
        return el
    if kind == "remove":
        return None
    if kind == "zeroLength":
        if el.is_sequence():
            el.items = []
            el.undefined_length = False
        else:
            el.set_raw(b"")
        return el
    if kind == "replaceWith":
        el.set_values([action.value] * max(1, len(el.values)))
        return el
    if kind == "replaceDefault":
        return _replace_default(el, cfg)
    if kind == "remapUid":
        if el.vr != "UI":
            # reachable only through a wildcard custom action
            if cfg.strictness == "strict":
                raise UnmappableValue(f"remapUid on {el.tag} with VR {el.vr}")
            log.warning("remapUid on non-UI %s (%s), replacing with default", el.tag, el.vr)
            return _replace_default(el, cfg)
        values = el.values
        if values:
            el.set_values(
                [
                    uid if _is_well_known(uid) or not uid.strip() else remap_uid(uid.strip(), ctx)
                    for uid in values
                ]
            )
        return el
    if kind in ("shiftDate", "shiftTime"):
        return _apply_shift(el, kind, ctx, cfg, patient)
    raise UnmappableValue(f"unhandled action {kind}")


def _is_well_known(uid: str) -> bool:
    u = uid.strip()
    return u == WELL_KNOWN_UID_ROOT or u.startswith(WELL_KNOWN_UID_ROOT + ".")


def _cap_age(el: DataElement) -> None:
    capped = []
    for v in el.values:
        m = re.match(r"^(\d{3})Y$", v.strip())
        if m and int(m.group(1)) >= 90:
            capped.append("090Y")
        else:
            capped.append(v)
    el.set_values(capped)


def _replace_default(el: DataElement, cfg: Config) -> DataElement:
    if el.is_sequence():
        el.items = []
        el.undefined_length = False
        return el
    if el.vr in BINARY_NUMERIC_VRS:
        count = max(1, len(el.numbers()))
        el.set_numbers([0] * count)
        return el
    default = cfg.vr_defaults.get(el.vr)
    if default is None:
        el.set_raw(b"")
        return el
    count = max(1, len(el.values))
    el.set_values([default] * count)
    return el


def _apply_shift(el: DataElement, kind: str, ctx: DeidContext, cfg: Config, patient: str) -> DataElement:
    days, seconds = ctx.shifts_for(patient)
    out = []
    for value in el.values:
        if not value.strip():
            out.append(value)
            continue
        try:
            if el.vr == "DT":
                out.append(shift_datetime(value, days, seconds))
            elif kind == "shiftDate":
                out.append(shift_date(value, days))
            else:
                out.append(shift_time(value, seconds))
        except UnmappableValue:
            if cfg.strictness == "strict":
                raise
            log.warning("falling back to default for malformed %s value in %s", el.vr, el.tag)
            out.append(cfg.vr_defaults.get(el.vr, ""))
    if out:
        el.set_values(out)
    return el


@dataclass
class DeidEntry:
    path: str
    category: str
    action: str
    old_hash: str
    new_value: str

    def to_json(self) -> dict:
        return {
            "tagPath": self.path,
            "category": self.category,
            "action": self.action,
            "oldValueHash": self.old_hash,
            "newValue": self.new_value,
        }


def _value_hash(el: DataElement) -> str:
    material = b"|".join(item_bytes for item_bytes in _raw_parts(el))
    return hashlib.sha256(material).hexdigest()[:12]


def _raw_parts(el: DataElement):
    if el.is_sequence():
        yield f"sq:{len(el.items)}".encode()
    else:
        yield el.raw


def deid_dataset(
    ds: Dataset,
    classifications: list[Classification],
    ctx: DeidContext,
    cfg: Config,
    *,
    patient: str = "",
) -> tuple[Dataset, list[DeidEntry], dict[str, int]]:
    """Apply the resolved action for every classification. Mutates ds.

    Also stamps the de-identification markers and drops stale dataset
    group-length elements whose byte counts no longer hold.
    """
    already = ds.first(T.PATIENT_IDENTITY_REMOVED).upper() == "YES"
    by_path = {c.path: c for c in classifications}
    entries: list[DeidEntry] = []
    counters: dict[str, int] = {}

    ops: list[tuple[Dataset, DataElement, Classification]] = []
    stale_lengths: list[tuple[Dataset, Tag]] = []
    for path, el, owner in ds.walk():
        if el.tag.is_group_length():
            stale_lengths.append((owner, el.tag))
            continue
        c = by_path.get(path)
        if c is None:
            c = Classification(el.tag, path, CLEAN, el.vr)
        ops.append((owner, el, c))

    for owner, el, c in ops:
        action = resolve_action(c, cfg)
        effective = action.kind
        if already and effective in ("shiftDate", "shiftTime"):
            effective = "keep"
        counters[effective] = counters.get(effective, 0) + 1
        if effective == "keep" and not cfg.cap_age_90:
            continue
        old_hash = _value_hash(el)
        result = apply_action(
            el, action, ctx, cfg, patient=patient, already_deidentified=already
        )
        if result is None:
            owner.remove(el.tag)
            entries.append(DeidEntry(c.path, c.category, "remove", old_hash, ""))
        else:
            new_hash = _value_hash(result)
            if new_hash != old_hash:
                entries.append(
                    DeidEntry(c.path, c.category, effective, old_hash, _entry_value(result))
                )

    for owner, tag in stale_lengths:
        owner.remove(tag)

    ds.set_text(T.PATIENT_IDENTITY_REMOVED, "CS", "YES")
    ds.set_text(T.DEIDENTIFICATION_METHOD, "LO", TOOL_ID)
    return ds, entries, counters


def _entry_value(el: DataElement) -> str:
    if el.is_sequence():
        return f"<sequence of {len(el.items)}>"
    text = el.text
    return text if len(text) <= 64 else text[:61] + "..."


def deid_file(
    file: DicomFile,
    classifications: list[Classification],
    ctx: DeidContext,
    cfg: Config,
    *,
    patient: str = "",
) -> tuple[DicomFile, list[DeidEntry], dict[str, int]]:
    """Dataset actions plus file-meta consistency: (0002,0003) follows (0008,0018)."""
    _, entries, counters = deid_dataset(
        file.dataset, classifications, ctx, cfg, patient=patient
    )
    meta_uid = file.file_meta.get(T.MEDIA_SOP_INSTANCE_UID)
    if meta_uid is not None:
        new_sop = file.dataset.first(T.SOP_INSTANCE_UID)
        if new_sop:
            meta_uid.set_text(new_sop)
        elif meta_uid.text.strip() and not _is_well_known(meta_uid.text):
            meta_uid.set_text(remap_uid(meta_uid.text.strip(), ctx))
    return file, entries, counters
