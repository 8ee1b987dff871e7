"""Serializer producing DICOM Part-10 bytes.

Writing an unmodified parse reproduces the input byte-for-byte: raw
values are emitted as stored, sequence/item length forms are honored as
recorded at parse time, and element order is ascending by tag. The one
derived value is the file-meta group length, which is always recomputed.
"""

from __future__ import annotations

import struct

from . import vr as vrmod
from .dataset import DataElement, Dataset, DicomFile
from .errors import ValueTooLong
from .tags import FILE_META_GROUP_LENGTH, ITEM, ITEM_DELIM, SEQ_DELIM

UNDEFINED = 0xFFFFFFFF


def write_file(file: DicomFile, strict: bool = False) -> bytes:
    """Serialize to Part-10 bytes (or a bare dataset when parsed that way).

    strict: raise ValueTooLong when a short-form value exceeds 16 bits
    instead of promoting the element to UN encoding.
    """
    body = _encode_dataset(file.dataset, implicit=file.is_implicit, strict=strict)
    if not file.has_part10_header:
        return body
    meta = _encode_file_meta(file.file_meta, strict=strict)
    return file.preamble + b"DICM" + meta + body


def _encode_file_meta(meta: Dataset, strict: bool) -> bytes:
    rest = b"".join(
        _encode_element(el, implicit=False, strict=strict)
        for el in meta
        if el.tag != FILE_META_GROUP_LENGTH
    )
    group_length = DataElement(FILE_META_GROUP_LENGTH, "UL")
    group_length.set_numbers([len(rest)])
    return _encode_element(group_length, implicit=False, strict=strict) + rest


def _encode_dataset(ds: Dataset, implicit: bool, strict: bool) -> bytes:
    return b"".join(_encode_element(el, implicit, strict) for el in ds)


def _encode_element(el: DataElement, implicit: bool, strict: bool) -> bytes:
    if el.is_sequence():
        return _encode_sequence(el, implicit, strict)

    raw = el.raw
    vr = el.vr
    header = struct.pack("<HH", el.tag.group, el.tag.element)
    if implicit:
        return header + struct.pack("<I", len(raw)) + raw
    if not vrmod.is_long_form(vr) and len(raw) > 0xFFFF:
        if strict:
            raise ValueTooLong(f"{el.tag} {vr} value of {len(raw)} bytes")
        vr = "UN"
    if vrmod.is_long_form(vr):
        return header + vr.encode("ascii") + b"\x00\x00" + struct.pack("<I", len(raw)) + raw
    return header + vr.encode("ascii") + struct.pack("<H", len(raw)) + raw


def _encode_sequence(el: DataElement, implicit: bool, strict: bool) -> bytes:
    # UN sequences keep implicit item encoding regardless of file syntax.
    item_implicit = True if el.vr == "UN" else implicit
    items = b"".join(_encode_item(item, item_implicit, strict) for item in el.items)

    header = struct.pack("<HH", el.tag.group, el.tag.element)
    if el.undefined_length:
        length = UNDEFINED
        trailer = struct.pack("<HHI", SEQ_DELIM.group, SEQ_DELIM.element, 0)
    else:
        length = len(items)
        trailer = b""
    if implicit:
        return header + struct.pack("<I", length) + items + trailer
    return (
        header
        + el.vr.encode("ascii")
        + b"\x00\x00"
        + struct.pack("<I", length)
        + items
        + trailer
    )


def _encode_item(item: Dataset, implicit: bool, strict: bool) -> bytes:
    body = _encode_dataset(item, implicit, strict)
    if item.undefined_length:
        return (
            struct.pack("<HHI", ITEM.group, ITEM.element, UNDEFINED)
            + body
            + struct.pack("<HHI", ITEM_DELIM.group, ITEM_DELIM.element, 0)
        )
    return struct.pack("<HHI", ITEM.group, ITEM.element, len(body)) + body
