"""Binary reader for DICOM Part-10 files.

Supports implicit and explicit VR little endian. Anything compressed or
big endian raises UnsupportedTransferSyntax so callers can report and
skip the file instead of mangling it. Values are kept as raw bytes;
sequences (defined and undefined length) parse recursively and remember
their encoding so serialization can reproduce the input exactly.
"""

from __future__ import annotations

import struct

from . import vr as vrmod
from .dataset import (
    DataElement,
    Dataset,
    DicomFile,
    EXPLICIT_VR_LE,
    IMPLICIT_VR_LE,
    SUPPORTED_TRANSFER_SYNTAXES,
)
from .errors import DicomParseError, InvalidMagic, TruncatedFile, UnsupportedTransferSyntax
from .tags import ITEM, ITEM_DELIM, SEQ_DELIM, Tag, TRANSFER_SYNTAX_UID, vr_of

UNDEFINED = 0xFFFFFFFF
_MAGIC_OFFSET = 128


def parse_file(data: bytes, source_path: str | None = None) -> DicomFile:
    """Parse a whole file image into a DicomFile."""
    if len(data) >= _MAGIC_OFFSET + 4 and data[_MAGIC_OFFSET : _MAGIC_OFFSET + 4] == b"DICM":
        preamble = data[:_MAGIC_OFFSET]
        meta, pos = _parse_file_meta(data, _MAGIC_OFFSET + 4)
        ts = meta.text(TRANSFER_SYNTAX_UID)
        if ts not in SUPPORTED_TRANSFER_SYNTAXES:
            raise UnsupportedTransferSyntax(ts or "<missing>")
        dataset, pos = _parse_dataset(data, pos, len(data), implicit=(ts == IMPLICIT_VR_LE))
        if pos != len(data):
            raise TruncatedFile(f"trailing garbage after dataset at offset {pos}")
        return DicomFile(preamble, meta, dataset, ts, source_path)

    # Fallback: a bare dataset starting at a group-0008 element.
    if len(data) >= 8 and struct.unpack_from("<H", data, 0)[0] == 0x0008:
        implicit = not _looks_explicit(data, 0)
        dataset, pos = _parse_dataset(data, 0, len(data), implicit=implicit)
        if pos != len(data):
            raise TruncatedFile(f"trailing garbage after dataset at offset {pos}")
        ts = IMPLICIT_VR_LE if implicit else EXPLICIT_VR_LE
        return DicomFile(None, Dataset(), dataset, ts, source_path)

    raise InvalidMagic("no DICM marker and not a bare dataset")


def _looks_explicit(data: bytes, pos: int) -> bool:
    return data[pos + 4 : pos + 6].decode("ascii", "replace") in vrmod.KNOWN_VRS


def _parse_file_meta(data: bytes, pos: int) -> tuple[Dataset, int]:
    """Group-0002 elements, always explicit VR little endian."""
    meta = Dataset()
    while pos + 8 <= len(data):
        group = struct.unpack_from("<H", data, pos)[0]
        if group != 0x0002:
            break
        element, pos = _parse_element(data, pos, len(data), implicit=False)
        if element.tag in meta:
            raise DicomParseError(f"duplicate tag {element.tag} in file meta")
        meta.add(element)
    if TRANSFER_SYNTAX_UID not in meta:
        raise DicomParseError("file meta missing TransferSyntaxUID")
    return meta, pos


def _parse_dataset(data: bytes, pos: int, end: int, implicit: bool) -> tuple[Dataset, int]:
    """Elements until `end` or an item delimiter (inside undefined-length items)."""
    ds = Dataset()
    while pos < end:
        if pos + 8 > end:
            raise TruncatedFile(f"dangling {end - pos} bytes at offset {pos}")
        tag = Tag(*struct.unpack_from("<HH", data, pos))
        if tag == ITEM_DELIM:
            # Owned by the enclosing item parser.
            break
        element, pos = _parse_element(data, pos, end, implicit)
        if element.tag in ds:
            raise DicomParseError(f"duplicate tag {element.tag}")
        ds.add(element)
    return ds, pos


def _parse_element(data: bytes, pos: int, end: int, implicit: bool) -> tuple[DataElement, int]:
    tag = Tag(*struct.unpack_from("<HH", data, pos))
    pos += 4
    if tag in (ITEM, ITEM_DELIM, SEQ_DELIM):
        raise DicomParseError(f"misplaced delimiter {tag} at offset {pos - 4}")

    if implicit:
        vr = vr_of(tag)
        if pos + 4 > end:
            raise TruncatedFile(f"element {tag} truncated at length field")
        length = struct.unpack_from("<I", data, pos)[0]
        pos += 4
    else:
        if pos + 4 > end:
            raise TruncatedFile(f"element {tag} truncated at VR field")
        vr = data[pos : pos + 2].decode("ascii", "replace")
        if not vr.isalpha() or not vr.isupper():
            raise DicomParseError(f"invalid VR bytes for {tag}: {data[pos:pos+2]!r}")
        pos += 2
        if vrmod.is_long_form(vr):
            if pos + 6 > end:
                raise TruncatedFile(f"element {tag} truncated at length field")
            length = struct.unpack_from("<I", data, pos + 2)[0]
            pos += 6
        else:
            length = struct.unpack_from("<H", data, pos)[0]
            pos += 2

    if length == UNDEFINED:
        # Only sequences may carry undefined lengths in the syntaxes we
        # accept (encapsulated pixel data implies a compressed syntax).
        if vr not in ("SQ", "UN"):
            raise DicomParseError(f"undefined length on non-sequence {tag} ({vr})")
        items, pos = _parse_items_undefined(data, pos, end, _item_rules(implicit, vr))
        return DataElement(tag, vr, b"", items, undefined_length=True), pos

    if pos + length > end:
        raise TruncatedFile(f"element {tag} declares {length} bytes past end of stream")

    if vr == "SQ":
        items, item_end = _parse_items_defined(data, pos, pos + length, _item_rules(implicit, vr))
        return DataElement(tag, vr, b"", items, undefined_length=False), item_end

    raw = data[pos : pos + length]
    return DataElement(tag, vr, raw), pos + length


def _item_rules(implicit: bool, vr: str) -> bool:
    # UN sequences are always encoded with implicit VR items.
    return True if vr == "UN" else implicit


def _parse_items_defined(data: bytes, pos: int, end: int, implicit: bool) -> tuple[list[Dataset], int]:
    items: list[Dataset] = []
    while pos < end:
        item, pos = _parse_one_item(data, pos, end, implicit)
        items.append(item)
    if pos != end:
        raise DicomParseError("sequence items overflow declared length")
    return items, end


def _parse_items_undefined(data: bytes, pos: int, end: int, implicit: bool) -> tuple[list[Dataset], int]:
    items: list[Dataset] = []
    while True:
        if pos + 8 > end:
            raise TruncatedFile("unterminated undefined-length sequence")
        tag = Tag(*struct.unpack_from("<HH", data, pos))
        if tag == SEQ_DELIM:
            return items, pos + 8
        item, pos = _parse_one_item(data, pos, end, implicit)
        items.append(item)


def _parse_one_item(data: bytes, pos: int, end: int, implicit: bool) -> tuple[Dataset, int]:
    tag = Tag(*struct.unpack_from("<HH", data, pos))
    if tag != ITEM:
        raise DicomParseError(f"expected sequence item, found {tag}")
    length = struct.unpack_from("<I", data, pos + 4)[0]
    pos += 8
    if length == UNDEFINED:
        ds, pos = _parse_dataset(data, pos, end, implicit)
        if pos + 8 > end or Tag(*struct.unpack_from("<HH", data, pos)) != ITEM_DELIM:
            raise TruncatedFile("unterminated undefined-length item")
        ds.undefined_length = True
        return ds, pos + 8
    if pos + length > end:
        raise TruncatedFile("item declares bytes past end of sequence")
    ds, consumed_to = _parse_dataset(data, pos, pos + length, implicit)
    if consumed_to != pos + length:
        raise DicomParseError("item content shorter than declared length")
    ds.undefined_length = False
    return ds, pos + length
