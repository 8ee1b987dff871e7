"""In-memory model of a parsed DICOM file.

A Dataset is an ordered map of Tag to DataElement. Elements keep their
value as the raw bytes read from the stream; typed views decode on
demand and setters re-encode with correct padding. Sequence elements
hold child Datasets and remember whether they were encoded with
undefined lengths, so an untouched file serializes back byte-for-byte.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import vr as vrmod
from .tags import Tag, TRANSFER_SYNTAX_UID

IMPLICIT_VR_LE = "1.2.840.10008.1.2"
EXPLICIT_VR_LE = "1.2.840.10008.1.2.1"
SUPPORTED_TRANSFER_SYNTAXES = (IMPLICIT_VR_LE, EXPLICIT_VR_LE)


def decode_text(raw: bytes) -> str:
    """Lossy decode used for searching and display: UTF-8, then Latin-1."""
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


@dataclass
class DataElement:
    tag: Tag
    vr: str
    raw: bytes = b""
    items: Optional[list["Dataset"]] = None
    undefined_length: bool = False

    def is_sequence(self) -> bool:
        return self.items is not None

    @property
    def text(self) -> str:
        """Value decoded as text, trailing pad stripped. Multi-values keep their backslashes."""
        if self.is_sequence():
            return ""
        return decode_text(self.raw).rstrip("\x00").rstrip(" ")

    @property
    def values(self) -> list[str]:
        text = self.text
        if not text:
            return []
        return text.split("\\")

    def set_text(self, value: str) -> None:
        """Replace the value with encoded text, padded to even length."""
        raw = value.encode("utf-8")
        if len(raw) % 2:
            raw += vrmod.pad_byte(self.vr)
        self.raw = raw
        self.items = None
        self.undefined_length = False

    def set_values(self, values: list[str]) -> None:
        self.set_text("\\".join(values))

    def set_raw(self, raw: bytes) -> None:
        if len(raw) % 2:
            raw += vrmod.pad_byte(self.vr)
        self.raw = raw
        self.items = None
        self.undefined_length = False

    def numbers(self) -> list:
        """Typed numeric values for binary VRs, parsed strings for DS/IS."""
        if self.vr in vrmod.BINARY_NUMERIC_VRS:
            fmt = vrmod.BINARY_NUMERIC_VRS[self.vr]
            size = struct.calcsize(fmt)
            count = len(self.raw) // size
            return [struct.unpack_from(fmt, self.raw, i * size)[0] for i in range(count)]
        if self.vr == "IS":
            return [int(v) for v in self.values if v.strip()]
        if self.vr == "DS":
            return [float(v) for v in self.values if v.strip()]
        raise ValueError(f"{self.vr} is not a numeric VR")

    def set_numbers(self, values: list) -> None:
        if self.vr in vrmod.BINARY_NUMERIC_VRS:
            fmt = vrmod.BINARY_NUMERIC_VRS[self.vr]
            self.raw = b"".join(struct.pack(fmt, v) for v in values)
            self.items = None
            self.undefined_length = False
            return
        if self.vr in ("IS", "DS"):
            self.set_values([str(v) for v in values])
            return
        raise ValueError(f"{self.vr} is not a numeric VR")

    def first(self, default: str = "") -> str:
        vals = self.values
        return vals[0].strip() if vals else default

    def copy(self) -> "DataElement":
        items = [ds.copy() for ds in self.items] if self.items is not None else None
        return DataElement(self.tag, self.vr, self.raw, items, self.undefined_length)

    def __repr__(self) -> str:
        if self.is_sequence():
            return f"<({self.tag}) {self.vr} items={len(self.items)}>"
        return f"<({self.tag}) {self.vr} len={len(self.raw)}>"


@dataclass
class Dataset:
    """Ordered tag to element map; iteration is always in ascending tag order."""

    _elements: dict[Tag, DataElement] = field(default_factory=dict)
    # Encoding detail of a sequence item: True when the item carried an
    # undefined length in the source stream.
    undefined_length: bool = False

    def __iter__(self) -> Iterator[DataElement]:
        for tag in sorted(self._elements):
            yield self._elements[tag]

    def __len__(self) -> int:
        return len(self._elements)

    def __contains__(self, tag: Tag) -> bool:
        return tag in self._elements

    def __getitem__(self, tag: Tag) -> DataElement:
        return self._elements[tag]

    def get(self, tag: Tag, default=None):
        return self._elements.get(tag, default)

    def add(self, element: DataElement) -> None:
        self._elements[element.tag] = element

    def set_text(self, tag: Tag, vr: str, value: str) -> DataElement:
        el = self._elements.get(tag)
        if el is None:
            el = DataElement(tag, vr)
            self._elements[tag] = el
        el.vr = el.vr if el.vr != "UN" else vr
        el.set_text(value)
        return el

    def remove(self, tag: Tag) -> None:
        self._elements.pop(tag, None)

    def text(self, tag: Tag, default: str = "") -> str:
        el = self._elements.get(tag)
        return el.text if el is not None else default

    def first(self, tag: Tag, default: str = "") -> str:
        el = self._elements.get(tag)
        return el.first(default) if el is not None else default

    def number(self, tag: Tag, default=None):
        el = self._elements.get(tag)
        if el is None:
            return default
        nums = el.numbers()
        return nums[0] if nums else default

    def walk(self, prefix: str = "") -> Iterator[tuple[str, DataElement, "Dataset"]]:
        """Yield (path, element, owner) for every element, descending into sequences."""
        for el in self:
            path = f"{prefix}{el.tag}"
            yield path, el, self
            if el.is_sequence():
                for idx, item in enumerate(el.items):
                    yield from item.walk(f"{path}[{idx}]/")

    def copy(self) -> "Dataset":
        ds = Dataset(undefined_length=self.undefined_length)
        for el in self._elements.values():
            ds.add(el.copy())
        return ds


@dataclass
class DicomFile:
    preamble: Optional[bytes]  # None for bare datasets without a Part-10 header
    file_meta: Dataset
    dataset: Dataset
    transfer_syntax: str
    source_path: Optional[str] = None

    @property
    def has_part10_header(self) -> bool:
        return self.preamble is not None

    @property
    def is_implicit(self) -> bool:
        return self.transfer_syntax == IMPLICIT_VR_LE

    def declared_transfer_syntax(self) -> str:
        return self.file_meta.text(TRANSFER_SYNTAX_UID)

    def copy(self) -> "DicomFile":
        return DicomFile(
            self.preamble,
            self.file_meta.copy(),
            self.dataset.copy(),
            self.transfer_syntax,
            self.source_path,
        )
