"""Decoding stored pixel values from uncompressed pixel data.

The interpreted view masks stored words to BitsStored and sign-extends
per PixelRepresentation. The original unmasked words are retained so a
partial rewrite (redaction) leaves every untouched byte identical,
including overlay bits hiding above BitsStored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tags as T
from .dataset import Dataset
from .errors import SizeMismatch, UnsupportedPixelFormat

MONO1 = "MONOCHROME1"
MONO2 = "MONOCHROME2"
RGB = "RGB"


@dataclass
class PixelMatrix:
    rows: int
    cols: int
    frames: int
    samples: int
    bits_allocated: int
    bits_stored: int
    signed: bool
    photometric: str
    values: np.ndarray  # interpreted, shape (frames, rows, cols, samples), int32
    raw_words: np.ndarray  # stored words as read, same shape, native width
    trailing_pad: bytes = b""

    def frame(self, index: int = 0) -> np.ndarray:
        """Interpreted values of one frame: (rows, cols) or (rows, cols, 3)."""
        v = self.values[index]
        return v[:, :, 0] if self.samples == 1 else v

    def stored_range(self) -> tuple[int, int]:
        if self.signed:
            return -(1 << (self.bits_stored - 1)), (1 << (self.bits_stored - 1)) - 1
        return 0, (1 << self.bits_stored) - 1

    def to_bytes(self) -> bytes:
        return self.raw_words.tobytes() + self.trailing_pad


def decode_pixel_data(ds: Dataset) -> PixelMatrix:
    """Interpret (7FE0,0010) using the image pixel module attributes."""
    el = ds.get(T.PIXEL_DATA)
    if el is None:
        raise UnsupportedPixelFormat("no pixel data element")

    rows = ds.number(T.ROWS)
    cols = ds.number(T.COLUMNS)
    if not rows or not cols:
        raise UnsupportedPixelFormat("missing Rows/Columns")
    bits_allocated = ds.number(T.BITS_ALLOCATED, 8)
    bits_stored = ds.number(T.BITS_STORED, bits_allocated)
    samples = ds.number(T.SAMPLES_PER_PIXEL, 1)
    signed = ds.number(T.PIXEL_REPRESENTATION, 0) == 1
    photometric = ds.first(T.PHOTOMETRIC_INTERPRETATION, MONO2).strip()
    try:
        frames = int(ds.first(T.NUMBER_OF_FRAMES, "1") or "1")
    except ValueError as exc:
        raise UnsupportedPixelFormat(f"NumberOfFrames not an integer: {exc}") from exc
    if frames < 1:
        raise UnsupportedPixelFormat(f"NumberOfFrames {frames}")

    if bits_allocated not in (8, 16):
        raise UnsupportedPixelFormat(f"BitsAllocated {bits_allocated}")
    if samples not in (1, 3):
        raise UnsupportedPixelFormat(f"SamplesPerPixel {samples}")
    if photometric not in (MONO1, MONO2, RGB):
        raise UnsupportedPixelFormat(f"PhotometricInterpretation {photometric}")
    if samples == 3 and ds.number(T.PLANAR_CONFIGURATION, 0) != 0:
        raise UnsupportedPixelFormat("planar configuration 1")
    if not 1 <= bits_stored <= bits_allocated:
        raise UnsupportedPixelFormat(f"BitsStored {bits_stored}/{bits_allocated}")

    word_bytes = bits_allocated // 8
    expected = rows * cols * samples * frames * word_bytes
    raw = el.raw
    if len(raw) == expected + 1:
        trailing = raw[-1:]
        raw = raw[:-1]
    elif len(raw) == expected:
        trailing = b""
    else:
        raise SizeMismatch(f"declared {expected} bytes, pixel data holds {len(raw)}")

    dtype = np.dtype("<u1") if word_bytes == 1 else np.dtype("<u2")
    words = np.frombuffer(raw, dtype=dtype).reshape(frames, rows, cols, samples).copy()

    mask = (1 << bits_stored) - 1
    values = (words.astype(np.int64) & mask).astype(np.int32)
    if signed:
        sign_bit = 1 << (bits_stored - 1)
        values = np.where(values >= sign_bit, values - (1 << bits_stored), values).astype(np.int32)

    return PixelMatrix(
        rows=rows,
        cols=cols,
        frames=frames,
        samples=samples,
        bits_allocated=bits_allocated,
        bits_stored=bits_stored,
        signed=signed,
        photometric=photometric,
        values=values,
        raw_words=words,
        trailing_pad=trailing,
    )


def encode_stored(value: int, matrix: PixelMatrix) -> int:
    """Stored word for an interpreted value (two's complement within BitsAllocated)."""
    lo, hi = matrix.stored_range()
    v = min(max(int(value), lo), hi)
    if v < 0:
        v += 1 << matrix.bits_allocated
    return v
