"""Burned-in text removal from pixel data.

Stored pixels render to 8 bits through rescale and windowing, the OCR
engine proposes text boxes, and every detection that resembles one of
the patient's harvested values is painted over in the stored data with
the frame's black value. Unmatched text survives untouched: annotations
like technique factors stay useful for research.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tags as T
from .dataset import Dataset
from .fuzzy import match_sensible
from .ocr import Detection, Image8, OcrEngine
from .pixels import MONO1, PixelMatrix, RGB, decode_pixel_data, encode_stored

log = logging.getLogger("dicomdeid")


def rescale_of(ds: Dataset) -> tuple[float, float]:
    """(slope, intercept) from the modality LUT attributes; identity when absent."""
    try:
        slope = float(ds.first(T.RESCALE_SLOPE, "1") or "1")
        intercept = float(ds.first(T.RESCALE_INTERCEPT, "0") or "0")
    except ValueError:
        return 1.0, 0.0
    if slope == 0:
        return 1.0, 0.0
    return slope, intercept


def window_of(ds: Dataset) -> tuple[float, float] | None:
    """First (center, width) pair, or None when not usable."""
    center_text = ds.first(T.WINDOW_CENTER)
    width_text = ds.first(T.WINDOW_WIDTH)
    if not center_text or not width_text:
        return None
    try:
        center, width = float(center_text), float(width_text)
    except ValueError:
        return None
    if width < 1:
        return None
    return center, width


def to_8bit(
    m: PixelMatrix,
    rescale: tuple[float, float],
    window: tuple[float, float] | None = None,
    frame: int = 0,
) -> Image8:
    """Render one frame to display intensities for the OCR engine.

    Grayscale maps modality values through the window when given, else
    a min-max stretch of the frame; MONOCHROME1 is inverted afterwards.
    RGB gets an independent min-max stretch per channel.
    """
    slope, intercept = rescale
    stored = m.values[frame].astype(np.float64)

    if m.photometric == RGB:
        out = np.empty_like(stored)
        for ch in range(stored.shape[2]):
            out[:, :, ch] = _stretch(stored[:, :, ch])
        return Image8.from_array(np.rint(out).astype(np.uint8))

    v = slope * stored[:, :, 0] + intercept
    if window is not None:
        center, width = window
        lower = center - width / 2
        upper = center + width / 2
        scaled = np.rint(255 * (v - lower) / width)
        out = np.where(v <= lower, 0, np.where(v > upper, 255, scaled))
        out = np.clip(out, 0, 255)
    else:
        out = np.rint(_stretch(v))
    if m.photometric == MONO1:
        out = 255 - out
    return Image8.from_array(out.astype(np.uint8))


def _stretch(v: np.ndarray) -> np.ndarray:
    vmin, vmax = float(v.min()), float(v.max())
    if vmin == vmax:
        log.warning("degenerate pixel range (min == max == %s), rendering mid-gray", vmin)
        return np.full_like(v, 128.0)
    return 255 * (v - vmin) / (vmax - vmin)


def black_stored_value(m: PixelMatrix, rescale: tuple[float, float], frame: int = 0):
    """Stored value that renders to minimum display intensity for this frame."""
    if m.photometric == RGB:
        return (0, 0, 0)
    frame_values = m.values[frame, :, :, 0]
    if m.photometric == MONO1:
        return int(frame_values.max())
    slope, intercept = rescale
    modality = slope * frame_values.astype(np.float64) + intercept
    v_black = float(modality.min())
    lo, hi = m.stored_range()
    return int(min(max(round((v_black - intercept) / slope), lo), hi))


def detect_text(img: Image8, engine: OcrEngine, source_path: Path | None = None) -> list[Detection]:
    """Engine detections with boxes clamped to the image and empty text dropped."""
    detections = []
    for det in engine.detect(img, source_path):
        if not det.text.strip():
            continue
        clamped = [
            (min(max(x, 0.0), img.cols - 1.0), min(max(y, 0.0), img.rows - 1.0))
            for x, y in det.box
        ]
        detections.append(Detection(det.text, clamped, det.confidence))
    return detections


@dataclass
class RedactionRecord:
    frame: int
    text: str
    box: list[tuple[float, float]]
    matched_value: str
    score: int
    rect: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive, after dilation

    def to_json(self) -> dict:
        return {
            "frame": self.frame,
            "text": self.text,
            "box": [[x, y] for x, y in self.box],
            "matchedValue": self.matched_value,
            "score": self.score,
            "rect": list(self.rect),
        }


def scrub_pixels(
    ds: Dataset,
    values,
    engine: OcrEngine,
    threshold: int,
    *,
    margin: int = 2,
    first_frame_only: bool = False,
    source_path: Path | None = None,
) -> tuple[Dataset, list[RedactionRecord]]:
    """Blacken every detection that matches a harvested value. Mutates ds.

    Pixels outside the dilated boxes keep their exact stored bytes;
    matched boxes fill with the frame's black stored value.
    """
    matrix = decode_pixel_data(ds)
    rescale = rescale_of(ds)
    window = window_of(ds)
    records: list[RedactionRecord] = []

    frames = 1 if first_frame_only else matrix.frames
    touched = False
    for frame in range(frames):
        img = to_8bit(matrix, rescale, window, frame=frame)
        detections = detect_text(img, engine, source_path)
        if not detections:
            continue
        black = black_stored_value(matrix, rescale, frame=frame)
        for det in detections:
            hits = match_sensible(det.text, values, threshold)
            if not hits:
                continue
            value, score = hits[0]
            rect = _dilated_rect(det.box, margin, matrix.rows, matrix.cols)
            x0, y0, x1, y1 = rect
            if matrix.photometric == RGB:
                matrix.raw_words[frame, y0 : y1 + 1, x0 : x1 + 1, :] = 0
            else:
                matrix.raw_words[frame, y0 : y1 + 1, x0 : x1 + 1, :] = encode_stored(black, matrix)
            touched = True
            records.append(RedactionRecord(frame, det.text, det.box, value, score, rect))

    if touched:
        ds[T.PIXEL_DATA].set_raw(matrix.to_bytes())
    return ds, records


def _dilated_rect(box, margin: int, rows: int, cols: int) -> tuple[int, int, int, int]:
    xs = [p[0] for p in box]
    ys = [p[1] for p in box]
    x0 = max(0, math.floor(min(xs)) - margin)
    y0 = max(0, math.floor(min(ys)) - margin)
    x1 = min(cols - 1, math.ceil(max(xs)) + margin)
    y1 = min(rows - 1, math.ceil(max(ys)) + margin)
    return x0, y0, x1, y1
