"""Connected-component text detection plus template recognition.

Works on clean synthetic renderings (burned-in annotations): binarize
with Otsu's threshold taking the sparse side as ink, group components
into lines and words by geometry, then recognize each glyph against the
template atlas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .glyphs import match_glyph

MIN_GLYPH_SIDE = 3
MIN_GLYPH_AREA = 6
MIN_CHAR_SCORE = 0.72
WORD_GAP_FACTOR = 0.45


@dataclass
class Word:
    text: str
    box: list[list[float]]  # 4 corners, clockwise from top-left
    confidence: float


def _otsu(gray: np.ndarray) -> float:
    hist, _ = np.histogram(gray, bins=256, range=(0, 256))
    total = gray.size
    sum_total = np.dot(np.arange(256), hist)
    sum_b = 0.0
    weight_b = 0.0
    best_t, best_var = 127.0, -1.0
    for t in range(256):
        weight_b += hist[t]
        if weight_b == 0:
            continue
        weight_f = total - weight_b
        if weight_f == 0:
            break
        sum_b += t * hist[t]
        mean_b = sum_b / weight_b
        mean_f = (sum_total - sum_b) / weight_f
        var_between = weight_b * weight_f * (mean_b - mean_f) ** 2
        if var_between > best_var:
            best_var, best_t = var_between, float(t)
    return best_t


def _binarize(gray: np.ndarray) -> np.ndarray:
    """Ink mask: the sparse side of the Otsu split (text covers little area)."""
    t = _otsu(gray)
    bright = gray > t
    return bright if bright.sum() <= bright.size / 2 else ~bright


@dataclass
class _Component:
    y0: int
    y1: int
    x0: int
    x1: int
    mask: np.ndarray

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1


def _components(ink: np.ndarray) -> list[_Component]:
    labels, count = ndimage.label(ink, structure=np.ones((3, 3), dtype=int))
    out = []
    for sl in ndimage.find_objects(labels):
        if sl is None:
            continue
        region = labels[sl]
        mask = region > 0
        h, w = mask.shape
        if (h < MIN_GLYPH_SIDE and w < MIN_GLYPH_SIDE) or mask.sum() < MIN_GLYPH_AREA:
            continue
        out.append(_Component(sl[0].start, sl[0].stop - 1, sl[1].start, sl[1].stop - 1, mask))
    return out


def _merge_stacked(parts: list[_Component]) -> list[_Component]:
    """Join vertically stacked pieces of one glyph (dots of i/j, colons)."""
    parts = sorted(parts, key=lambda c: c.x0)
    merged: list[_Component] = []
    for comp in parts:
        target = None
        for prev in merged:
            overlap = min(prev.x1, comp.x1) - max(prev.x0, comp.x0) + 1
            if overlap >= 0.6 * min(prev.width, comp.width):
                gap = max(prev.y0, comp.y0) - min(prev.y1, comp.y1)
                if gap <= max(prev.height, comp.height):
                    target = prev
                    break
        if target is None:
            merged.append(comp)
            continue
        y0, y1 = min(target.y0, comp.y0), max(target.y1, comp.y1)
        x0, x1 = min(target.x0, comp.x0), max(target.x1, comp.x1)
        mask = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
        mask[target.y0 - y0 : target.y1 - y0 + 1, target.x0 - x0 : target.x1 - x0 + 1] |= target.mask
        mask[comp.y0 - y0 : comp.y1 - y0 + 1, comp.x0 - x0 : comp.x1 - x0 + 1] |= comp.mask
        target.y0, target.y1, target.x0, target.x1, target.mask = y0, y1, x0, x1, mask
    return merged


def _lines(parts: list[_Component]) -> list[list[_Component]]:
    lines: list[list[_Component]] = []
    for comp in sorted(parts, key=lambda c: (c.y0, c.x0)):
        placed = False
        for line in lines:
            y0 = min(c.y0 for c in line)
            y1 = max(c.y1 for c in line)
            overlap = min(y1, comp.y1) - max(y0, comp.y0) + 1
            if overlap > 0.5 * min(y1 - y0 + 1, comp.height):
                line.append(comp)
                placed = True
                break
        if not placed:
            lines.append([comp])
    return lines


def _words(line: list[_Component]) -> list[list[_Component]]:
    line = sorted(line, key=lambda c: c.x0)
    if not line:
        return []
    heights = sorted(c.height for c in line)
    line_height = heights[len(heights) // 2]
    gap_limit = max(2.0, WORD_GAP_FACTOR * line_height)
    words = [[line[0]]]
    for comp in line[1:]:
        gap = comp.x0 - words[-1][-1].x1 - 1
        if gap > gap_limit:
            words.append([comp])
        else:
            words[-1].append(comp)
    return words


def detect_words(image: np.ndarray) -> list[Word]:
    """Recognized words with their bounding boxes.

    image: uint8 array, (rows, cols) grayscale or (rows, cols, 3) RGB.
    """
    arr = np.asarray(image)
    if arr.ndim == 3:
        arr = arr.mean(axis=2).astype(np.uint8)
    if arr.size == 0 or arr.min() == arr.max():
        return []
    ink = _binarize(arr)
    parts = _merge_stacked(_components(ink))
    out: list[Word] = []
    for line in _lines(parts):
        for group in _words(line):
            chars = []
            scores = []
            for comp in group:
                ch, score = match_glyph(comp.mask)
                if score >= MIN_CHAR_SCORE:
                    chars.append(ch)
                    scores.append(score)
            if not chars:
                continue
            x0 = float(min(c.x0 for c in group))
            x1 = float(max(c.x1 for c in group))
            y0 = float(min(c.y0 for c in group))
            y1 = float(max(c.y1 for c in group))
            out.append(
                Word(
                    text="".join(chars),
                    box=[[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
                    confidence=float(np.mean(scores)),
                )
            )
    return out
