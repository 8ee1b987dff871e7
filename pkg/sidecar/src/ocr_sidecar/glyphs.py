"""Glyph template atlas for recognition.

Templates are rendered once from the bundled font, cropped to their ink
bounding box and normalized to a fixed grid. Candidate glyphs from an
image go through the same normalization, so recognition reduces to
nearest-template matching on binary grids.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from PIL import Image, ImageDraw, ImageFont

GRID = 24
CHARSET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
_RENDER_SIZE = 64


def _font(size: int):
    try:
        return ImageFont.load_default(size=size)
    except TypeError:  # very old Pillow
        return ImageFont.truetype("/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf", size)


def normalize_glyph(ink: np.ndarray) -> np.ndarray:
    """Binary glyph cropped to its bbox and scaled onto the GRID square."""
    ys, xs = np.nonzero(ink)
    if len(ys) == 0:
        return np.zeros((GRID, GRID), dtype=bool)
    crop = ink[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
    img = Image.fromarray((crop * 255).astype(np.uint8))
    img = img.resize((GRID, GRID), Image.BILINEAR)
    return np.asarray(img) >= 128


@lru_cache(maxsize=1)
def templates() -> dict[str, np.ndarray]:
    font = _font(_RENDER_SIZE)
    atlas: dict[str, np.ndarray] = {}
    for ch in CHARSET:
        canvas = Image.new("L", (_RENDER_SIZE * 2, _RENDER_SIZE * 2), 0)
        ImageDraw.Draw(canvas).text((8, 8), ch, fill=255, font=font)
        ink = np.asarray(canvas) >= 128
        atlas[ch] = normalize_glyph(ink)
    return atlas


def match_glyph(ink: np.ndarray) -> tuple[str, float]:
    """(best character, agreement score in [0,1]) for a binary glyph."""
    glyph = normalize_glyph(ink)
    best_char, best_score = "?", 0.0
    for ch, tpl in templates().items():
        agree = np.count_nonzero(glyph == tpl)
        score = agree / glyph.size
        if score > best_score:
            best_char, best_score = ch, score
    return best_char, best_score
