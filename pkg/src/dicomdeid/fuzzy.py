"""Percentage similarity scoring between text and harvested values.

Scores are a plain Levenshtein ratio on normalized strings:
round(100 * (1 - distance / max_length)). This is deliberately the
simple, reproducible scorer; token-sort composites can slot in behind
the same interface later.
"""

from __future__ import annotations

import re

_WS = re.compile(r"\s+")


def normalize(s: str) -> str:
    return _WS.sub(" ", s).strip().casefold()


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a
    previous = list(range(len(a) + 1))
    for i, cb in enumerate(b, start=1):
        current = [i]
        for j, ca in enumerate(a, start=1):
            insert = current[j - 1] + 1
            delete = previous[j] + 1
            substitute = previous[j - 1] + (ca != cb)
            current.append(min(insert, delete, substitute))
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> int:
    """Score in [0,100]; 100 iff the normalized strings are equal."""
    na, nb = normalize(a), normalize(b)
    if not na and not nb:
        return 100
    longest = max(len(na), len(nb))
    return round(100 * (1 - levenshtein(na, nb) / longest))


def partial_similarity(needle: str, haystack: str) -> int:
    """Best similarity of the needle against same-token-count windows of the haystack."""
    n_tokens = normalize(needle).split()
    h_tokens = normalize(haystack).split()
    if not n_tokens:
        return 100
    k = len(n_tokens)
    if len(h_tokens) < k:
        return similarity(needle, haystack)
    needle_norm = " ".join(n_tokens)
    # The whole haystack is always a candidate: a window match can only improve on it.
    best = similarity(needle_norm, " ".join(h_tokens))
    for i in range(len(h_tokens) - k + 1):
        if best == 100:
            break
        window = " ".join(h_tokens[i : i + k])
        score = similarity(needle_norm, window)
        if score > best:
            best = score
    return best


def match_sensible(text: str, values, threshold: int) -> list[tuple[str, int]]:
    """Store values scoring strictly above the threshold, best first.

    Values shorter than 3 characters never fuzzy-match; they count only
    on an exact window hit (score 100).
    """
    hits: list[tuple[str, int]] = []
    for value in values:
        v = normalize(value)
        if not v:
            continue
        score = partial_similarity(v, text)
        if len(v) < 3 and score < 100:
            continue
        if score > threshold:
            hits.append((value, score))
    hits.sort(key=lambda pair: (-pair[1], pair[0]))
    return hits
