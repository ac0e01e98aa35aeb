"""Independent brute-force oracles the implementation is checked against.

Everything here works on plaintext and enumeration only — no digests, no
shared code paths with the module under test.
"""

from __future__ import annotations

import math


def oracle_spans(length: int, width: int, stride: int, min_blocks: int = 1) -> list[tuple[int, int]]:
    """Hand-derived window positions: stride steps, final window right-anchored."""
    if length <= width:
        natural = 1
    else:
        natural = math.ceil((length - width) / stride) + 1
    n = max(min_blocks, natural)
    anchor = max(1, length - width + 1)
    spans = []
    for i in range(n):
        start = 1 + i * stride
        if start > anchor:
            start = anchor
        spans.append((start, min(length, start + width - 1)))
    return spans


def oracle_diff_positions(stored: str, attempt: str) -> set[int]:
    """True differing positions, left-aligned, judged against the stored length."""
    out = set()
    for p in range(1, len(stored) + 1):
        if p > len(attempt) or attempt[p - 1] != stored[p - 1]:
            out.add(p)
    return out


def oracle_block_matches(stored: str, attempt: str, spans: list[tuple[int, int]]) -> list[bool]:
    """Plaintext block equality per window (window text vs attempt text)."""
    out = []
    for s, e in spans:
        out.append(e <= len(attempt) and attempt[s - 1 : e] == stored[s - 1 : e])
    return out


def oracle_covering_blocks(position: int, spans: list[tuple[int, int]]) -> set[int]:
    return {i for i, (s, e) in enumerate(spans) if s <= position <= e}
