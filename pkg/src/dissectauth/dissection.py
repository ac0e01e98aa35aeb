"""Overlapping-block secret commitments, comparison, and mismatch localization.

A secret is cut into sliding windows of ``width`` characters every ``stride``
positions (final window right-anchored so the tail is always covered), and each
window is committed with a digest salted per user *and* per block index.  At
login time the candidate string is cut the same way and compared digest-by-digest;
the pattern of matching and mismatching windows localizes which character
positions are wrong without the stored plaintext ever being kept.

Localization happens in two phases:

1. Interval logic: a position is suspect when at least one mismatching window
   covers it and no matching window does.
2. Digest probing: for suspect windows with only a few undetermined positions,
   candidate window texts are enumerated over a bounded alphabet and checked
   against the stored digest.  A hit pins down the stored characters exactly,
   which resolves the edge ambiguity interval logic alone cannot (a wrong second
   character is indistinguishable from a wrong first-and-second pair by window
   match bits only).  Probing is budgeted so hopeless candidates (e.g. random
   brute-force strings) stay on the cheap path.

Note the deliberate trade-off: per-block digests reveal more structure than one
hash of the whole secret ever would — probing *is* that extra structure put to
work server-side.  Records must therefore be protected like password hashes.
"""

from __future__ import annotations

import hashlib
import json
import math
import string
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from itertools import product

from .errors import DimensionMismatch, InvalidSecret, UnknownKey

DIGEST_ALGORITHM = "blake2b-128"
DEFAULT_WIDTH = 3
DEFAULT_STRIDE = 2

# Probing defaults: every printable US-QWERTY character, and a budget small
# enough that garbage attempts never trigger multi-position enumeration.
DEFAULT_PROBE_ALPHABET = string.ascii_letters + string.digits + string.punctuation + " "
DEFAULT_PROBE_BUDGET = 4096


@dataclass(frozen=True)
class BlockScheme:
    """Sliding-window dissection parameters."""

    width: int = DEFAULT_WIDTH
    stride: int = DEFAULT_STRIDE
    min_blocks: int = 1

    def __post_init__(self) -> None:
        if self.width < 2:
            raise ValueError("width must be >= 2")
        if not 1 <= self.stride <= self.width:
            raise ValueError("stride must be in [1, width] so windows overlap")
        if self.min_blocks < 1:
            raise ValueError("min_blocks must be >= 1")

    def block_count(self, length: int) -> int:
        if length <= self.width:
            natural = 1
        else:
            natural = math.ceil((length - self.width) / self.stride) + 1
        return max(self.min_blocks, natural)

    def spans(self, length: int) -> list[tuple[int, int]]:
        """1-based inclusive (start, end) per block; union always covers [1, length]."""
        if length < 1:
            raise ValueError("length must be positive")
        anchor = max(1, length - self.width + 1)
        out = []
        for i in range(self.block_count(length)):
            start = min(1 + i * self.stride, anchor)
            out.append((start, min(length, start + self.width - 1)))
        return out


@dataclass(frozen=True)
class DissectionRecord:
    """Salted per-block commitments to a secret; holds no plaintext."""

    user_salt: bytes
    scheme: BlockScheme
    block_digests: tuple[bytes, ...]
    full_digest: bytes
    length: int
    algorithm: str = DIGEST_ALGORITHM

    def __post_init__(self) -> None:
        expected = self.scheme.block_count(self.length)
        if len(self.block_digests) != expected:
            raise ValueError(
                f"record has {len(self.block_digests)} digests, scheme yields {expected}"
            )


@dataclass(frozen=True)
class ComparisonResult:
    """Outcome of matching a candidate string against a DissectionRecord."""

    block_matches: tuple[bool, ...]
    mismatch_positions: frozenset[int]
    matched_count: int
    match_percentage: float
    length_delta: int


def _block_digest(salt: bytes, index: int, text: str) -> bytes:
    h = hashlib.blake2b(key=salt[:64], digest_size=16)
    h.update(b"B" + index.to_bytes(4, "big") + text.encode("utf-8"))
    return h.digest()


def _full_digest(salt: bytes, secret: str) -> bytes:
    h = hashlib.blake2b(key=salt[:64], digest_size=16)
    h.update(b"F" + secret.encode("utf-8"))
    return h.digest()


def dissect(secret: str, scheme: BlockScheme) -> list[str]:
    """Cut a secret into its overlapping character blocks.

    A secret shorter than the window degenerates to one full-string block.
    """
    if not secret:
        raise InvalidSecret("cannot dissect an empty secret")
    return [secret[s - 1 : e] for s, e in scheme.spans(len(secret))]


def commit(secret: str, scheme: BlockScheme, user_salt: bytes) -> DissectionRecord:
    """Commit a secret to salted block digests plus one whole-string digest."""
    blocks = dissect(secret, scheme)
    return DissectionRecord(
        user_salt=user_salt,
        scheme=scheme,
        block_digests=tuple(
            _block_digest(user_salt, i, text) for i, text in enumerate(blocks)
        ),
        full_digest=_full_digest(user_salt, secret),
        length=len(secret),
    )


@dataclass(frozen=True)
class ProbeConfig:
    """Bounds for digest probing during comparison."""

    alphabet: str = DEFAULT_PROBE_ALPHABET
    budget: int = DEFAULT_PROBE_BUDGET


def compare(
    attempt: str,
    record: DissectionRecord,
    probe: ProbeConfig | None = ProbeConfig(),
) -> ComparisonResult:
    """Match an attempt against stored commitments and localize wrong positions.

    The attempt is dissected against the *stored* length; positions the attempt
    does not reach count as mismatched, surplus characters only show up in
    ``length_delta``.  An empty attempt scores 0% rather than raising, so the
    risk engine still sees it as a scored event.
    """
    length = record.length
    spans = record.scheme.spans(length)
    matches = []
    for i, (s, e) in enumerate(spans):
        if e <= len(attempt):
            ok = _block_digest(record.user_salt, i, attempt[s - 1 : e]) == record.block_digests[i]
        else:
            ok = False  # block extends past the attempt; stored text cannot equal it
        matches.append(ok)

    cleared: set[int] = set()
    accused: set[int] = set()
    for ok, (s, e) in zip(matches, spans):
        (cleared if ok else accused).update(range(s, e + 1))
    accused -= cleared

    if probe is not None and accused:
        known = _probe(attempt, record, spans, matches, probe)
        resolved_equal = {
            p
            for p in accused
            if p <= len(attempt) and known.get(p) == attempt[p - 1]
        }
        accused -= resolved_equal

    mismatch = frozenset(accused)
    matched_count = length - len(mismatch)
    return ComparisonResult(
        block_matches=tuple(matches),
        mismatch_positions=mismatch,
        matched_count=matched_count,
        match_percentage=100.0 * matched_count / length,
        length_delta=len(attempt) - length,
    )


def verify_full(attempt: str, record: DissectionRecord) -> bool:
    """True only when the attempt is exactly the committed secret."""
    return _full_digest(record.user_salt, attempt) == record.full_digest


def _probe(
    attempt: str,
    record: DissectionRecord,
    spans: list[tuple[int, int]],
    matches: list[bool],
    probe: ProbeConfig,
) -> dict[int, str]:
    """Recover stored characters for suspect positions by digest enumeration.

    Returns a map position -> stored character for every position that could be
    pinned down within the budget.  Positions covered by matching blocks seed
    the map (there the stored text equals the attempt text); each further hit
    may unlock neighbouring blocks, so iterate to a fixpoint.
    """
    known: dict[int, str] = {}
    for ok, (s, e) in zip(matches, spans):
        if ok:
            for p in range(s, e + 1):
                known[p] = attempt[p - 1]

    budget = probe.budget
    alphabet = probe.alphabet

    def try_candidates(index: int, span: tuple[int, int], unknown: list[int], combos) -> dict[int, str] | None:
        nonlocal budget
        s, e = span
        chars = {p: known.get(p) for p in range(s, e + 1)}
        for combo in combos:
            if budget <= 0:
                return None
            budget -= 1
            for p, c in zip(unknown, combo):
                chars[p] = c
            text = "".join(chars[p] for p in range(s, e + 1))
            if _block_digest(record.user_salt, index, text) == record.block_digests[index]:
                return dict(zip(unknown, combo))
        return None

    tried: set[tuple[int, tuple[int, ...]]] = set()
    progress = True
    while progress and budget > 0:
        progress = False
        for i, (s, e) in enumerate(spans):
            if matches[i]:
                continue
            unknown = [p for p in range(s, e + 1) if p not in known]
            if not unknown:
                continue
            # Probing only pays off when it can clear an in-range position.
            if all(p > len(attempt) for p in unknown):
                continue
            attempt_key = (i, tuple(unknown))
            if attempt_key in tried:
                continue
            tried.add(attempt_key)
            hit = None
            # Cheap pass: the attempt text with exactly one unknown changed
            # (plus the all-attempt-chars combo when a known char already
            # differs).  Catches the common one-slip-per-window case.
            if all(p <= len(attempt) for p in unknown):
                base = [attempt[p - 1] for p in unknown]

                def near_misses():
                    yield tuple(base)
                    for j in range(len(base)):
                        for c in alphabet:
                            if c != base[j]:
                                cand = list(base)
                                cand[j] = c
                                yield tuple(cand)

                hit = try_candidates(i, (s, e), unknown, near_misses())
            # Full enumeration for multi-slip windows, small alphabets only.
            if hit is None and len(alphabet) ** len(unknown) <= budget:
                hit = try_candidates(i, (s, e), unknown, product(alphabet, repeat=len(unknown)))
            if hit:
                known.update(hit)
                progress = True
    return known


class Substitution(Enum):
    """How far a replacement character sits from the one it replaced."""

    IDENTICAL = "Identical"
    AMBIENT = "Ambient"
    DISTANT = "Distant"


AMBIENT_MAX_DISTANCE = 1.5


@dataclass(frozen=True)
class KeyboardLayout:
    """Physical key grid; shifted characters share their base key's coordinates."""

    key_coords: dict[str, tuple[float, float]]
    layout_name: str = "custom"

    def coord(self, key: str) -> tuple[float, float]:
        try:
            return self.key_coords[key]
        except KeyError:
            raise UnknownKey(f"key {key!r} not in layout {self.layout_name!r}") from None

    def distance(self, key_a: str, key_b: str) -> float:
        (r1, c1), (r2, c2) = self.coord(key_a), self.coord(key_b)
        return math.hypot(r1 - r2, c1 - c2)


def load_layout(path: str | None = None) -> KeyboardLayout:
    """Load a layout data file (one record per key); default is packaged US QWERTY."""
    if path is None:
        raw = resources.files("dissectauth.data").joinpath("qwerty_us.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    doc = json.loads(raw)
    return KeyboardLayout(
        key_coords={rec["key"]: (float(rec["row"]), float(rec["col"])) for rec in doc["keys"]},
        layout_name=doc.get("layout_name", "custom"),
    )


def key_proximity(key_a: str, key_b: str, layout: KeyboardLayout) -> float:
    """Score in (0, 1]: 1 for the same physical key, decaying as 1/(1+distance)."""
    return 1.0 / (1.0 + layout.distance(key_a, key_b))


def classify_substitution(prev_char: str, new_char: str, layout: KeyboardLayout) -> Substitution:
    if prev_char == new_char:
        return Substitution.IDENTICAL
    d = layout.distance(prev_char, new_char)
    return Substitution.AMBIENT if d <= AMBIENT_MAX_DISTANCE else Substitution.DISTANT


@dataclass(frozen=True)
class TimingVector:
    """Per-position timings (ms) with positive weights."""

    components: tuple[float, ...]
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.weights:
            object.__setattr__(self, "weights", tuple(1.0 for _ in self.components))
        if len(self.weights) != len(self.components):
            raise DimensionMismatch("components and weights differ in length")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")

    def weighted_norm(self) -> float:
        return math.sqrt(sum(w * t * t for w, t in zip(self.weights, self.components)))


def timing_similarity(t1: TimingVector, t2: TimingVector) -> float:
    """1 minus the weighted distance relative to the larger weighted norm.

    Equal vectors score 1; two all-zero vectors score 1 by defined limit.
    Clamped to [-1, 1].
    """
    if len(t1.components) != len(t2.components):
        raise DimensionMismatch(
            f"timing vectors differ in length ({len(t1.components)} vs {len(t2.components)})"
        )
    if t1.weights != t2.weights:
        raise DimensionMismatch("timing vectors must share weights")
    denom = max(t1.weighted_norm(), t2.weighted_norm())
    if denom == 0.0:
        return 1.0
    num = math.sqrt(
        sum(w * (a - b) ** 2 for w, a, b in zip(t1.weights, t1.components, t2.components))
    )
    return max(-1.0, min(1.0, 1.0 - num / denom))
