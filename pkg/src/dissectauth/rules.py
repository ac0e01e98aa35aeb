"""Schedule-driven dynamic password rules.

A rule deterministically transforms the user's base secret into the expected
secret for the current login, advancing through a per-user schedule on every
successful login.  Verification derives the expected secret, checks the attempt
against the stored block commitments, and classifies any mismatch as either an
honest slip, a deviation from the configured rule, or a decoy violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from functools import reduce
from typing import Protocol

from .dissection import BlockScheme, ComparisonResult, DissectionRecord, commit, compare, verify_full
from .errors import InvalidRule

DEFAULT_LEET_MAP = {"t": "7", "n": "9", "o": "0", "y": "e"}
DEFAULT_CLOCK_SKEW_TOLERANCE_MIN = 1


class RuleVariant(str, Enum):
    CAESAR = "Caesar"
    SPACE = "Space"
    LEET = "Leet"
    SPECIAL_CHAR = "SpecialChar"
    CHAR_CASE = "CharCase"
    MIXED = "Mixed"
    TIME = "Time"
    STATIC = "Static"


class AlphabetMode(str, Enum):
    LETTERS26 = "Letters26"
    ALNUM36 = "Alnum36"


def _char_index(ch: str, mode: AlphabetMode) -> int:
    """1-based alphabet index: a..z -> 1..26, and 0..9 -> 27..36 in Alnum36."""
    low = ch.lower()
    if "a" <= low <= "z":
        return ord(low) - ord("a") + 1
    if mode is AlphabetMode.ALNUM36 and "0" <= ch <= "9":
        return ord(ch) - ord("0") + 27
    raise InvalidRule(f"character {ch!r} is outside the {mode.value} alphabet")


def _index_char(index: int, upper: bool, mode: AlphabetMode) -> str:
    size = 26 if mode is AlphabetMode.LETTERS26 else 36
    index = (index - 1) % size + 1
    if index <= 26:
        ch = chr(ord("a") + index - 1)
        return ch.upper() if upper else ch
    return chr(ord("0") + index - 27)


def shift_char(ch: str, delta: int, mode: AlphabetMode) -> str:
    """Shift within the numbered alphabet, wrapping; case is preserved for letters."""
    return _index_char(_char_index(ch, mode) + delta, ch.isupper(), mode)


@dataclass(frozen=True)
class RuleSpec:
    """One rule variant plus its variant-specific schedule parameters."""

    variant: RuleVariant
    positions: tuple[int, ...] = ()
    # Caesar
    deltas: tuple[int, ...] = ()
    alphabet_mode: AlphabetMode = AlphabetMode.LETTERS26
    cycle_length: int | None = None
    # Space: (insert position, repeat count) per schedule step
    space_schedule: tuple[tuple[int, int], ...] = ()
    # Leet: substitution map plus per-step position groups
    leet_map: tuple[tuple[str, str], ...] = tuple(DEFAULT_LEET_MAP.items())
    leet_schedule: tuple[tuple[int, ...], ...] = ()
    # SpecialChar
    charset: tuple[str, ...] = ()
    # CharCase: per-step position groups toggled relative to the base secret
    case_schedule: tuple[tuple[int, ...], ...] = ()
    # Mixed
    children: tuple["RuleSpec", ...] = ()
    # Time
    offset_minutes: int = 0

    def __post_init__(self) -> None:
        if self.variant is RuleVariant.MIXED:
            if not self.children:
                raise InvalidRule("Mixed rule needs at least one child")
            if any(c.variant is RuleVariant.MIXED for c in self.children):
                raise InvalidRule("Mixed rules nest only one level deep")
        if self.variant is RuleVariant.TIME:
            if self.positions:
                raise InvalidRule("Time rule appends an auxiliary value; it has no positions")
            if not 0 <= self.offset_minutes <= 59:
                raise InvalidRule("offset_minutes must be in [0, 59]")
        if self.variant is RuleVariant.CAESAR and not self.deltas:
            raise InvalidRule("Caesar rule needs a delta sequence")
        if self.variant is RuleVariant.SPACE and not self.space_schedule:
            raise InvalidRule("Space rule needs a position schedule")
        if self.variant is RuleVariant.SPECIAL_CHAR and not self.charset:
            raise InvalidRule("SpecialChar rule needs a character set")
        if self.variant is RuleVariant.LEET and not self.leet_schedule:
            raise InvalidRule("Leet rule needs a schedule of position groups")
        if self.variant is RuleVariant.CHAR_CASE and not self.case_schedule:
            raise InvalidRule("CharCase rule needs a schedule of position groups")
        if self.cycle_length is not None and self.cycle_length < 1:
            raise InvalidRule("cycle_length must be >= 1")

    def effective_cycle(self) -> int:
        """Schedule period: derive_expected repeats after this many advances."""
        if self.variant is RuleVariant.CAESAR:
            return self.cycle_length or len(self.deltas)
        if self.variant is RuleVariant.SPACE:
            return sum(rep for _, rep in self.space_schedule)
        if self.variant is RuleVariant.LEET:
            return len(self.leet_schedule)
        if self.variant is RuleVariant.SPECIAL_CHAR:
            return self.cycle_length or len(self.charset)
        if self.variant is RuleVariant.CHAR_CASE:
            return len(self.case_schedule)
        if self.variant is RuleVariant.MIXED:
            return reduce(math.lcm, (c.effective_cycle() for c in self.children), 1)
        return 1

    def governed_positions(self) -> frozenset[int]:
        """Positions this rule may legitimately alter (in expected-string coordinates)."""
        if self.variant in (RuleVariant.CAESAR, RuleVariant.SPECIAL_CHAR):
            return frozenset(self.positions)
        if self.variant is RuleVariant.SPACE:
            return frozenset(pos for pos, _ in self.space_schedule)
        if self.variant is RuleVariant.LEET:
            return frozenset(p for step in self.leet_schedule for p in step)
        if self.variant is RuleVariant.CHAR_CASE:
            return frozenset(p for step in self.case_schedule for p in step)
        if self.variant is RuleVariant.MIXED:
            return frozenset(p for c in self.children for p in c.governed_positions())
        return frozenset()


@dataclass(frozen=True)
class RuleState:
    """Schedule position: one cursor per child rule (a single cursor otherwise)."""

    login_index: int = 0
    cursors: tuple[int, ...] = (0,)


def initial_state(spec: RuleSpec) -> RuleState:
    n = len(spec.children) if spec.variant is RuleVariant.MIXED else 1
    return RuleState(login_index=0, cursors=tuple(0 for _ in range(n)))


@dataclass(frozen=True)
class DecoySpec:
    """Positions the legitimate user never alters; any change there is maximal risk."""

    decoy_positions: frozenset[int] = frozenset()
    enabled: bool = False


@dataclass(frozen=True)
class RuleDeviationReport:
    deviated: bool
    deviation_positions: frozenset[int]
    decoy_violated: bool
    expected_alternatives_checked: int
    non_rule_mismatches: frozenset[int] = frozenset()
    unreachable_rule_positions: frozenset[int] = frozenset()


class SecretHandle(Protocol):
    """Sealed reference to the base secret; unsealed only inside verification."""

    def unseal(self) -> str: ...


@dataclass(frozen=True)
class PlainSecretHandle:
    """Unsealed handle for tests and in-process use."""

    secret: str

    def unseal(self) -> str:
        return self.secret


def validate_spec(spec: RuleSpec, base_secret: str) -> None:
    """Reject specs that cannot be applied to this base secret.

    Mixed children transform an evolving string, so only their bounds are
    checked statically; dry_run_cycle exercises the real composition.
    """
    n = len(base_secret)
    if spec.variant is RuleVariant.MIXED:
        grows = sum(1 for c in spec.children if c.variant is RuleVariant.SPACE)
        for child in spec.children:
            for pos in child.governed_positions():
                if not 1 <= pos <= n + grows + 1:
                    raise InvalidRule(f"position {pos} outside the transformed secret")
        return
    if spec.variant is RuleVariant.SPACE:
        for pos, rep in spec.space_schedule:
            if not 1 <= pos <= n + 1:
                raise InvalidRule(f"space position {pos} outside [1, {n + 1}]")
            if rep < 1:
                raise InvalidRule("space repeat counts must be >= 1")
        return
    for pos in spec.governed_positions():
        if not 1 <= pos <= n:
            raise InvalidRule(f"position {pos} outside the secret (length {n})")
    if spec.variant is RuleVariant.CAESAR:
        for pos in spec.positions:
            _char_index(base_secret[pos - 1], spec.alphabet_mode)
    if spec.variant is RuleVariant.LEET:
        mapping = dict(spec.leet_map)
        for step in spec.leet_schedule:
            for pos in step:
                if base_secret[pos - 1] not in mapping:
                    raise InvalidRule(
                        f"no leet substitution for {base_secret[pos - 1]!r} at position {pos}"
                    )
    if spec.variant is RuleVariant.SPECIAL_CHAR:
        for ch in spec.charset:
            if len(ch) != 1:
                raise InvalidRule("charset entries must be single characters")


def dry_run_cycle(spec: RuleSpec, base_secret: str) -> list[str]:
    """Derive the expected secret for every step of one full cycle.

    Used at rule-setup time: schedule conflicts that only bite mid-cycle (for
    example a Caesar child landing on a character a Space child just shifted)
    surface here as InvalidRule instead of at some future login.
    """
    validate_spec(spec, base_secret)
    state = initial_state(spec)
    probe_time = datetime(2000, 1, 1)
    out = []
    for _ in range(spec.effective_cycle()):
        expected, _ = derive_expected(base_secret, spec, state, probe_time)
        out.append(expected)
        state = advance(spec, state)
    return out


def _apply_single(base: str, spec: RuleSpec, cursor: int) -> str:
    if spec.variant in (RuleVariant.STATIC, RuleVariant.TIME):
        return base
    if spec.variant is RuleVariant.CAESAR:
        shift = sum(spec.deltas[j % len(spec.deltas)] for j in range(cursor + 1))
        chars = list(base)
        for pos in spec.positions:
            chars[pos - 1] = shift_char(chars[pos - 1], shift, spec.alphabet_mode)
        return "".join(chars)
    if spec.variant is RuleVariant.SPACE:
        pos = _space_position(spec, cursor)
        return base[: pos - 1] + " " + base[pos - 1 :]
    if spec.variant is RuleVariant.LEET:
        mapping = dict(spec.leet_map)
        chars = list(base)
        for pos in spec.leet_schedule[cursor % len(spec.leet_schedule)]:
            try:
                chars[pos - 1] = mapping[chars[pos - 1]]
            except KeyError as exc:
                raise InvalidRule(f"no leet substitution for {chars[pos - 1]!r}") from exc
        return "".join(chars)
    if spec.variant is RuleVariant.SPECIAL_CHAR:
        ch = spec.charset[cursor % len(spec.charset)]
        chars = list(base)
        for pos in spec.positions:
            chars[pos - 1] = ch
        return "".join(chars)
    if spec.variant is RuleVariant.CHAR_CASE:
        chars = list(base)
        for pos in spec.case_schedule[cursor % len(spec.case_schedule)]:
            chars[pos - 1] = chars[pos - 1].swapcase()
        return "".join(chars)
    raise InvalidRule(f"cannot apply variant {spec.variant}")


def _space_position(spec: RuleSpec, cursor: int) -> int:
    """Unrolled schedule lookup honouring per-step repeat counts."""
    cursor %= spec.effective_cycle()
    for pos, rep in spec.space_schedule:
        if cursor < rep:
            return pos
        cursor -= rep
    raise InvalidRule("space schedule exhausted")  # unreachable given the modulo


def derive_expected(
    base_secret: str,
    spec: RuleSpec,
    state: RuleState,
    login_time: datetime,
) -> tuple[str, int | None]:
    """Expected secret for the current schedule position, plus the auxiliary
    time value when the Time rule is active."""
    if not base_secret:
        raise InvalidRule("base secret is empty")
    time_value: int | None = None
    if spec.variant is RuleVariant.MIXED:
        out = base_secret
        for child, cursor in zip(spec.children, state.cursors):
            if child.variant is RuleVariant.TIME:
                time_value = (login_time.minute + child.offset_minutes) % 60
            try:
                out = _apply_single(out, child, cursor)
            except IndexError as exc:
                raise InvalidRule("child rule position outside the transformed secret") from exc
        return out, time_value
    if spec.variant is RuleVariant.TIME:
        time_value = (login_time.minute + spec.offset_minutes) % 60
        return base_secret, time_value
    try:
        expected = _apply_single(base_secret, spec, state.cursors[0])
    except IndexError as exc:
        raise InvalidRule("rule position outside the secret") from exc
    return expected, time_value


def advance(spec: RuleSpec, state: RuleState) -> RuleState:
    """Step the schedule after a successful login; cursors wrap at their cycle."""
    if spec.variant is RuleVariant.MIXED:
        cycles = [c.effective_cycle() for c in spec.children]
        cursors = tuple((cur + 1) % cyc for cur, cyc in zip(state.cursors, cycles))
    else:
        cycle = spec.effective_cycle()
        cursors = ((state.cursors[0] + 1) % cycle,)
    return RuleState(login_index=state.login_index + 1, cursors=cursors)


def rule_reachable_values(spec: RuleSpec, base_secret: str, position: int) -> set[str]:
    """Every value a governed position can hold over one full schedule cycle.

    Positions the rule never touches yield the empty set.
    """
    if position not in spec.governed_positions():
        return set()
    values: set[str] = set()
    state = initial_state(spec)
    probe_time = datetime(2000, 1, 1)
    for _ in range(spec.effective_cycle()):
        expected, _ = derive_expected(base_secret, spec, state, probe_time)
        if 1 <= position <= len(expected):
            values.add(expected[position - 1])
        state = advance(spec, state)
    return values


def time_value_within(expected: int, supplied: int, tolerance_min: int) -> bool:
    diff = abs(expected - supplied) % 60
    return min(diff, 60 - diff) <= tolerance_min


def verify_attempt(
    attempt: str,
    attempt_time_value: int | None,
    base_secret_handle: SecretHandle,
    spec: RuleSpec,
    state: RuleState,
    decoy: DecoySpec,
    login_time: datetime,
    clock_skew_tolerance_min: int = DEFAULT_CLOCK_SKEW_TOLERANCE_MIN,
    record: DissectionRecord | None = None,
    scheme: BlockScheme | None = None,
    user_salt: bytes | None = None,
) -> tuple[bool, ComparisonResult, RuleDeviationReport]:
    """Check an attempt against the current expected secret.

    Pass the stored ``record`` when one exists (the profile keeps commitments
    for the current expected secret); otherwise a fresh commitment is computed
    from ``scheme`` and ``user_salt``.  The base secret is unsealed only here.
    """
    base = base_secret_handle.unseal()
    expected, expected_tv = derive_expected(base, spec, state, login_time)
    if record is None:
        if scheme is None or user_salt is None:
            raise ValueError("need either a stored record or scheme+salt to commit")
        record = commit(expected, scheme, user_salt)

    comparison = compare(attempt, record)
    secret_ok = verify_full(attempt, record)

    alternatives_checked = 0
    time_ok = True
    time_deviation = False
    if expected_tv is not None:
        alternatives_checked += 2 * clock_skew_tolerance_min + 1
        if attempt_time_value is None:
            time_ok = False
            time_deviation = True  # missing answer is a deviation, not an error
        else:
            time_ok = time_value_within(expected_tv, attempt_time_value, clock_skew_tolerance_min)
            time_deviation = not time_ok

    governed = spec.governed_positions()
    non_rule = frozenset(p for p in comparison.mismatch_positions if p not in governed)
    unreachable: set[int] = set()
    for p in comparison.mismatch_positions:
        if p in governed and p <= len(attempt):
            reachable = rule_reachable_values(spec, base, p)
            alternatives_checked += len(reachable)
            if attempt[p - 1] not in reachable:
                unreachable.add(p)

    decoy_violated = bool(
        decoy.enabled and decoy.decoy_positions.intersection(comparison.mismatch_positions)
    )
    deviated = bool(non_rule or unreachable or time_deviation or decoy_violated)
    report = RuleDeviationReport(
        deviated=deviated,
        deviation_positions=comparison.mismatch_positions,
        decoy_violated=decoy_violated,
        expected_alternatives_checked=alternatives_checked,
        non_rule_mismatches=non_rule,
        unreachable_rule_positions=frozenset(unreachable),
    )
    return secret_ok and time_ok, comparison, report


# --- JSON (de)serialization used by the wire schemas and the profile store ---

def spec_to_dict(spec: RuleSpec) -> dict:
    out: dict = {"variant": spec.variant.value}
    if spec.positions:
        out["positions"] = list(spec.positions)
    if spec.variant is RuleVariant.CAESAR:
        out["deltas"] = list(spec.deltas)
        out["alphabet_mode"] = spec.alphabet_mode.value
        out["cycle_length"] = spec.effective_cycle()
    elif spec.variant is RuleVariant.SPACE:
        out["space_schedule"] = [[p, r] for p, r in spec.space_schedule]
    elif spec.variant is RuleVariant.LEET:
        out["leet_map"] = {k: v for k, v in spec.leet_map}
        out["leet_schedule"] = [list(step) for step in spec.leet_schedule]
    elif spec.variant is RuleVariant.SPECIAL_CHAR:
        out["charset"] = list(spec.charset)
        out["cycle_length"] = spec.effective_cycle()
    elif spec.variant is RuleVariant.CHAR_CASE:
        out["case_schedule"] = [list(step) for step in spec.case_schedule]
    elif spec.variant is RuleVariant.MIXED:
        out["children"] = [spec_to_dict(c) for c in spec.children]
    elif spec.variant is RuleVariant.TIME:
        out["offset_minutes"] = spec.offset_minutes
    return out


def spec_from_dict(doc: dict) -> RuleSpec:
    variant = RuleVariant(doc["variant"])
    common = {"positions": tuple(doc.get("positions", ()))}
    if variant is RuleVariant.CAESAR:
        return RuleSpec(
            variant,
            deltas=tuple(doc["deltas"]),
            alphabet_mode=AlphabetMode(doc.get("alphabet_mode", "Letters26")),
            cycle_length=doc.get("cycle_length"),
            **common,
        )
    if variant is RuleVariant.SPACE:
        return RuleSpec(
            variant, space_schedule=tuple((p, r) for p, r in doc["space_schedule"]), **common
        )
    if variant is RuleVariant.LEET:
        return RuleSpec(
            variant,
            leet_map=tuple(doc.get("leet_map", DEFAULT_LEET_MAP).items()),
            leet_schedule=tuple(tuple(step) for step in doc["leet_schedule"]),
            **common,
        )
    if variant is RuleVariant.SPECIAL_CHAR:
        return RuleSpec(
            variant,
            charset=tuple(doc["charset"]),
            cycle_length=doc.get("cycle_length"),
            **common,
        )
    if variant is RuleVariant.CHAR_CASE:
        return RuleSpec(
            variant, case_schedule=tuple(tuple(step) for step in doc["case_schedule"]), **common
        )
    if variant is RuleVariant.MIXED:
        return RuleSpec(variant, children=tuple(spec_from_dict(c) for c in doc["children"]))
    if variant is RuleVariant.TIME:
        return RuleSpec(variant, offset_minutes=int(doc.get("offset_minutes", 0)))
    return RuleSpec(RuleVariant.STATIC)


def state_to_dict(state: RuleState) -> dict:
    return {"login_index": state.login_index, "cursors": list(state.cursors)}


def state_from_dict(doc: dict) -> RuleState:
    return RuleState(login_index=int(doc["login_index"]), cursors=tuple(doc["cursors"]))
