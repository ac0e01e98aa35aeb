"""Per-session working state.

The aggregate lives only in the in-memory session store.  It carries the raw
material later attempts are diffed against (candidate strings, per-position
inputs) — exactly the data that must be purged when the session closes — plus
non-secret counters that fold into the user's history afterwards.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..dissection import ComparisonResult
from ..errors import SessionMismatch
from .registry import fid
from .vector import FeatureVector


@dataclass
class SessionAggregate:
    session_id: str
    user_id: str
    started_at: float  # unix seconds, server clock

    attempt_count: int = 0
    failed_count: int = 0
    matched_count: int = 0
    last_attempt_at: float | None = None
    success_elapsed_ms: float | None = None
    closed: bool = False

    # --- session-ephemeral: purged with the session, never persisted ---
    attempts: list[str] = field(default_factory=list)
    first_failed_attempt: str | None = None
    position_inputs: dict[int, list[str]] = field(default_factory=dict)
    distant_history: dict[int, list[str]] = field(default_factory=dict)
    value_classes_seen: set[str] = field(default_factory=set)
    multiclass_positions: set[int] = field(default_factory=set)
    keys_pressed: list[str] = field(default_factory=list)

    # --- permanent-scope aggregates (summarized into history on close) ---
    match_history: list[float] = field(default_factory=list)
    mismatch_history: list[frozenset[int]] = field(default_factory=list)
    mistake_order: list[int] = field(default_factory=list)
    position_error_freq: Counter = field(default_factory=Counter)
    position_first_seen: dict[int, int] = field(default_factory=dict)
    position_fixed_after: dict[int, int] = field(default_factory=dict)
    backspace_total: int = 0
    ambient_total: int = 0
    distant_total: int = 0
    case_alt_total: int = 0
    special_wrong_total: int = 0
    deviation_total: int = 0
    distant_positions: set[int] = field(default_factory=set)
    ambient_of_distant_count: int = 0
    correct_appearances: int = 0
    correct_positions: set[int] = field(default_factory=set)
    wrong_tries_before_correct: int | None = None
    first_correct_was_first_attempt: bool | None = None
    dwell_means: list[float] = field(default_factory=list)
    flight_means: list[float] = field(default_factory=list)
    backspace_dwells: list[float] = field(default_factory=list)
    captcha_shown: int = 0
    captcha_solved: int = 0
    captcha_time_ms: float = 0.0
    ambient_led_to_success: bool = False
    distant_led_to_success: bool = False
    failed_attempt_timestamps: list[float] = field(default_factory=list)


def update_session(session: SessionAggregate, fv: FeatureVector) -> SessionAggregate:
    """Fold one attempt's feature vector into the session counters."""
    if fv.session_id != session.session_id:
        raise SessionMismatch(
            f"vector belongs to session {fv.session_id!r}, not {session.session_id!r}"
        )

    def val(name: str, default=0):
        v = fv.values.get(fid(name))
        return default if v is None else v

    session.attempt_count += 1
    session.failed_count = int(
        val("Number of failed logins in a session", session.failed_count)
    )
    session.backspace_total += int(
        val("Number of times the backspace button was used in a complete password")
    )
    session.ambient_total += int(
        val("Number of times ambient values are entered until a single login button pressed")
    )
    session.distant_total += int(
        val("Total position numbers where distant values have been entered until a single login button is pressed")
    )
    session.case_alt_total += int(
        val("Number of times character case alteration until a single login button press")
    )
    session.special_wrong_total += int(
        val("Number of times wrong special character inputs until a single login button is pressed")
    )
    if val("Deviated from the rule", False):
        session.deviation_total += 1
    dwell = fv.values.get(fid("Dwell time (duration key is pressed)"))
    if dwell is not None:
        session.dwell_means.append(float(dwell))
    flight = fv.values.get(fid("Flight time (interval between keys)"))
    if flight is not None:
        session.flight_means.append(float(flight))
    bs_dwell = fv.values.get(fid("Dwell time for the backspace button"))
    if bs_dwell is not None:
        session.backspace_dwells.append(float(bs_dwell))
    elapsed = fv.values.get(
        fid("Elapsed time from initiation of login attempt until successful authentication")
    )
    if elapsed is not None:
        session.success_elapsed_ms = float(elapsed)
    return session


def note_attempt(
    session: SessionAggregate,
    candidate: str,
    comparison: ComparisonResult,
    matched: bool,
    at_seconds: float,
    distant_positions: set[int] | None = None,
    ambient_positions: set[int] | None = None,
) -> None:
    """Record the raw attempt so later attempts in this session can be diffed.

    Candidate strings and per-position characters are session-ephemeral; they
    exist only inside this in-memory aggregate.
    """
    session.last_attempt_at = at_seconds
    prev_mismatches = session.mismatch_history[-1] if session.mismatch_history else None

    if matched:
        session.matched_count += 1
        if session.failed_count and session.wrong_tries_before_correct is None:
            session.wrong_tries_before_correct = session.failed_count
        if ambient_positions:
            session.ambient_led_to_success = True
        if distant_positions:
            session.distant_led_to_success = True
    else:
        if session.first_failed_attempt is None:
            session.first_failed_attempt = candidate
        session.failed_attempt_timestamps.append(at_seconds)

    for p in comparison.mismatch_positions:
        session.position_error_freq[p] += 1
        if p not in session.position_first_seen:
            session.position_first_seen[p] = session.attempt_count
            session.mistake_order.append(p)
        if p <= len(candidate):
            session.position_inputs.setdefault(p, []).append(candidate[p - 1])

    if prev_mismatches is not None:
        for p in prev_mismatches - comparison.mismatch_positions:
            if p not in session.position_fixed_after:
                first = session.position_first_seen.get(p, session.attempt_count)
                session.position_fixed_after[p] = session.attempt_count - first + 1
            if not matched:
                session.correct_appearances += 1
                session.correct_positions.add(p)
                if session.first_correct_was_first_attempt is None:
                    session.first_correct_was_first_attempt = session.attempt_count == 2

    if distant_positions:
        session.distant_positions.update(distant_positions)
        for p in distant_positions:
            if p <= len(candidate):
                session.distant_history.setdefault(p, []).append(candidate[p - 1])

    session.attempts.append(candidate)
    session.match_history.append(comparison.match_percentage)
    session.mismatch_history.append(comparison.mismatch_positions)


def session_mistake_positions(session: SessionAggregate) -> frozenset[int]:
    """Union of positions judged wrong anywhere in this session."""
    return frozenset(session.position_error_freq)
