"""Attempt-evaluation pipeline wiring all engines together.

Flow per attempt: load profile -> verify against the schedule-derived secret ->
extract features -> score -> decide -> (on Allow) advance the credential and
fold baselines -> append to the attempt log -> respond.  All clock reads go
through an injected callable so tests and the simulator own time.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from datetime import datetime, timezone
from statistics import median
from typing import Callable

from ..errors import InvalidRule, LockedOut
from ..risk import (
    AttemptState,
    ChallengeKind,
    Decision,
    Outcome,
    decide,
    score,
)
from ..rules import (
    RuleSpec,
    spec_from_dict,
    state_to_dict,
    verify_attempt,
)
from ..store import (
    AttemptLogEntry,
    LiveSession,
    PendingChallenge,
    ProfileStore,
    SessionStore,
    SessionSummary,
)
from ..store.records import record_to_dict
from ..telemetry import (
    AttemptContext,
    DeviceContext,
    GeoContext,
    IpReputation,
    NetworkContext,
    RawEvent,
    analyze_stream,
    extract_attempt_features,
    note_attempt,
    update_session,
)
from ..telemetry.extraction import classify_diff, value_classes
from .config import AppConfig
from .schemas import (
    AttemptRequest,
    AttemptResponse,
    ChallengeAnswerResponse,
    ChallengeDescriptor,
    ContextIn,
    PreviewResponse,
    PreviewStep,
)

Clock = Callable[[], datetime]

MAX_CHALLENGE_TRIES = 3
SPECIAL_CHARS = set("!@#$%^&*()_+-=[]{}|\\;:'\",.<>/?`~ ")

CHALLENGE_PROMPTS = {
    ChallengeKind.RULE_NAME_QUESTION: "Name the dynamic rule configured on this account.",
    ChallengeKind.ROTATION_THRESHOLD_QUESTION: "After how many logins does your rule schedule repeat?",
    ChallengeKind.CAPTCHA: "Solve the challenge issued by the external provider.",
}


def system_clock() -> datetime:
    return datetime.now(timezone.utc)


class SessionError(Exception):
    """Session token unknown, expired, or bound to a different user."""


class ChallengeStateError(Exception):
    """No challenge is pending for this session."""


@dataclass
class AttemptOutput:
    response: AttemptResponse
    decision: Decision


class AuthService:
    """Single-process façade over the store, engines, and session state."""

    def __init__(self, config: AppConfig, store: ProfileStore, clock: Clock = system_clock):
        self.config = config
        self.store = store
        self.clock = clock
        self.sessions = SessionStore(ttl_s=config.session_ttl_s)
        self._idempotent: OrderedDict[tuple[str, str], AttemptResponse] = OrderedDict()
        self._lock = threading.RLock()

    # ----- session plumbing -------------------------------------------------

    def open_session(self, username: str) -> LiveSession:
        self.store.load(username)  # NotFound propagates
        now = self.clock().timestamp()
        self._sweep_expired(now)
        return self.sessions.open(username, now)

    def _sweep_expired(self, now: float) -> None:
        for dead in self.sessions.expired(now):
            self._fold_session(dead, now)

    def _fold_session(self, live: LiveSession, now: float) -> None:
        if live.aggregate.attempt_count == 0 or live.aggregate.closed:
            return
        live.aggregate.closed = True
        summary = SessionSummary.from_aggregate(live.aggregate, now, live.device_digest)
        self.store.close_session(summary)

    def _require_session(self, token: str, username: str) -> LiveSession:
        now = self.clock().timestamp()
        self._sweep_expired(now)
        live = self.sessions.get(token, now)
        if live is None:
            raise SessionError("session token unknown or expired")
        if live.aggregate.user_id != username:
            raise SessionError("session belongs to a different user")
        return live

    # ----- the attempt pipeline ----------------------------------------------

    def evaluate_attempt(self, request: AttemptRequest) -> AttemptOutput:
        with self._lock:
            live = self._require_session(request.session_token, request.username)
            profile = self.store.load(request.username)
            cache_key = (request.username, request.attempt_id)
            cached = self._idempotent.get(cache_key)
            if cached is not None:
                return AttemptOutput(cached, Decision(cached.outcome, None, tuple(cached.reason_codes)))

            now = self.clock()
            now_s = now.timestamp()
            if profile.locked_until is not None and now_s < profile.locked_until:
                raise LockedOut(f"locked until {profile.locked_until}")

            events = [
                RawEvent.from_wire(e.model_dump(exclude_none=True)) for e in request.events
            ]
            context = _context_from_wire(request.context)
            candidate = request.secret_candidate

            matched, comparison, report = verify_attempt(
                candidate,
                request.time_value,
                self.store.vault.handle(profile.sealed_base_secret),
                profile.rule_spec,
                profile.rule_state,
                profile.decoy,
                now,
                clock_skew_tolerance_min=self.config.clock_skew_tolerance_min,
                record=profile.dissection_record,
            )

            stats = analyze_stream(events)
            summary_view = self.store.summary_for(profile, now_s)
            fv = extract_attempt_features(
                events,
                context,
                comparison,
                report,
                live.aggregate,
                summary_view,
                candidate=candidate,
                matched=matched,
                login_time=now,
                attempt_id=request.attempt_id,
                global_stats=self.store.global_stats,
                stats=stats,
            )

            risk = score(comparison, report, fv, profile.baselines, self.config.risk)
            window = [
                (t, m)
                for t, m in profile.failed_window
                if t >= now_s - self.config.risk.lock_window_s
            ]
            matches = [m for _, m in window]
            if not matched:
                matches.append(comparison.match_percentage)
            state = AttemptState(
                credential_matched=matched,
                failed_in_window=len(window) + (0 if matched else 1),
                window_match_median=median(matches) if matches else None,
            )
            decision = decide(risk, state, self.config.risk)

            response = self._finalize(
                request, live, profile, now, comparison, report, fv, risk, decision,
                matched, candidate, stats, context,
            )
            self._remember(cache_key, response)
            return AttemptOutput(response, decision)

    def _finalize(
        self, request, live, profile, now, comparison, report, fv, risk, decision,
        matched, candidate, stats, context,
    ) -> AttemptResponse:
        now_s = now.timestamp()
        previous = live.aggregate.attempts[-1] if live.aggregate.attempts else None
        diff = classify_diff(previous, candidate)
        special_wrong = tuple(
            p
            for p in sorted(comparison.mismatch_positions)
            if p <= len(candidate) and candidate[p - 1] in SPECIAL_CHARS
        )
        device_digest = context.device.fingerprint_digest()
        live.device_digest = device_digest

        payload: dict = {
            "length_delta": comparison.length_delta,
            "ambient_positions": list(diff.ambient_positions),
            "case_alt_positions": list(diff.case_alt_positions),
            "special_wrong_positions": list(special_wrong),
        }
        advanced = decision.outcome == Outcome.ALLOW
        if advanced:
            new_state, new_record = self.store.advanced_state_and_record(profile, now)
            payload["rule_state"] = state_to_dict(new_state)
            payload["dissection_record"] = record_to_dict(new_record)
            payload["minute_of_day"] = now.hour * 60 + now.minute
            if context.device.locale:
                payload["locale"] = context.device.locale
            if context.device.keyboard_language:
                payload["keyboard_language"] = context.device.keyboard_language
        if decision.outcome == Outcome.LOCK:
            payload["locked_until"] = now_s + self.config.risk.lock_window_s

        entry = AttemptLogEntry(
            user_id=request.username,
            session_id=live.aggregate.session_id,
            attempt_id=request.attempt_id,
            timestamp=now_s,
            decision=decision.outcome,
            matched=matched,
            match_percentage=comparison.match_percentage,
            mismatch_position_count=len(comparison.mismatch_positions),
            rule_deviated=report.deviated,
            decoy_violated=report.decoy_violated,
            rule_name=profile.rule_spec.variant.value,
            credential_advanced=advanced,
            feature_values=fv.permanent_values(),
            device_digest=device_digest,
            ip=context.network.ip,
            geo_region=context.geo.region_key(),
            lat=context.geo.lat,
            lon=context.geo.lon,
            reason_codes=decision.reason_codes,
        )
        self.store.record_attempt(entry, **payload)

        update_session(live.aggregate, fv)
        note_attempt(
            live.aggregate, candidate, comparison, matched, now_s,
            distant_positions=set(diff.distant_positions),
            ambient_positions=set(diff.ambient_positions),
        )
        live.aggregate.keys_pressed.extend(candidate)
        live.aggregate.value_classes_seen |= value_classes(candidate)
        if stats.captcha_shown_at is not None:
            live.aggregate.captcha_shown += 1
        if stats.captcha_solved_at is not None:
            live.aggregate.captcha_solved += 1
            if stats.captcha_shown_at is not None:
                live.aggregate.captcha_time_ms += stats.captcha_solved_at - stats.captcha_shown_at

        challenge = None
        if decision.outcome == Outcome.CHALLENGE:
            live.pending_challenge = PendingChallenge(
                kind=decision.challenge_kind,
                expected_answer=self._challenge_answer(decision.challenge_kind, profile),
                matched_attempt=matched,
                feature_values=fv.permanent_values(),
                attempt_id=request.attempt_id,
            )
            challenge = ChallengeDescriptor(
                kind=decision.challenge_kind,
                prompt=CHALLENGE_PROMPTS[decision.challenge_kind],
            )

        if decision.outcome in (Outcome.ALLOW, Outcome.LOCK):
            self._fold_session(live, now_s)
            self.sessions.close(live.token)

        return AttemptResponse(
            outcome=decision.outcome,
            challenge=challenge,
            risk_total=risk.total,
            reason_codes=list(decision.reason_codes),
            retry_allowed=decision.outcome not in (Outcome.LOCK,),
            match_percentage=comparison.match_percentage,
            attempt_id=request.attempt_id,
        )

    def _challenge_answer(self, kind: str, profile) -> str:
        if kind == ChallengeKind.RULE_NAME_QUESTION:
            return profile.rule_spec.variant.value.lower()
        if kind == ChallengeKind.ROTATION_THRESHOLD_QUESTION:
            return str(profile.rule_spec.effective_cycle())
        return "solved"  # captcha solutions are attested by the external issuer

    def answer_challenge(self, token: str, answer: str) -> ChallengeAnswerResponse:
        with self._lock:
            now = self.clock()
            now_s = now.timestamp()
            self._sweep_expired(now_s)
            live = self.sessions.get(token, now_s)
            if live is None:
                raise SessionError("session token unknown or expired")
            pending = live.pending_challenge
            if pending is None:
                raise ChallengeStateError("no challenge outstanding for this session")
            if answer.strip().lower() == pending.expected_answer.lower():
                live.pending_challenge = None
                profile = self.store.load(live.aggregate.user_id)
                if pending.matched_attempt:
                    # the challenged attempt carried the right secret: finish the login
                    new_state, new_record = self.store.advanced_state_and_record(profile, now)
                    entry = AttemptLogEntry(
                        user_id=live.aggregate.user_id,
                        session_id=live.aggregate.session_id,
                        attempt_id=pending.attempt_id + "#challenge",
                        timestamp=now_s,
                        decision=Outcome.ALLOW,
                        matched=True,
                        match_percentage=100.0,
                        mismatch_position_count=0,
                        rule_deviated=False,
                        decoy_violated=False,
                        rule_name=profile.rule_spec.variant.value,
                        credential_advanced=True,
                        feature_values=pending.feature_values,
                        device_digest=live.device_digest,
                        ip=None,
                        geo_region=None,
                        lat=None,
                        lon=None,
                        reason_codes=("CHALLENGE_PASSED",),
                    )
                    self.store.record_attempt(
                        entry,
                        rule_state=state_to_dict(new_state),
                        dissection_record=record_to_dict(new_record),
                        minute_of_day=now.hour * 60 + now.minute,
                    )
                    live.aggregate.matched_count += 1
                    self._fold_session(live, now_s)
                    self.sessions.close(live.token)
                    return ChallengeAnswerResponse(passed=True, outcome=Outcome.ALLOW)
                # challenge passed on a failed-credential attempt: baselines may
                # now learn from it, and the user keeps retrying
                self.store.challenge_passed(live.aggregate.user_id, pending.feature_values)
                return ChallengeAnswerResponse(passed=True, outcome=None)
            pending.attempt_id = pending.attempt_id  # unchanged; count the miss below
            live.recorded_responses.setdefault("_challenge_misses", {"n": 0})["n"] += 1
            misses = live.recorded_responses["_challenge_misses"]["n"]
            left = MAX_CHALLENGE_TRIES - misses
            if left <= 0:
                live.pending_challenge = None
                return ChallengeAnswerResponse(passed=False, outcome=Outcome.DENY, attempts_left=0)
            return ChallengeAnswerResponse(passed=False, outcome=None, attempts_left=left)

    # ----- previews (admin debug; also drives client-side wizard checks) -----

    def preview(self, username: str, steps: int, at: datetime | None = None) -> PreviewResponse:
        from ..rules import advance, derive_expected

        profile = self.store.load(username)
        base = self.store.vault.open(profile.sealed_base_secret)
        when = at or self.clock()
        state = profile.rule_state
        out = []
        for i in range(steps):
            expected, tv = derive_expected(base, profile.rule_spec, state, when)
            out.append(PreviewStep(step=i, expected_secret=expected, expected_time_value=tv))
            state = advance(profile.rule_spec, state)
        return PreviewResponse(username=username, steps=out)

    def _remember(self, key: tuple[str, str], response: AttemptResponse) -> None:
        self._idempotent[key] = response
        while len(self._idempotent) > 10_000:
            self._idempotent.popitem(last=False)


def _context_from_wire(ctx: ContextIn) -> AttemptContext:
    return AttemptContext(
        device=DeviceContext(**ctx.device.model_dump()),
        network=NetworkContext(
            **{
                **ctx.network.model_dump(exclude={"ip_reputation"}),
                "ip_reputation": (
                    IpReputation(ctx.network.ip_reputation)
                    if ctx.network.ip_reputation
                    else None
                ),
            }
        ),
        geo=GeoContext(**ctx.geo.model_dump()),
        client_time=ctx.client_time,
    )


def rule_spec_from_wire(doc: dict) -> RuleSpec:
    try:
        return spec_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidRule(str(exc)) from exc
