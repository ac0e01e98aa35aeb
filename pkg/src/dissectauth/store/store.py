"""Durable profile store: append-only NDJSON event log plus whole-state snapshots.

Every mutation is expressed as an event.  The live path appends the event to
the log and folds it into memory with the same pure fold that recovery uses,
so replaying the log over the latest snapshot (or from scratch) reproduces the
exact same profile state as the continuous run.

Events carry every non-deterministic input (salts, sealed boxes, fresh
commitments), which keeps replay free of randomness and crypto divergence.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from ..dissection import BlockScheme, commit
from ..errors import NotFound, StorageError, UserExists
from ..rules import (
    DecoySpec,
    RuleSpec,
    RuleVariant,
    advance,
    derive_expected,
    dry_run_cycle,
    initial_state,
    spec_from_dict,
    spec_to_dict,
    state_from_dict,
    state_to_dict,
)
from ..telemetry.extraction import value_classes
from ..telemetry.history import (
    CaptchaTypeStats,
    DeviceSeen,
    GlobalStats,
    ProfileHistory,
    ProfileSummary,
    update_history,
)
from ..telemetry.session import SessionAggregate
from .records import (
    AttemptLogEntry,
    UserProfile,
    entry_from_dict,
    entry_to_dict,
    profile_from_dict,
    profile_to_dict,
    record_from_dict,
    record_to_dict,
    validate_entry,
)
from .vault import SecretVault

import secrets as _secrets

STRIKE_HORIZON_S = 24 * 3600.0
RULE_FALSE_POSITIVE_WINDOW_S = 24 * 3600.0
CAPTCHA_TYPE_DEFAULT = "image-grid"


@dataclass
class SessionSummary:
    """Permanent-scope slice of a session aggregate, as logged on close."""

    user_id: str
    session_id: str
    started_at: float
    closed_at: float
    matched_count: int
    failed_count: int
    ambient_total: int
    distant_total: int
    case_alt_total: int
    special_wrong_total: int
    deviation_total: int
    backspace_total: int
    backspace_dwells: list[float]
    position_error_freq: dict[int, int]
    distant_positions: list[int]
    failed_attempt_timestamps: list[float]
    captcha_shown: int
    captcha_solved: int
    captcha_time_ms: float
    device_digest: str | None

    @classmethod
    def from_aggregate(cls, session: SessionAggregate, closed_at: float,
                       device_digest: str | None) -> "SessionSummary":
        return cls(
            user_id=session.user_id,
            session_id=session.session_id,
            started_at=session.started_at,
            closed_at=closed_at,
            matched_count=session.matched_count,
            failed_count=session.failed_count,
            ambient_total=session.ambient_total,
            distant_total=session.distant_total,
            case_alt_total=session.case_alt_total,
            special_wrong_total=session.special_wrong_total,
            deviation_total=session.deviation_total,
            backspace_total=session.backspace_total,
            backspace_dwells=list(session.backspace_dwells),
            position_error_freq=dict(session.position_error_freq),
            distant_positions=sorted(session.distant_positions),
            failed_attempt_timestamps=list(session.failed_attempt_timestamps),
            captcha_shown=session.captcha_shown,
            captcha_solved=session.captcha_solved,
            captcha_time_ms=session.captcha_time_ms,
            device_digest=device_digest,
        )

    def to_aggregate(self) -> SessionAggregate:
        agg = SessionAggregate(
            session_id=self.session_id, user_id=self.user_id, started_at=self.started_at
        )
        agg.matched_count = self.matched_count
        agg.failed_count = self.failed_count
        agg.ambient_total = self.ambient_total
        agg.distant_total = self.distant_total
        agg.case_alt_total = self.case_alt_total
        agg.special_wrong_total = self.special_wrong_total
        agg.deviation_total = self.deviation_total
        agg.backspace_total = self.backspace_total
        agg.backspace_dwells = list(self.backspace_dwells)
        agg.position_error_freq.update(self.position_error_freq)
        agg.distant_positions = set(self.distant_positions)
        agg.failed_attempt_timestamps = list(self.failed_attempt_timestamps)
        agg.captcha_shown = self.captcha_shown
        agg.captcha_solved = self.captcha_solved
        agg.captcha_time_ms = self.captcha_time_ms
        return agg

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "session_id": self.session_id,
            "started_at": self.started_at,
            "closed_at": self.closed_at,
            "matched_count": self.matched_count,
            "failed_count": self.failed_count,
            "ambient_total": self.ambient_total,
            "distant_total": self.distant_total,
            "case_alt_total": self.case_alt_total,
            "special_wrong_total": self.special_wrong_total,
            "deviation_total": self.deviation_total,
            "backspace_total": self.backspace_total,
            "backspace_dwells": self.backspace_dwells,
            "position_error_freq": {str(k): v for k, v in self.position_error_freq.items()},
            "distant_positions": self.distant_positions,
            "failed_attempt_timestamps": self.failed_attempt_timestamps,
            "captcha_shown": self.captcha_shown,
            "captcha_solved": self.captcha_solved,
            "captcha_time_ms": self.captcha_time_ms,
            "device_digest": self.device_digest,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionSummary":
        doc = dict(doc)
        doc["position_error_freq"] = {int(k): int(v) for k, v in doc["position_error_freq"].items()}
        return cls(**doc)


def _global_stats_to_dict(g: GlobalStats) -> dict:
    return {
        "rule_chosen": g.rule_chosen,
        "rule_creation_chosen": g.rule_creation_chosen,
        "rule_embraced": g.rule_embraced,
        "rule_left": g.rule_left,
        "rule_returns": g.rule_returns,
        "rule_false_positives": g.rule_false_positives,
        "dynamic_to_static": g.dynamic_to_static,
        "rule_failures_session": g.rule_failures_session,
        "rule_failures_all_time": g.rule_failures_all_time,
        "rule_tenure_ms": g.rule_tenure_ms.to_dict(),
        "captcha": {k: v.to_dict() for k, v in g.captcha.items()},
        "ip_accounts": g.ip_accounts,
        "fingerprint_accounts": {k: sorted(v) for k, v in g.fingerprint_accounts.items()},
        "ip_failed": g.ip_failed,
    }


def _global_stats_from_dict(doc: dict) -> GlobalStats:
    from ..telemetry.history import BaselineStats

    g = GlobalStats(
        rule_chosen={k: int(v) for k, v in doc["rule_chosen"].items()},
        rule_creation_chosen={k: int(v) for k, v in doc["rule_creation_chosen"].items()},
        rule_embraced={k: int(v) for k, v in doc["rule_embraced"].items()},
        rule_left={k: int(v) for k, v in doc["rule_left"].items()},
        rule_returns=int(doc["rule_returns"]),
        rule_false_positives=int(doc["rule_false_positives"]),
        dynamic_to_static=int(doc["dynamic_to_static"]),
        rule_failures_session={k: int(v) for k, v in doc["rule_failures_session"].items()},
        rule_failures_all_time={k: int(v) for k, v in doc["rule_failures_all_time"].items()},
        rule_tenure_ms=BaselineStats.from_dict(doc["rule_tenure_ms"]),
        captcha={k: CaptchaTypeStats.from_dict(v) for k, v in doc["captcha"].items()},
        ip_accounts={k: {u: float(t) for u, t in v.items()} for k, v in doc["ip_accounts"].items()},
        fingerprint_accounts={k: set(v) for k, v in doc["fingerprint_accounts"].items()},
        ip_failed={k: int(v) for k, v in doc.get("ip_failed", {}).items()},
    )
    return g


class ProfileStore:
    """Event-sourced user profiles with per-user write exclusivity."""

    def __init__(
        self,
        root: str | Path,
        vault: SecretVault,
        default_scheme: BlockScheme = BlockScheme(),
        snapshot_every: int = 100,
    ):
        self.root = Path(root)
        self.vault = vault
        self.default_scheme = default_scheme
        self.snapshot_every = snapshot_every
        self.profiles: dict[str, UserProfile] = {}
        self.global_stats = GlobalStats()
        self.seq = 0
        self._lock = threading.RLock()
        (self.root / "log").mkdir(parents=True, exist_ok=True)
        (self.root / "snapshots").mkdir(parents=True, exist_ok=True)
        self._log_path = self.root / "log" / "events.ndjson"
        self._log_fh = None
        self.recover()

    # ----- event plumbing -----------------------------------------------

    def _append_event(self, kind: str, payload: dict) -> dict:
        self.seq += 1
        event = {"seq": self.seq, "kind": kind, "payload": payload}
        try:
            if self._log_fh is None:
                self._log_fh = open(self._log_path, "a", encoding="utf-8")
            self._log_fh.write(json.dumps(event, separators=(",", ":")) + "\n")
            self._log_fh.flush()
        except OSError as exc:
            raise StorageError(f"cannot append to event log: {exc}") from exc
        return event

    def _iter_log(self, after_seq: int = 0) -> Iterator[dict]:
        if not self._log_path.exists():
            return
        with open(self._log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["seq"] > after_seq:
                    yield event

    def _emit(self, kind: str, payload: dict) -> None:
        event = self._append_event(kind, payload)
        self._apply(event)
        if self.snapshot_every and self.seq % self.snapshot_every == 0:
            self.snapshot_all()

    # ----- folds (shared by live path and recovery) -----------------------

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "user_created":
            profile = profile_from_dict(payload["profile"])
            self.profiles[profile.user_id] = profile
            self.global_stats.note_rule_created(profile.creation_rule_name)
        elif kind == "credential_advanced":
            profile = self.profiles[payload["user_id"]]
            profile.rule_state = state_from_dict(payload["rule_state"])
            profile.dissection_record = record_from_dict(payload["dissection_record"])
            profile.logins_on_current_rule += 1
        elif kind == "rule_switched":
            self._apply_rule_switch(payload)
        elif kind == "attempt":
            self._apply_attempt(payload)
        elif kind == "session_closed":
            self._apply_session_closed(payload)
        elif kind == "challenge_passed":
            self._apply_challenge_passed(payload)
        else:
            raise StorageError(f"unknown event kind {kind!r} in log")

    def _apply_rule_switch(self, payload: dict) -> None:
        profile = self.profiles[payload["user_id"]]
        old_rule = profile.rule_spec.variant.value
        new_spec = spec_from_dict(payload["rule_spec"])
        profile.previous_rule_name = old_rule
        profile.rule_spec = new_spec
        profile.rule_state = state_from_dict(payload["rule_state"])
        profile.dissection_record = record_from_dict(payload["dissection_record"])
        profile.history.rule_changes += 1
        tenure_ms = (payload["at"] - profile.rule_set_at) * 1000.0
        profile.rule_set_at = payload["at"]
        returned = payload["returned"]
        false_positive = payload["false_positive"]
        if returned:
            profile.history.returned_to_previous_rule = True
        new_rule = new_spec.variant.value
        if new_rule == RuleVariant.STATIC.value and old_rule != RuleVariant.STATIC.value:
            profile.history.shifted_dynamic_to_static = True
        profile.logins_on_current_rule = 0
        self.global_stats.note_rule_switch(old_rule, new_rule, tenure_ms, returned, false_positive)

    def _apply_attempt(self, payload: dict) -> None:
        entry = entry_from_dict(payload["entry"])
        profile = self.profiles[entry.user_id]
        now = entry.timestamp
        self.global_stats.note_attempt_source(entry.ip, entry.device_digest, entry.user_id, now)

        if not entry.matched:
            profile.failed_window.append((now, entry.match_percentage))
            horizon = now - STRIKE_HORIZON_S
            profile.failed_window = [(t, m) for t, m in profile.failed_window if t >= horizon]
            if entry.ip and entry.ip in profile.known_ips:
                profile.history.total_failed_known_ip += 1
            self.global_stats.note_failed_attempt(entry.rule_name, entry.ip)

        delta = payload.get("length_delta")
        if delta is not None:
            if delta == 0:
                profile.history.same_length_count += 1
            else:
                profile.history.length_mismatch_count += 1
                if delta > 0:
                    profile.history.length_exceeded_count += 1
                else:
                    profile.history.length_fell_short_count += 1
        for p in payload.get("case_alt_positions", ()):
            profile.history.position_case_alt[p] = profile.history.position_case_alt.get(p, 0) + 1
        for p in payload.get("ambient_positions", ()):
            profile.history.position_ambient[p] = profile.history.position_ambient.get(p, 0) + 1
        for p in payload.get("special_wrong_positions", ()):
            profile.history.position_special_wrong[p] = (
                profile.history.position_special_wrong.get(p, 0) + 1
            )

        if payload.get("locked_until") is not None:
            profile.locked_until = payload["locked_until"]

        if entry.credential_advanced:
            profile.rule_state = state_from_dict(payload["rule_state"])
            profile.dissection_record = record_from_dict(payload["dissection_record"])
            profile.logins_on_current_rule += 1

        if entry.decision == "Allow":
            if entry.device_digest:
                seen = profile.known_devices.get(entry.device_digest)
                if seen is None:
                    profile.known_devices[entry.device_digest] = DeviceSeen(
                        first_seen=now, last_seen=now, success_count=1
                    )
                else:
                    seen.last_seen = now
                    seen.success_count += 1
            if entry.ip:
                profile.known_ips[entry.ip] = profile.known_ips.get(entry.ip, 0) + 1
            if entry.geo_region:
                profile.history.region_success[entry.geo_region] = (
                    profile.history.region_success.get(entry.geo_region, 0) + 1
                )
            if entry.lat is not None and entry.lon is not None:
                profile.last_geo = (entry.lat, entry.lon, now)
            locale = payload.get("locale")
            if locale is not None:
                profile.last_locale = locale
            kb = payload.get("keyboard_language")
            if kb is not None:
                profile.last_keyboard_language = kb
            minute_of_day = payload.get("minute_of_day")
            if minute_of_day is not None:
                profile.history.success_minute_of_day.fold(float(minute_of_day))
            self._fold_baselines(profile, entry.feature_values)

    def _fold_baselines(self, profile: UserProfile, values: dict[int, object]) -> None:
        from ..risk import Outcome, update_baselines

        update_baselines(profile.baselines, values, Outcome.ALLOW)

    def _apply_session_closed(self, payload: dict) -> None:
        summary = SessionSummary.from_dict(payload["summary"])
        profile = self.profiles[summary.user_id]
        update_history(profile.history, summary.to_aggregate())
        if summary.device_digest:
            duration = max(0.0, (summary.closed_at - summary.started_at) * 1000.0)
            profile.history.device_time_ms[summary.device_digest] = (
                profile.history.device_time_ms.get(summary.device_digest, 0.0) + duration
            )
        if summary.captcha_shown:
            for stats in (
                profile.history.captcha.setdefault(CAPTCHA_TYPE_DEFAULT, CaptchaTypeStats()),
                self.global_stats.captcha.setdefault(CAPTCHA_TYPE_DEFAULT, CaptchaTypeStats()),
            ):
                stats.shown += summary.captcha_shown
                stats.solved += summary.captcha_solved
                stats.time_ms_total += summary.captcha_time_ms

    def _apply_challenge_passed(self, payload: dict) -> None:
        profile = self.profiles[payload["user_id"]]
        values = {int(k): v for k, v in payload["feature_values"].items()}
        self._fold_baselines(profile, values)

    # ----- public operations ----------------------------------------------

    def create_user(
        self,
        user_id: str,
        base_secret: str,
        rule_spec: RuleSpec,
        decoy: DecoySpec,
        scheme: BlockScheme | None = None,
        now: float = 0.0,
    ) -> UserProfile:
        with self._lock:
            if user_id in self.profiles:
                raise UserExists(user_id)
            scheme = scheme or self.default_scheme
            dry_run_cycle(rule_spec, base_secret)  # raises InvalidRule on bad combos
            governed = rule_spec.governed_positions()
            if decoy.enabled and decoy.decoy_positions & governed:
                from ..errors import InvalidRule

                raise InvalidRule("decoy positions must not overlap rule positions")
            state = initial_state(rule_spec)
            from datetime import datetime, timezone

            expected, _ = derive_expected(
                base_secret, rule_spec, state, datetime.fromtimestamp(now, tz=timezone.utc)
            )
            salt = _secrets.token_bytes(16)
            record = commit(expected, scheme, salt)
            profile = UserProfile(
                user_id=user_id,
                dissection_record=record,
                sealed_base_secret=self.vault.seal(base_secret),
                rule_spec=rule_spec,
                rule_state=state,
                decoy=decoy,
                history=ProfileHistory(),
                created_at=now,
                rule_set_at=now,
                creation_rule_name=rule_spec.variant.value,
                base_secret_classes="multi" if len(value_classes(base_secret)) > 1 else "single",
            )
            self._emit("user_created", {"profile": profile_to_dict(profile)})
            return self.profiles[user_id]

    def switch_rule(
        self, user_id: str, new_spec: RuleSpec, decoy: DecoySpec | None, now: float
    ) -> UserProfile:
        with self._lock:
            profile = self.load(user_id)
            base = self.vault.open(profile.sealed_base_secret)
            dry_run_cycle(new_spec, base)
            state = initial_state(new_spec)
            from datetime import datetime, timezone

            expected, _ = derive_expected(
                base, new_spec, state, datetime.fromtimestamp(now, tz=timezone.utc)
            )
            record = commit(expected, profile.dissection_record.scheme, profile.dissection_record.user_salt)
            returned = profile.previous_rule_name == new_spec.variant.value
            # a switch-back within a day with at most one login on the abandoned
            # rule is curiosity, not adoption
            false_positive = (
                returned
                and now - profile.rule_set_at <= RULE_FALSE_POSITIVE_WINDOW_S
                and profile.logins_on_current_rule <= 1
            )
            payload = {
                "user_id": user_id,
                "rule_spec": spec_to_dict(new_spec),
                "rule_state": state_to_dict(state),
                "dissection_record": record_to_dict(record),
                "at": now,
                "returned": returned,
                "false_positive": false_positive,
            }
            if decoy is not None:
                governed = new_spec.governed_positions()
                if decoy.enabled and decoy.decoy_positions & governed:
                    from ..errors import InvalidRule

                    raise InvalidRule("decoy positions must not overlap rule positions")
                self.profiles[user_id].decoy = decoy
            self._emit("rule_switched", payload)
            return self.profiles[user_id]

    def advanced_state_and_record(self, profile: UserProfile, login_time) -> tuple:
        """Next schedule state and the commitment for its expected secret."""
        base = self.vault.open(profile.sealed_base_secret)
        new_state = advance(profile.rule_spec, profile.rule_state)
        expected, _ = derive_expected(base, profile.rule_spec, new_state, login_time)
        record = commit(
            expected, profile.dissection_record.scheme, profile.dissection_record.user_salt
        )
        return new_state, record

    def advance_credential(self, user_id: str, login_time) -> UserProfile:
        """Step the schedule after a successful login and refresh the commitment.

        The attempt pipeline folds this through its own attempt event; this
        standalone form exists for flows that conclude outside an attempt
        (e.g. challenge completion handled elsewhere) and for direct use.
        """
        with self._lock:
            profile = self.load(user_id)
            new_state, record = self.advanced_state_and_record(profile, login_time)
            self._emit(
                "credential_advanced",
                {
                    "user_id": user_id,
                    "rule_state": state_to_dict(new_state),
                    "dissection_record": record_to_dict(record),
                },
            )
            return self.profiles[user_id]

    def record_attempt(self, entry: AttemptLogEntry, **payload_extra) -> None:
        """Durably log one evaluated attempt and fold it into the profile."""
        with self._lock:
            validate_entry(entry)
            if entry.user_id not in self.profiles:
                raise NotFound(entry.user_id)
            payload = {"entry": entry_to_dict(entry), **payload_extra}
            self._emit("attempt", payload)

    # spec name for the logging operation
    def append_attempt(self, entry: AttemptLogEntry, **payload_extra) -> None:
        self.record_attempt(entry, **payload_extra)

    def close_session(self, summary: SessionSummary) -> None:
        with self._lock:
            if summary.user_id not in self.profiles:
                raise NotFound(summary.user_id)
            self._emit("session_closed", {"summary": summary.to_dict()})

    def challenge_passed(self, user_id: str, feature_values: dict[int, object]) -> None:
        with self._lock:
            self._emit(
                "challenge_passed",
                {
                    "user_id": user_id,
                    "feature_values": {str(k): v for k, v in feature_values.items()},
                },
            )

    def load(self, user_id: str) -> UserProfile:
        profile = self.profiles.get(user_id)
        if profile is None:
            raise NotFound(user_id)
        return profile

    def save(self, profile: UserProfile) -> None:
        """Persist current state; load() after save() returns an equal profile."""
        with self._lock:
            self.profiles[profile.user_id] = profile
            self.snapshot_all()

    def scan_attempts(self, user_id: str | None = None) -> list[AttemptLogEntry]:
        out = []
        for event in self._iter_log():
            if event["kind"] != "attempt":
                continue
            entry = entry_from_dict(event["payload"]["entry"])
            if user_id is None or entry.user_id == user_id:
                out.append(entry)
        return out

    def export_user(self, user_id: str) -> dict:
        """Permanent-scope history as one JSON-able document (admin/debug)."""
        profile = self.load(user_id)
        doc = profile_to_dict(profile)
        doc.pop("sealed_base_secret")
        return {
            "profile": doc,
            "attempts": [entry_to_dict(e) for e in self.scan_attempts(user_id)],
        }

    def summary_for(self, profile: UserProfile, now: float) -> ProfileSummary:
        horizon = now - STRIKE_HORIZON_S
        return ProfileSummary(
            history=profile.history,
            known_devices=profile.known_devices,
            known_ips=profile.known_ips,
            rule_name=profile.rule_spec.variant.value,
            rule_cycle=profile.rule_spec.effective_cycle(),
            rule_positions=tuple(sorted(profile.rule_spec.governed_positions())),
            decoy_enabled=profile.decoy.enabled,
            decoy_positions=tuple(sorted(profile.decoy.decoy_positions)),
            base_secret_classes=profile.base_secret_classes,
            creation_rule_name=profile.creation_rule_name,
            rule_set_at=profile.rule_set_at,
            last_locale=profile.last_locale,
            last_keyboard_language=profile.last_keyboard_language,
            last_geo=profile.last_geo,
            recent_failed_timestamps=tuple(t for t, _ in profile.failed_window if t >= horizon),
        )

    # ----- snapshots and recovery ------------------------------------------

    def snapshot_all(self) -> None:
        snap_dir = self.root / "snapshots"
        for user_id, profile in self.profiles.items():
            path = snap_dir / f"{user_id}.json"
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"profile": profile_to_dict(profile)}), encoding="utf-8")
            os.replace(tmp, path)
        gpath = snap_dir / "_global.json"
        tmp = gpath.with_suffix(".tmp")
        tmp.write_text(
            json.dumps({"seq": self.seq, "stats": _global_stats_to_dict(self.global_stats)}),
            encoding="utf-8",
        )
        os.replace(tmp, gpath)
        manifest = self.root / "snapshots" / "_manifest.json"
        tmp = manifest.with_suffix(".tmp")
        tmp.write_text(json.dumps({"seq": self.seq}), encoding="utf-8")
        os.replace(tmp, manifest)

    def recover(self) -> None:
        """Load the newest snapshot set, then replay the log tail over it."""
        with self._lock:
            self.profiles.clear()
            self.global_stats = GlobalStats()
            self.seq = 0
            manifest = self.root / "snapshots" / "_manifest.json"
            base_seq = 0
            if manifest.exists():
                base_seq = json.loads(manifest.read_text("utf-8"))["seq"]
                for path in sorted((self.root / "snapshots").glob("*.json")):
                    if path.name.startswith("_"):
                        continue
                    doc = json.loads(path.read_text("utf-8"))
                    profile = profile_from_dict(doc["profile"])
                    self.profiles[profile.user_id] = profile
                gpath = self.root / "snapshots" / "_global.json"
                if gpath.exists():
                    gdoc = json.loads(gpath.read_text("utf-8"))
                    self.global_stats = _global_stats_from_dict(gdoc["stats"])
                self.seq = base_seq
            for event in self._iter_log(after_seq=base_seq):
                self._apply(event)
                self.seq = event["seq"]

    def replay_from_scratch(self) -> "ProfileStore":
        """Rebuild state purely from the event log (ignores snapshots)."""
        rebuilt = object.__new__(ProfileStore)
        rebuilt.root = self.root
        rebuilt.vault = self.vault
        rebuilt.default_scheme = self.default_scheme
        rebuilt.snapshot_every = 0
        rebuilt.profiles = {}
        rebuilt.global_stats = GlobalStats()
        rebuilt.seq = 0
        rebuilt._lock = threading.RLock()
        rebuilt._log_path = self._log_path
        rebuilt._log_fh = None
        for event in rebuilt._iter_log():
            rebuilt._apply(event)
            rebuilt.seq = event["seq"]
        return rebuilt

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None
