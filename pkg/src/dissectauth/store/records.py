"""Persisted record shapes: profiles, attempt-log entries, serialization.

Everything that reaches disk goes through here, which is where the persistence
rule is enforced: no session-ephemeral feature values, no plaintext secrets.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

from ..dissection import BlockScheme, DissectionRecord
from ..errors import SchemaViolation
from ..rules import (
    DecoySpec,
    RuleSpec,
    RuleState,
    spec_from_dict,
    spec_to_dict,
    state_from_dict,
    state_to_dict,
)
from ..telemetry.history import BaselineStats, CaptchaTypeStats, DeviceSeen, ProfileHistory
from ..telemetry.registry import descriptor_by_id, ephemeral_ids
from .vault import SealedBox


@dataclass
class UserProfile:
    user_id: str
    dissection_record: DissectionRecord
    sealed_base_secret: SealedBox
    rule_spec: RuleSpec
    rule_state: RuleState
    decoy: DecoySpec
    history: ProfileHistory
    baselines: dict[int, BaselineStats] = field(default_factory=dict)
    known_devices: dict[str, DeviceSeen] = field(default_factory=dict)
    known_ips: dict[str, int] = field(default_factory=dict)
    created_at: float = 0.0
    rule_set_at: float = 0.0
    creation_rule_name: str = "Static"
    previous_rule_name: str | None = None
    logins_on_current_rule: int = 0
    base_secret_classes: str = "single"
    locked_until: float | None = None
    failed_window: list[tuple[float, float]] = field(default_factory=list)
    last_locale: str | None = None
    last_keyboard_language: str | None = None
    last_geo: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class AttemptLogEntry:
    """Append-only record of one evaluated attempt (permanent scope only)."""

    user_id: str
    session_id: str
    attempt_id: str
    timestamp: float
    decision: str
    matched: bool
    match_percentage: float
    mismatch_position_count: int
    rule_deviated: bool
    decoy_violated: bool
    rule_name: str
    credential_advanced: bool
    feature_values: dict[int, object] = field(default_factory=dict)
    device_digest: str | None = None
    ip: str | None = None
    geo_region: str | None = None
    lat: float | None = None
    lon: float | None = None
    reason_codes: tuple[str, ...] = ()


def validate_entry(entry: AttemptLogEntry) -> None:
    """SchemaViolation when an entry would persist ephemeral-tagged values."""
    bad = sorted(set(entry.feature_values) & ephemeral_ids())
    if bad:
        names = ", ".join(repr(descriptor_by_id(b).name) for b in bad)
        raise SchemaViolation(f"attempt entry carries session-ephemeral features: {names}")
    for feature_id in entry.feature_values:
        try:
            descriptor_by_id(feature_id)
        except KeyError:
            raise SchemaViolation(f"unknown feature id {feature_id}") from None


# --- JSON helpers -----------------------------------------------------------

def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(text: str) -> bytes:
    return base64.b64decode(text)


def record_to_dict(record: DissectionRecord) -> dict:
    return {
        "user_salt": _b64(record.user_salt),
        "scheme": {
            "width": record.scheme.width,
            "stride": record.scheme.stride,
            "min_blocks": record.scheme.min_blocks,
        },
        "block_digests": [_b64(d) for d in record.block_digests],
        "full_digest": _b64(record.full_digest),
        "length": record.length,
        "algorithm": record.algorithm,
    }


def record_from_dict(doc: dict) -> DissectionRecord:
    return DissectionRecord(
        user_salt=_unb64(doc["user_salt"]),
        scheme=BlockScheme(**doc["scheme"]),
        block_digests=tuple(_unb64(d) for d in doc["block_digests"]),
        full_digest=_unb64(doc["full_digest"]),
        length=int(doc["length"]),
        algorithm=doc["algorithm"],
    )


def _int_keyed(doc: dict) -> dict[int, int]:
    return {int(k): int(v) for k, v in doc.items()}


def history_to_dict(h: ProfileHistory) -> dict:
    return {
        "total_success": h.total_success,
        "total_failed": h.total_failed,
        "total_failed_known_ip": h.total_failed_known_ip,
        "session_count": h.session_count,
        "length_mismatch_count": h.length_mismatch_count,
        "length_exceeded_count": h.length_exceeded_count,
        "length_fell_short_count": h.length_fell_short_count,
        "same_length_count": h.same_length_count,
        "position_error_freq": h.position_error_freq,
        "position_case_alt": h.position_case_alt,
        "position_ambient": h.position_ambient,
        "position_special_wrong": h.position_special_wrong,
        "position_distant": h.position_distant,
        "ambient_total": h.ambient_total,
        "distant_total": h.distant_total,
        "case_alt_total": h.case_alt_total,
        "special_wrong_total": h.special_wrong_total,
        "deviation_total": h.deviation_total,
        "rule_changes": h.rule_changes,
        "returned_to_previous_rule": h.returned_to_previous_rule,
        "shifted_dynamic_to_static": h.shifted_dynamic_to_static,
        "mistake_sessions": h.mistake_sessions,
        "e_hist": h.e_hist,
        "backspace_per_session": h.backspace_per_session.to_dict(),
        "backspace_dwell": h.backspace_dwell.to_dict(),
        "failures_per_session": h.failures_per_session.to_dict(),
        "failed_interval_s": h.failed_interval_s.to_dict(),
        "success_minute_of_day": h.success_minute_of_day.to_dict(),
        "captcha": {k: v.to_dict() for k, v in h.captcha.items()},
        "device_time_ms": h.device_time_ms,
        "region_success": h.region_success,
        "trend": h.trend,
    }


def history_from_dict(doc: dict) -> ProfileHistory:
    h = ProfileHistory(
        total_success=doc["total_success"],
        total_failed=doc["total_failed"],
        total_failed_known_ip=doc["total_failed_known_ip"],
        session_count=doc["session_count"],
        length_mismatch_count=doc["length_mismatch_count"],
        length_exceeded_count=doc["length_exceeded_count"],
        length_fell_short_count=doc["length_fell_short_count"],
        same_length_count=doc["same_length_count"],
        position_error_freq=_int_keyed(doc["position_error_freq"]),
        position_case_alt=_int_keyed(doc["position_case_alt"]),
        position_ambient=_int_keyed(doc["position_ambient"]),
        position_special_wrong=_int_keyed(doc["position_special_wrong"]),
        position_distant=_int_keyed(doc["position_distant"]),
        ambient_total=doc["ambient_total"],
        distant_total=doc["distant_total"],
        case_alt_total=doc["case_alt_total"],
        special_wrong_total=doc["special_wrong_total"],
        deviation_total=doc["deviation_total"],
        rule_changes=doc["rule_changes"],
        returned_to_previous_rule=doc["returned_to_previous_rule"],
        shifted_dynamic_to_static=doc["shifted_dynamic_to_static"],
        mistake_sessions=[list(map(int, s)) for s in doc["mistake_sessions"]],
        e_hist=list(map(int, doc["e_hist"])),
        backspace_per_session=BaselineStats.from_dict(doc["backspace_per_session"]),
        backspace_dwell=BaselineStats.from_dict(doc["backspace_dwell"]),
        failures_per_session=BaselineStats.from_dict(doc["failures_per_session"]),
        failed_interval_s=BaselineStats.from_dict(doc["failed_interval_s"]),
        success_minute_of_day=BaselineStats.from_dict(doc["success_minute_of_day"]),
        captcha={k: CaptchaTypeStats.from_dict(v) for k, v in doc["captcha"].items()},
        device_time_ms={k: float(v) for k, v in doc["device_time_ms"].items()},
        region_success={k: int(v) for k, v in doc["region_success"].items()},
        trend=dict(doc["trend"]),
    )
    return h


def profile_to_dict(p: UserProfile) -> dict:
    return {
        "user_id": p.user_id,
        "dissection_record": record_to_dict(p.dissection_record),
        "sealed_base_secret": p.sealed_base_secret.to_dict(),
        "rule_spec": spec_to_dict(p.rule_spec),
        "rule_state": state_to_dict(p.rule_state),
        "decoy": {
            "decoy_positions": sorted(p.decoy.decoy_positions),
            "enabled": p.decoy.enabled,
        },
        "history": history_to_dict(p.history),
        "baselines": {str(k): v.to_dict() for k, v in p.baselines.items()},
        "known_devices": {k: v.to_dict() for k, v in p.known_devices.items()},
        "known_ips": p.known_ips,
        "created_at": p.created_at,
        "rule_set_at": p.rule_set_at,
        "creation_rule_name": p.creation_rule_name,
        "previous_rule_name": p.previous_rule_name,
        "logins_on_current_rule": p.logins_on_current_rule,
        "base_secret_classes": p.base_secret_classes,
        "locked_until": p.locked_until,
        "failed_window": p.failed_window,
        "last_locale": p.last_locale,
        "last_keyboard_language": p.last_keyboard_language,
        "last_geo": list(p.last_geo) if p.last_geo else None,
    }


def profile_from_dict(doc: dict) -> UserProfile:
    return UserProfile(
        user_id=doc["user_id"],
        dissection_record=record_from_dict(doc["dissection_record"]),
        sealed_base_secret=SealedBox.from_dict(doc["sealed_base_secret"]),
        rule_spec=spec_from_dict(doc["rule_spec"]),
        rule_state=state_from_dict(doc["rule_state"]),
        decoy=DecoySpec(
            decoy_positions=frozenset(doc["decoy"]["decoy_positions"]),
            enabled=doc["decoy"]["enabled"],
        ),
        history=history_from_dict(doc["history"]),
        baselines={int(k): BaselineStats.from_dict(v) for k, v in doc["baselines"].items()},
        known_devices={k: DeviceSeen.from_dict(v) for k, v in doc["known_devices"].items()},
        known_ips={k: int(v) for k, v in doc["known_ips"].items()},
        created_at=doc["created_at"],
        rule_set_at=doc["rule_set_at"],
        creation_rule_name=doc["creation_rule_name"],
        previous_rule_name=doc["previous_rule_name"],
        logins_on_current_rule=doc["logins_on_current_rule"],
        base_secret_classes=doc["base_secret_classes"],
        locked_until=doc["locked_until"],
        failed_window=[(float(t), float(m)) for t, m in doc["failed_window"]],
        last_locale=doc["last_locale"],
        last_keyboard_language=doc["last_keyboard_language"],
        last_geo=tuple(doc["last_geo"]) if doc["last_geo"] else None,
    )


def entry_to_dict(entry: AttemptLogEntry) -> dict:
    out = {
        "user_id": entry.user_id,
        "session_id": entry.session_id,
        "attempt_id": entry.attempt_id,
        "timestamp": entry.timestamp,
        "decision": entry.decision,
        "matched": entry.matched,
        "match_percentage": entry.match_percentage,
        "mismatch_position_count": entry.mismatch_position_count,
        "rule_deviated": entry.rule_deviated,
        "decoy_violated": entry.decoy_violated,
        "rule_name": entry.rule_name,
        "credential_advanced": entry.credential_advanced,
        "feature_values": {str(k): _jsonable(v) for k, v in entry.feature_values.items()},
        "device_digest": entry.device_digest,
        "ip": entry.ip,
        "geo_region": entry.geo_region,
        "lat": entry.lat,
        "lon": entry.lon,
        "reason_codes": list(entry.reason_codes),
    }
    return out


def entry_from_dict(doc: dict) -> AttemptLogEntry:
    return AttemptLogEntry(
        user_id=doc["user_id"],
        session_id=doc["session_id"],
        attempt_id=doc["attempt_id"],
        timestamp=float(doc["timestamp"]),
        decision=doc["decision"],
        matched=bool(doc["matched"]),
        match_percentage=float(doc["match_percentage"]),
        mismatch_position_count=int(doc["mismatch_position_count"]),
        rule_deviated=bool(doc["rule_deviated"]),
        decoy_violated=bool(doc["decoy_violated"]),
        rule_name=doc["rule_name"],
        credential_advanced=bool(doc["credential_advanced"]),
        feature_values={int(k): _from_jsonable(int(k), v) for k, v in doc["feature_values"].items()},
        device_digest=doc.get("device_digest"),
        ip=doc.get("ip"),
        geo_region=doc.get("geo_region"),
        lat=doc.get("lat"),
        lon=doc.get("lon"),
        reason_codes=tuple(doc.get("reason_codes", ())),
    )


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, float) and value == float("inf"):
        return "Infinity"
    return value


def _from_jsonable(feature_id: int, value):
    from ..telemetry.registry import ValueKind

    if value == "Infinity":
        return float("inf")
    if isinstance(value, list):
        return tuple(value)
    desc = descriptor_by_id(feature_id)
    if desc.value_kind in (ValueKind.REAL, ValueKind.DURATION_MS, ValueKind.PERCENTAGE) and isinstance(value, int):
        return float(value)
    return value
