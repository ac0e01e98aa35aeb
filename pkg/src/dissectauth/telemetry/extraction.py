"""Per-attempt feature extraction.

Fills every per-attempt feature computable from the supplied inputs; session,
historical, and global scopes are read from their aggregates.  Anything the
client or profile cannot supply stays None (Unknown) — values are never
imputed.  Character-level comparisons diff the candidate against the previous
candidate (or the session's first failed attempt for the ambient flag), all of
which live only in the session-ephemeral aggregate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime

from ..dissection import ComparisonResult, KeyboardLayout, Substitution, classify_substitution, load_layout
from ..rules import RuleDeviationReport
from .context import AttemptContext
from .events import RawEvent, StreamStats, analyze_stream
from .history import GlobalStats, ProfileSummary
from .metrics import geo_velocity
from .registry import fid
from .session import SessionAggregate
from .vector import FeatureVector

_LAYOUT: KeyboardLayout | None = None

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
SPECIAL_CHARS = set("!@#$%^&*()_+-=[]{}|\\;:'\",.<>/?`~ ")
SHIFT_LONG_PRESS_MS = 250.0


def _layout() -> KeyboardLayout:
    global _LAYOUT
    if _LAYOUT is None:
        _LAYOUT = load_layout()
    return _LAYOUT


def configure_layout(path: str | None) -> None:
    """Swap the process-wide layout used for ambient/distant classification."""
    global _LAYOUT
    _LAYOUT = load_layout(path) if path else None


def char_class(ch: str) -> str:
    if ch.islower():
        return "lower"
    if ch.isupper():
        return "upper"
    if ch.isdigit():
        return "digit"
    return "special"


def value_classes(text: str) -> set[str]:
    return {char_class(c) for c in text}


def _classify(prev: str, new: str) -> Substitution:
    try:
        return classify_substitution(prev, new, _layout())
    except Exception:
        return Substitution.DISTANT


def _diff_positions(reference: str, candidate: str) -> list[tuple[int, str, str]]:
    """(position, reference char, candidate char) where the strings disagree."""
    out = []
    for i in range(min(len(reference), len(candidate))):
        if reference[i] != candidate[i]:
            out.append((i + 1, reference[i], candidate[i]))
    return out


@dataclass(frozen=True)
class DiffClassification:
    """Keyboard-space classification of how one attempt differs from the last."""

    ambient_positions: tuple[int, ...] = ()
    distant_positions: tuple[int, ...] = ()
    case_alt_positions: tuple[int, ...] = ()


def classify_diff(previous: str | None, candidate: str) -> DiffClassification:
    if previous is None:
        return DiffClassification()
    ambient, distant, case_alt = [], [], []
    for pos, old, new in _diff_positions(previous, candidate):
        if old.lower() == new.lower() and old != new:
            case_alt.append(pos)
            continue
        sub = _classify(old, new)
        if sub is Substitution.AMBIENT:
            ambient.append(pos)
        elif sub is Substitution.DISTANT:
            distant.append(pos)
    return DiffClassification(tuple(ambient), tuple(distant), tuple(case_alt))


def _trend_label(current: float, previous: float) -> str:
    if current > previous:
        return "increased"
    if current < previous:
        return "decreased"
    return "unchanged"


def _positions(values) -> tuple[int, ...]:
    return tuple(sorted(values))


def extract_attempt_features(
    events: list[RawEvent],
    context: AttemptContext,
    comparison: ComparisonResult,
    report: RuleDeviationReport,
    session: SessionAggregate,
    profile: ProfileSummary,
    *,
    candidate: str,
    matched: bool,
    login_time: datetime,
    attempt_id: str,
    global_stats: GlobalStats | None = None,
    stats: StreamStats | None = None,
) -> FeatureVector:
    fv = FeatureVector(attempt_id=attempt_id, session_id=session.session_id, user_id=session.user_id)
    v = fv.values
    if stats is None:
        stats = analyze_stream(events)

    _device_features(v, context, profile, global_stats, login_time)
    _geo_features(v, context, profile, login_time)
    _network_features(v, context)
    _temporal_features(v, profile, login_time)
    _session_history_features(v, context, profile, session, matched, login_time, stats)
    _environment_features(v, context, stats)
    _typing_features(v, stats, session, comparison, matched)
    _password_characteristics(v, candidate, comparison, session, stats, matched, profile)
    _rule_features(v, report, profile, session)
    _dissection_features(v, comparison, session, matched)
    _challenge_features(v, stats, session, profile, global_stats)
    _backspace_features(v, stats, session)
    _complexity_features(v, profile, global_stats, login_time)
    return fv


def _device_features(v, context: AttemptContext, profile, global_stats, login_time) -> None:
    d = context.device
    if d.browser:
        v[fid("Browser type/version (e.g., Chrome 123.0)")] = (
            f"{d.browser} {d.browser_version}" if d.browser_version else d.browser
        )
    if d.os:
        v[fid("Operating system and version (e.g., Windows 11, Android 14)")] = (
            f"{d.os} {d.os_version}" if d.os_version else d.os
        )
    if d.device_type:
        v[fid("Device type (e.g., desktop, mobile, tablet)")] = d.device_type
    digest = d.fingerprint_digest()
    seen = profile.known_devices.get(digest)
    prior = profile.history.device_time_ms.get(digest)
    if prior is not None:
        v[fid("Device time")] = prior
    if d.fonts_plugins_digest:
        v[fid("Installed fonts or plugins (where available)")] = d.fonts_plugins_digest
    if d.screen_width and d.screen_height:
        depth = f"@{d.color_depth}" if d.color_depth else ""
        v[fid("Screen resolution and color depth")] = f"{d.screen_width}x{d.screen_height}{depth}"
    if d.touch_capable is not None:
        v[fid("Touch vs. keyboard input capabilities")] = "touch" if d.touch_capable else "keyboard"
    if d.user_agent:
        v[fid("User-Agent string")] = d.user_agent
    if d.canvas_digest:
        v[fid("Canvas fingerprinting hash (HTML5 feature for subtle device uniqueness)")] = d.canvas_digest
    if d.audio_digest:
        v[fid("AudioContext Fingerprinting")] = d.audio_digest
    if global_stats is not None:
        now = login_time.timestamp()
        v[fid("Multiple accounts accessed from the same IP in a short time")] = (
            global_stats.accounts_on_ip(context.network.ip, now)
        )
        v[fid("Same fingerprint across many IPs or accounts")] = (
            global_stats.accounts_with_fingerprint(digest)
        )
    v[fid("Missing browser entropy (no screen size, no plugins, etc.)")] = d.missing_entropy()
    _ = seen  # familiarity is a session/device-history feature


def _geo_features(v, context: AttemptContext, profile, login_time) -> None:
    g = context.geo
    key = g.region_key()
    if key:
        v[fid("IP-based country, region, city")] = key
    if context.network.isp:
        v[fid("ISP/Organization")] = context.network.isp
    if g.lat is not None and g.lon is not None:
        v[fid("Latitude and longitude (approximate)")] = f"{g.lat:.4f},{g.lon:.4f}"
        if profile.last_geo is not None:
            v[fid("Geolocation velocity (distance and time from last known location)")] = (
                geo_velocity(profile.last_geo, (g.lat, g.lon, login_time.timestamp()))
            )
    if key:
        v[fid("Region familiarity score (based on previous successful logins)")] = (
            profile.history.region_success.get(key, 0)
        )
    if g.timezone_offset_min is not None or g.clock_offset_ms is not None:
        tz_part = float(g.timezone_offset_min or 0)
        clock_part = float(g.clock_offset_ms or 0.0) / 60000.0
        v[fid("Timezone and system clock offset")] = tz_part + clock_part


def _network_features(v, context: AttemptContext) -> None:
    n = context.network
    if n.ip_reputation is not None:
        v[fid("IP address reputation (blacklisted, clean, dynamic/static)")] = n.ip_reputation.value
    if n.vpn is not None:
        v[fid("Is VPN detected? (Yes/No)")] = n.vpn
    if n.proxy is not None:
        v[fid("Is Proxy detected? (Yes/No)")] = n.proxy
    if n.tor_exit is not None:
        v[fid("Is the TOR exit node? (Yes/No)")] = n.tor_exit
    if n.connection_type:
        v[fid("Connection type (wired, mobile data, public Wi-Fi)")] = n.connection_type
    if n.asn:
        v[fid("ASN (Autonomous System Number) – can help trace institutional access")] = n.asn


def _temporal_features(v, profile, login_time: datetime) -> None:
    v[fid("Time of login (HH:MM)")] = login_time.strftime("%H:%M")
    v[fid("Day of the week")] = WEEKDAYS[login_time.weekday()]
    window = profile.history.success_minute_of_day
    if window.count:
        center = int(window.mean)
        spread = window.std() or 0.0
        v[fid(
            "Mean successful login session starting time window from historical data (e.g., usually between 8–9 PM)"
        )] = f"{center // 60:02d}:{center % 60:02d}±{spread:.0f}min"
    variance = profile.history.failed_interval_s.variance()
    if variance is not None:
        v[fid("Failed login interval variance (compared to normal rhythm)")] = variance


def _session_history_features(v, context, profile, session, matched, login_time, stats) -> None:
    digest = context.device.fingerprint_digest()
    seen = profile.known_devices.get(digest)
    v[fid("Device/browser familiarity")] = seen is not None
    v[fid("Availability of cookie/token from previous session")] = session.attempt_count > 0
    if seen is not None:
        v[fid("Number of successful logins from current device")] = seen.success_count
        v[fid("First-seen timestamp of device")] = datetime.utcfromtimestamp(
            seen.first_seen
        ).isoformat()
    locale_changed = None
    if context.device.locale is not None and profile.last_locale is not None:
        locale_changed = context.device.locale != profile.last_locale
    if context.device.keyboard_language is not None and profile.last_keyboard_language is not None:
        kb_changed = context.device.keyboard_language != profile.last_keyboard_language
        locale_changed = kb_changed if locale_changed is None else (locale_changed or kb_changed)
    if locale_changed is not None:
        v[fid("Changes in system locale or keyboard language settings")] = locale_changed
    window_start = login_time.timestamp() - 3600.0
    v[fid("Login attempt frequency in last X minutes/hours")] = sum(
        1 for t in profile.recent_failed_timestamps if t >= window_start
    ) + session.attempt_count
    v[fid("Number of failed logins in a session")] = session.failed_count + (0 if matched else 1)
    if profile.known_ips:
        v[fid("Login from multiple IPs")] = len(profile.known_ips) > 1
        v[fid("Number of logins from multiple IPs, if any")] = (
            sum(profile.known_ips.values()) if len(profile.known_ips) > 1 else 0
        )
    if context.network.ip is not None:
        v[fid("Login attempt from unknown IPs")] = context.network.ip not in profile.known_ips
    v[fid("Total number of successful logins")] = profile.history.total_success
    v[fid("Total number of failed logins")] = profile.history.total_failed
    v[fid("Total number of failed login attempts from known IPs")] = (
        profile.history.total_failed_known_ip
    )
    if matched and session.started_at is not None:
        v[fid("Elapsed time from initiation of login attempt until successful authentication")] = (
            max(0.0, (login_time.timestamp() - session.started_at) * 1000.0)
        )


def _environment_features(v, context, stats: StreamStats) -> None:
    is_touch = context.device.touch_capable is True
    if stats.pointer_speed is not None:
        key = "Touch data from a mobile device during login" if is_touch else "Mouse movement during login"
        v[fid(key)] = stats.pointer_speed
    if stats.scroll_speed is not None:
        v[fid("Scrolling speed on a particular page")] = stats.scroll_speed
    v[fid("Window-focus events (e.g., switching tabs before login)")] = stats.focus_changes
    v[fid("Clipboard access detection (pasting passwords vs typing)")] = stats.paste_any
    if is_touch and stats.pointer_clicks:
        v[fid("Touch event heatmap (for mobile — helps in distinguishing automation/bots)")] = (
            f"clicks:{stats.pointer_clicks}"
        )
    if stats.click_to_type_ms is not None:
        v[fid("Click behavior against buttons, textboxes")] = stats.click_to_type_ms
    v[fid("Click pattern against a particular page")] = stats.pointer_clicks


def _typing_features(v, stats: StreamStats, session, comparison, matched) -> None:
    if stats.typing_time_ms is not None:
        v[fid("Key press and release timings")] = stats.typing_time_ms
    if stats.mean_dwell_ms is not None:
        v[fid("Dwell time (duration key is pressed)")] = stats.mean_dwell_ms
    if stats.mean_flight_ms is not None:
        v[fid("Flight time (interval between keys)")] = stats.mean_flight_ms
    order = session.mistake_order + [
        p for p in sorted(comparison.mismatch_positions) if p not in session.position_first_seen
    ]
    if order:
        v[fid("Order of positions of mistakes")] = tuple(order)
    if stats.typing_speed_cps is not None:
        if matched:
            v[fid("Typing speed for a full password for every successful login attempt")] = (
                stats.typing_speed_cps
            )
        else:
            v[fid("Typing speed for a full password for every failed login attempt")] = (
                stats.typing_speed_cps
            )
    if stats.shift_dwell_ms is not None:
        v[fid("Shift key long pressed or short pressed")] = (
            "long" if stats.shift_dwell_ms >= SHIFT_LONG_PRESS_MS else "short"
        )
    v[fid("Caps Lock button used")] = stats.caps_lock_used
    v[fid("TAB button pressed to switch between textboxes")] = stats.tab_used
    v[fid("Special character and Number switch button")] = stats.mode_switch_used


def _password_characteristics(v, candidate, comparison, session, stats, matched, profile) -> None:
    v[fid("Length of password during every login button pressed (temporary data)")] = len(candidate)
    delta = comparison.length_delta
    v[fid("Length of password same/bigger/smaller")] = (
        "same" if delta == 0 else "bigger" if delta > 0 else "smaller"
    )
    v[fid("Incident of appearances of the same length of passwords")] = delta == 0
    mismatch = comparison.mismatch_positions
    v[fid("Positions of mistakes")] = _positions(mismatch)
    v[fid("Number of positions of mistake(s) in every login attempt")] = len(mismatch)

    previous = session.attempts[-1] if session.attempts else None
    first_failed = session.first_failed_attempt

    ambient_vs_first = None
    if first_failed is not None and candidate != first_failed:
        diffs = _diff_positions(first_failed, candidate)
        ambient_vs_first = any(
            _classify(old, new) is Substitution.AMBIENT for _, old, new in diffs
        )
    if ambient_vs_first is not None:
        v[fid("Ambient character or not")] = ambient_vs_first

    diff = classify_diff(previous, candidate)
    ambient_count = len(diff.ambient_positions)
    distant_count = len(diff.distant_positions)
    case_alt_count = len(diff.case_alt_positions)
    distant_positions = list(diff.distant_positions)
    same_class_only: bool | None = None
    distance_labels: list[str] = []
    if ambient_count:
        distance_labels.append("close")
    if distant_count:
        distance_labels.append("far")
    if previous is not None:
        diffs = _diff_positions(previous, candidate)
        if diffs:
            same_class_only = len({char_class(new) for _, _, new in diffs}) <= 1
    v[fid("Character case alteration")] = case_alt_count > 0
    v[fid("Number of times character case alteration until a single login button press")] = case_alt_count
    v[fid("Number of times character case alteration in a session")] = (
        session.case_alt_total + case_alt_count
    )
    v[fid("Number of times ambient values are entered until a single login button pressed")] = ambient_count
    v[fid("Number of times ambient values entered in a session")] = session.ambient_total + ambient_count
    if same_class_only is not None:
        v[fid("Same class character(s)(temporary data)")] = same_class_only

    special_wrong = sum(1 for p in mismatch if p <= len(candidate) and candidate[p - 1] in SPECIAL_CHARS)
    v[fid("Number of times wrong special character inputs until a single login button is pressed")] = special_wrong
    v[fid("Number of times wrong special character input in a session")] = (
        session.special_wrong_total + special_wrong
    )

    session_freq = dict(session.position_error_freq)
    for p in mismatch:
        session_freq[p] = session_freq.get(p, 0) + 1
    v[fid("Error frequency for a particular position in a session")] = json.dumps(
        {str(k): session_freq[k] for k in sorted(session_freq)}
    )
    hist_freq = profile.history.position_error_freq
    if hist_freq:
        v[fid("Total error frequency for a particular position for all time")] = json.dumps(
            {str(k): hist_freq[k] for k in sorted(hist_freq)}
        )
    if profile.history.position_case_alt:
        v[fid("Number of times character case alteration in a position for all time")] = json.dumps(
            {str(k): n for k, n in sorted(profile.history.position_case_alt.items())}
        )
    if profile.history.position_ambient:
        v[fid("Number of times ambient values are entered in a position for all time")] = json.dumps(
            {str(k): n for k, n in sorted(profile.history.position_ambient.items())}
        )
    v[fid("Number of times ambient values are entered for all positions combined for all time")] = (
        profile.history.ambient_total
    )
    if profile.history.position_special_wrong:
        v[fid("Number of times wrong special character input in a position for all time")] = json.dumps(
            {str(k): n for k, n in sorted(profile.history.position_special_wrong.items())}
        )
    v[fid("Number of times wrong special character input for all the positions combined for all time")] = (
        profile.history.special_wrong_total
    )
    v[fid("Number of times password length mismatch")] = profile.history.length_mismatch_count
    v[fid("Number of times length exceeded original password value")] = (
        profile.history.length_exceeded_count
    )
    v[fid("Number of times length fell short of the actual password length")] = (
        profile.history.length_fell_short_count
    )
    v[fid("Number of times the same length of passwords appeared")] = profile.history.same_length_count

    if profile.base_secret_classes is not None:
        v[fid("A user uses single or multi-class values")] = profile.base_secret_classes
    classes_now = session.value_classes_seen | value_classes(candidate)
    v[fid("Number of value classes appeared in the current login session(temporary data)")] = len(classes_now)
    multiclass = set(session.multiclass_positions)
    for pos, chars in session.position_inputs.items():
        tried = {char_class(c) for c in chars}
        if pos <= len(candidate):
            tried.add(char_class(candidate[pos - 1]))
        if len(tried) > 1:
            multiclass.add(pos)
    v[fid("Number of positions based on multiple value classes' appearance (temporary data)")] = len(multiclass)

    # correct-input-amid-mixed-tries family (session scope, failed attempts only)
    heterogeneous = {p for p, chars in session.position_inputs.items() if len(set(chars)) > 1}
    corrected_hetero = session.correct_positions & heterogeneous
    v[fid("Identification of correct values amid heterogeneous inputs at a position")] = (
        bool(corrected_hetero)
    )
    if session.correct_positions:
        v[fid("Correct input is single or multiple in a position")] = (
            "multiple" if session.correct_appearances > len(session.correct_positions) else "single"
        )
    v[fid("Multiple positions had correct input")] = len(session.correct_positions) > 1
    if session.correct_appearances == 1:
        v[fid("Single correct input is the only one that is entered in the very first")] = (
            session.first_correct_was_first_attempt is True
        )
        v[fid("Single correct input is random")] = session.first_correct_was_first_attempt is not True
    if session.wrong_tries_before_correct is not None:
        v[fid("Number of wrong tries before the correct input appears")] = (
            session.wrong_tries_before_correct
        )
    v[fid("Number of times of having correct input")] = session.correct_appearances
    v[fid("Number of positions of having correct input")] = len(session.correct_positions)

    v[fid("User input distant value or not")] = distant_count > 0
    if distant_positions:
        v[fid("Positions where distant values were entered until a single login button is pressed")] = (
            _positions(distant_positions)
        )
    v[fid("Total position numbers where distant values have been entered until a single login button is pressed")] = (
        len(distant_positions)
    )
    session_distant = session.distant_positions | set(distant_positions)
    if session_distant:
        v[fid("Positions where distant values were entered in a session")] = _positions(session_distant)
    v[fid("Total position numbers where distant values have been entered in a session")] = len(session_distant)
    v[fid("Total number of distant value inputs in all positions combined in a session")] = (
        session.distant_total + distant_count
    )
    v[fid("Total number of distant value inputs in all positions combined for all time")] = (
        profile.history.distant_total + distant_count
    )
    if session_distant:
        per_pos = {
            str(p): len(session.distant_history.get(p, [])) + (1 if p in distant_positions else 0)
            for p in sorted(session_distant)
        }
        v[fid("Total number of distant value inputs in a position in a session")] = json.dumps(per_pos)
    if profile.history.position_distant:
        v[fid("Total number of distant value inputs in a position for all time")] = json.dumps(
            {str(k): n for k, n in sorted(profile.history.position_distant.items())}
        )
    if profile.history.position_distant or session_distant:
        hist_positions = set(profile.history.position_distant) | session.distant_positions
        v[fid("Positions where distant values were entered for all time")] = _positions(
            hist_positions | set(distant_positions)
        )

    distant_of_distant = False
    ambient_of_distant = 0
    for pos in distant_positions:
        prior_distants = session.distant_history.get(pos, [])
        for prior_char in prior_distants:
            sub = _classify(prior_char, candidate[pos - 1])
            if sub is Substitution.DISTANT:
                distant_of_distant = True
            elif sub is Substitution.AMBIENT:
                ambient_of_distant += 1
    # an ambient retry of an earlier distant value shows up at non-distant positions too
    if previous is not None:
        for pos, chars in session.distant_history.items():
            if pos <= len(candidate) and pos - 1 < len(previous):
                for prior_char in chars:
                    if candidate[pos - 1] != prior_char and _classify(prior_char, candidate[pos - 1]) is Substitution.AMBIENT:
                        ambient_of_distant += 1
    v[fid("Distant value’s distant character(s) entered")] = distant_of_distant
    v[fid("Distant value’s ambient character(s) entered")] = ambient_of_distant > 0
    v[fid("Number of ambient values of a distant value has been used")] = (
        session.ambient_of_distant_count + ambient_of_distant
    )
    if distance_labels:
        v[fid("Distance level of the tried characters (close, far)")] = (
            "far" if "far" in distance_labels else "close"
        )

    if session.match_history:
        prev_pct = session.match_history[-1]
        trend = _trend_label(comparison.match_percentage, prev_pct)
        if distant_count:
            v[fid(
                "Matching percentage increased/decreased/remained unchanged because of distant value input"
            )] = trend
        if ambient_count:
            v[fid(
                "Matching percentage increased/decreased/remained unchanged because of ambient key input"
            )] = trend

    typed = session.keys_pressed + [c for c in candidate]
    v[fid("Keys pressed in a login session (temporary data)")] = "".join(typed)
    if stats.key_sequence_fields:
        v[fid("Sequence of key pressing")] = ">".join(stats.key_sequence_fields)
    v[fid("Password pasting")] = stats.paste_in_password
    if matched:
        v[fid("Ambient value led to login success")] = (
            session.ambient_led_to_success or session.ambient_total + ambient_count > 0
        )
        v[fid("Distant value led to login success")] = (
            session.distant_led_to_success or session.distant_total + distant_count > 0
        )


def _rule_features(v, report: RuleDeviationReport, profile, session) -> None:
    if profile.rule_name:
        v[fid("Rule name (can be used in security challenges)")] = profile.rule_name
    if profile.history.e_hist:
        v[fid("User’s frequent mistakes")] = _positions(profile.history.e_hist)
    v[fid("Frequency of rule changes")] = profile.history.rule_changes
    v[fid("Deviated from the rule")] = report.deviated
    v[fid("Number of deviations from the rule in one session")] = (
        session.deviation_total + (1 if report.deviated else 0)
    )
    v[fid("Number of deviations from the rule for all time")] = (
        profile.history.deviation_total + (1 if report.deviated else 0)
    )
    if profile.rule_cycle is not None:
        v[fid(
            "Rule repetition threshold (e.g., user rotates rules every 3 logins) (can be used for security question challenge)"
        )] = profile.rule_cycle
    v[fid("Decoy rule existence (can be used for the security challenge)")] = profile.decoy_enabled
    v[fid("Decoy position altered (high red flag)")] = report.decoy_violated
    if profile.rule_positions:
        v[fid("Position(s) chosen for rule application")] = _positions(profile.rule_positions)
    if profile.decoy_positions:
        v[fid("Position(s) where decoy rule applied")] = _positions(profile.decoy_positions)


def _dissection_features(v, comparison: ComparisonResult, session, matched) -> None:
    v[fid("Matching percentage")] = comparison.match_percentage
    v[fid("Position(s) of mismatched values")] = _positions(comparison.mismatch_positions)
    fixed: tuple[int, ...] = ()
    fresh: tuple[int, ...] = ()
    if session.mismatch_history:
        prev = session.mismatch_history[-1]
        v[fid("Error increased/decreased/unchanged")] = _trend_label(
            100.0 - comparison.match_percentage, 100.0 - session.match_history[-1]
        )
        fixed = _positions(prev - comparison.mismatch_positions)
        fresh = _positions(comparison.mismatch_positions - prev)
        v[fid(
            "The Percentage of error is unchanged with the new positional problem arising and the old one getting fixed"
        )] = bool(fixed and fresh and comparison.match_percentage == session.match_history[-1])
        if fixed:
            v[fid("Position that got fixed")] = fixed
        if fresh:
            v[fid("Position that got a new error")] = fresh
    if session.position_fixed_after:
        v[fid("Number of attempts before solving a positional error")] = json.dumps(
            {str(k): n for k, n in sorted(session.position_fixed_after.items())}
        )
    if matched:
        v[fid("Number of failed attempts before a successfull login")] = session.failed_count


def _challenge_features(v, stats: StreamStats, session, profile, global_stats) -> None:
    solve_ms = None
    if stats.captcha_shown_at is not None and stats.captcha_solved_at is not None:
        solve_ms = stats.captcha_solved_at - stats.captcha_shown_at
        v[fid("CAPTCHA solving speed based on CAPTCHA type for a single user")] = solve_ms
        v[fid("Time to solve CAPTCHAs in a session")] = session.captcha_time_ms + solve_ms
    if stats.captcha_shown_at is not None and stats.captcha_first_action_at is not None:
        v[fid("Time from the appearance of CAPTCHA to start solving")] = (
            stats.captcha_first_action_at - stats.captcha_shown_at
        )
    if stats.captcha_action_dwell_ms is not None:
        v[fid("Dwell time for CAPTCHA image")] = stats.captcha_action_dwell_ms
    if stats.captcha_action_flight_ms is not None:
        v[fid("Flight time for CAPTCHA image")] = stats.captcha_action_flight_ms
    shown = session.captcha_shown + (1 if stats.captcha_shown_at is not None else 0)
    solved = session.captcha_solved + (1 if stats.captcha_solved_at is not None else 0)
    if shown:
        v[fid("Session-based CAPTCHA solving accuracy")] = 100.0 * solved / shown
    hist = profile.history.captcha
    if hist:
        v[fid("Types of CAPTCHAs a user has tried")] = len(hist)
        total_shown = sum(s.shown for s in hist.values())
        total_solved = sum(s.solved for s in hist.values())
        if total_shown:
            v[fid("Overall CAPTCHA solving success rate by a user")] = (
                100.0 * total_solved / total_shown
            )
        default = next(iter(hist.values()))
        acc = default.accuracy()
        if acc is not None:
            v[fid("CAPTCHA solving accuracy based on individual CAPTCHA for a single user")] = acc
            speed = default.mean_time_ms()
            if speed is not None:
                v[fid("CAPTCHA complexity classification based on a single user")] = (
                    _complexity_label(speed, acc)
                )
    if global_stats is not None and global_stats.captcha:
        default = next(iter(global_stats.captcha.values()))
        speed = default.mean_time_ms()
        acc = default.accuracy()
        if speed is not None:
            v[fid("Average CAPTCHA solving speed based on CAPTCHA type for all users")] = speed
        if acc is not None:
            v[fid("CAPTCHA solving accuracy based on individual CAPTCHA for all users")] = acc
            v[fid("Average CAPTCHA solving success rate by all users for an individual CAPTCHA")] = acc
            if speed is not None:
                v[fid("CAPTCHA complexity classification based on all user")] = (
                    _complexity_label(speed, acc)
                )


def _complexity_label(mean_solve_ms: float, accuracy_pct: float) -> str:
    if accuracy_pct >= 90.0 and mean_solve_ms <= 10_000.0:
        return "easy"
    if accuracy_pct >= 60.0:
        return "moderate"
    return "hard"


def _backspace_features(v, stats: StreamStats, session) -> None:
    v[fid("The user uses the backspace button")] = stats.backspace_count > 0
    v[fid("Number of times the backspace button was used in a complete password")] = stats.backspace_count
    v[fid("Number of times backspace button used in a session for each user")] = (
        session.backspace_total + stats.backspace_count
    )
    v[fid("User empty textbox")] = stats.emptied_field
    v[fid("User removed last typed character")] = stats.removed_last_char
    v[fid("User removed character in the middle")] = stats.removed_middle_char
    if stats.backspace_count:
        v[fid("Values removed by one backspace button press at a time or long press")] = (
            "long_press" if stats.backspace_long_press else "single_press"
        )
    if stats.backspace_dwell_ms is not None:
        v[fid("Dwell time for the backspace button")] = stats.backspace_dwell_ms
    if stats.backspace_positions:
        v[fid("Positions the user used the backspace button")] = _positions(
            set(stats.backspace_positions)
        )


def _complexity_features(v, profile, global_stats, login_time) -> None:
    v[fid("User switch rule")] = profile.history.rule_changes > 0
    if profile.creation_rule_name:
        v[fid("Rule chosen during account creation")] = profile.creation_rule_name
    if profile.rule_set_at is not None and profile.history.rule_changes == 0:
        v[fid("Dwell time on a rule that was set during the account creation")] = max(
            0.0, (login_time.timestamp() - profile.rule_set_at) * 1000.0
        )
    v[fid("Return to the previous rule")] = profile.history.returned_to_previous_rule
    v[fid("User shifted from dynamic rule to static rule")] = (
        profile.history.shifted_dynamic_to_static
    )
    if global_stats is None or profile.rule_name is None:
        return
    rate = global_stats.embracement_rate(profile.rule_name)
    if rate is not None:
        v[fid("Rule embracement rate for a particular rule")] = rate
    rate = global_stats.leaving_rate(profile.rule_name)
    if rate is not None:
        v[fid("Rule leaving rate for a particular rule")] = rate
    if global_stats.rule_tenure_ms.count:
        v[fid("Time between new rule acceptance and leaving")] = global_stats.rule_tenure_ms.mean
    v[fid("Number of times a rule has been chosen by users")] = global_stats.rule_chosen.get(
        profile.rule_name, 0
    )
    if global_stats.rule_failures_session:
        v[fid("Number of login attempts failed against every rule, session-wise")] = json.dumps(
            dict(sorted(global_stats.rule_failures_session.items()))
        )
    if global_stats.rule_failures_all_time:
        v[fid("Number of login attempts failed against every rule for all time")] = json.dumps(
            dict(sorted(global_stats.rule_failures_all_time.items()))
        )
    v[fid("Rule false positive")] = global_stats.rule_false_positives
