"""Lifetime per-user history: counters, mistake frequencies, running baselines.

Session aggregates fold in here when a session closes.  Counters only grow;
numeric baselines use incremental moments (count, mean, M2) so variance never
needs raw samples; the habitual-mistake set E_hist is the top-k most frequent
mistake positions over a sliding window of recent sessions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import fmean

from .session import SessionAggregate, session_mistake_positions

E_HIST_TOP_K = 5
E_HIST_SESSION_WINDOW = 20
E_HIST_MIN_SESSIONS = 2

# Behaviour-drift flags derived when a session closes (names are load-bearing;
# they surface verbatim in exports and the admin API).
TREND_REPEATING_MISTAKES = "User repeating previous positional mistakes"
TREND_BACKSPACE_DECREASING = "User backspace button usage decreases day by day"
TREND_BACKSPACE_SPEED_INCREASING = "User backspace button speed increases day by day"
TREND_MISTAKES = "User mistakes increased/decreased"


@dataclass
class BaselineStats:
    """Welford running moments."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def fold(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def variance(self) -> float | None:
        if self.count < 2:
            return None
        return self.m2 / (self.count - 1)

    def std(self) -> float | None:
        v = self.variance()
        return None if v is None else v**0.5

    def zscore(self, value: float) -> float | None:
        std = self.std()
        if std is None or std == 0.0:
            return None
        return (value - self.mean) / std

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "m2": self.m2}

    @classmethod
    def from_dict(cls, doc: dict) -> "BaselineStats":
        return cls(count=int(doc["count"]), mean=float(doc["mean"]), m2=float(doc["m2"]))


def _fold_counter(target: dict[int, int], source) -> None:
    for k, v in source.items():
        target[k] = target.get(k, 0) + int(v)


@dataclass
class CaptchaTypeStats:
    shown: int = 0
    solved: int = 0
    time_ms_total: float = 0.0

    def accuracy(self) -> float | None:
        if self.shown == 0:
            return None
        return 100.0 * self.solved / self.shown

    def mean_time_ms(self) -> float | None:
        if self.solved == 0:
            return None
        return self.time_ms_total / self.solved

    def to_dict(self) -> dict:
        return {"shown": self.shown, "solved": self.solved, "time_ms_total": self.time_ms_total}

    @classmethod
    def from_dict(cls, doc: dict) -> "CaptchaTypeStats":
        return cls(int(doc["shown"]), int(doc["solved"]), float(doc["time_ms_total"]))


@dataclass
class ProfileHistory:
    """Permanent-scope per-user aggregates."""

    total_success: int = 0
    total_failed: int = 0
    total_failed_known_ip: int = 0
    session_count: int = 0

    length_mismatch_count: int = 0
    length_exceeded_count: int = 0
    length_fell_short_count: int = 0
    same_length_count: int = 0

    position_error_freq: dict[int, int] = field(default_factory=dict)
    position_case_alt: dict[int, int] = field(default_factory=dict)
    position_ambient: dict[int, int] = field(default_factory=dict)
    position_special_wrong: dict[int, int] = field(default_factory=dict)
    position_distant: dict[int, int] = field(default_factory=dict)
    ambient_total: int = 0
    distant_total: int = 0
    case_alt_total: int = 0
    special_wrong_total: int = 0
    deviation_total: int = 0
    rule_changes: int = 0
    returned_to_previous_rule: bool = False
    shifted_dynamic_to_static: bool = False

    mistake_sessions: list[list[int]] = field(default_factory=list)
    e_hist: list[int] = field(default_factory=list)

    backspace_per_session: BaselineStats = field(default_factory=BaselineStats)
    backspace_dwell: BaselineStats = field(default_factory=BaselineStats)
    failures_per_session: BaselineStats = field(default_factory=BaselineStats)
    failed_interval_s: BaselineStats = field(default_factory=BaselineStats)
    success_minute_of_day: BaselineStats = field(default_factory=BaselineStats)

    captcha: dict[str, CaptchaTypeStats] = field(default_factory=dict)
    device_time_ms: dict[str, float] = field(default_factory=dict)
    region_success: dict[str, int] = field(default_factory=dict)
    trend: dict[str, object] = field(default_factory=dict)


def update_history(history: ProfileHistory, session: SessionAggregate) -> ProfileHistory:
    """Fold a closed session into lifetime aggregates and refresh trends."""
    prior_backspace_mean = history.backspace_per_session.mean if history.backspace_per_session.count else None
    prior_backspace_dwell_mean = history.backspace_dwell.mean if history.backspace_dwell.count else None
    prior_failures_mean = history.failures_per_session.mean if history.failures_per_session.count else None
    prior_e_hist = set(history.e_hist)

    history.session_count += 1
    history.total_success += session.matched_count
    history.total_failed += session.failed_count
    history.ambient_total += session.ambient_total
    history.distant_total += session.distant_total
    history.case_alt_total += session.case_alt_total
    history.special_wrong_total += session.special_wrong_total
    history.deviation_total += session.deviation_total
    _fold_counter(history.position_error_freq, session.position_error_freq)
    for p in session.distant_positions:
        history.position_distant[p] = history.position_distant.get(p, 0) + 1

    history.backspace_per_session.fold(float(session.backspace_total))
    if session.backspace_dwells:
        history.backspace_dwell.fold(fmean(session.backspace_dwells))
    history.failures_per_session.fold(float(session.failed_count))
    stamps = session.failed_attempt_timestamps
    for a, b in zip(stamps, stamps[1:]):
        history.failed_interval_s.fold(b - a)

    mistakes = sorted(session_mistake_positions(session))
    history.mistake_sessions.append(mistakes)
    history.mistake_sessions = history.mistake_sessions[-E_HIST_SESSION_WINDOW:]
    history.e_hist = _top_k_positions(history.mistake_sessions)

    # behaviour-drift comparisons: this session vs the mean before it
    if mistakes and prior_e_hist:
        overlap = len(prior_e_hist.intersection(mistakes)) / len(mistakes)
        history.trend[TREND_REPEATING_MISTAKES] = overlap >= 0.5
    if prior_backspace_mean is not None:
        history.trend[TREND_BACKSPACE_DECREASING] = (
            session.backspace_total < prior_backspace_mean
        )
    if prior_backspace_dwell_mean is not None and session.backspace_dwells:
        history.trend[TREND_BACKSPACE_SPEED_INCREASING] = (
            fmean(session.backspace_dwells) < prior_backspace_dwell_mean
        )
    if prior_failures_mean is not None:
        if session.failed_count > prior_failures_mean:
            history.trend[TREND_MISTAKES] = "increased"
        elif session.failed_count < prior_failures_mean:
            history.trend[TREND_MISTAKES] = "decreased"
        else:
            history.trend[TREND_MISTAKES] = "unchanged"
    return history


def _top_k_positions(sessions: list[list[int]], k: int = E_HIST_TOP_K) -> list[int]:
    counts: dict[int, int] = {}
    for mistakes in sessions:
        for p in mistakes:
            counts[p] = counts.get(p, 0) + 1
    eligible = [(n, p) for p, n in counts.items() if n >= E_HIST_MIN_SESSIONS]
    eligible.sort(key=lambda t: (-t[0], t[1]))
    return [p for _, p in eligible[:k]]


@dataclass
class DeviceSeen:
    first_seen: float
    last_seen: float
    success_count: int = 0

    def to_dict(self) -> dict:
        return {
            "first_seen": self.first_seen,
            "last_seen": self.last_seen,
            "success_count": self.success_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DeviceSeen":
        return cls(float(doc["first_seen"]), float(doc["last_seen"]), int(doc["success_count"]))


@dataclass
class ProfileSummary:
    """Read-only view of a profile handed to feature extraction."""

    history: ProfileHistory
    known_devices: dict[str, DeviceSeen] = field(default_factory=dict)
    known_ips: dict[str, int] = field(default_factory=dict)
    rule_name: str | None = None
    rule_cycle: int | None = None
    rule_positions: tuple[int, ...] = ()
    decoy_enabled: bool = False
    decoy_positions: tuple[int, ...] = ()
    base_secret_classes: str | None = None
    creation_rule_name: str | None = None
    rule_set_at: float | None = None
    last_locale: str | None = None
    last_keyboard_language: str | None = None
    last_geo: tuple[float, float, float] | None = None
    recent_failed_timestamps: tuple[float, ...] = ()


@dataclass
class GlobalStats:
    """Cross-user aggregates: rule popularity/complexity and challenge behaviour."""

    rule_chosen: dict[str, int] = field(default_factory=dict)
    rule_creation_chosen: dict[str, int] = field(default_factory=dict)
    rule_embraced: dict[str, int] = field(default_factory=dict)
    rule_left: dict[str, int] = field(default_factory=dict)
    rule_returns: int = 0
    rule_false_positives: int = 0
    dynamic_to_static: int = 0
    rule_failures_session: dict[str, int] = field(default_factory=dict)
    rule_failures_all_time: dict[str, int] = field(default_factory=dict)
    rule_tenure_ms: BaselineStats = field(default_factory=BaselineStats)
    captcha: dict[str, CaptchaTypeStats] = field(default_factory=dict)
    ip_accounts: dict[str, dict[str, float]] = field(default_factory=dict)
    fingerprint_accounts: dict[str, set[str]] = field(default_factory=dict)
    # per-IP strikes are recorded as a secondary signal; IPs are never
    # auto-blocked (shared NATs punish real users)
    ip_failed: dict[str, int] = field(default_factory=dict)

    IP_WINDOW_S = 3600.0

    def note_rule_created(self, rule_name: str) -> None:
        self.rule_creation_chosen[rule_name] = self.rule_creation_chosen.get(rule_name, 0) + 1
        self.rule_chosen[rule_name] = self.rule_chosen.get(rule_name, 0) + 1

    def note_rule_switch(
        self,
        old_rule: str,
        new_rule: str,
        tenure_ms: float,
        returned: bool,
        false_positive: bool,
    ) -> None:
        self.rule_left[old_rule] = self.rule_left.get(old_rule, 0) + 1
        self.rule_embraced[new_rule] = self.rule_embraced.get(new_rule, 0) + 1
        self.rule_chosen[new_rule] = self.rule_chosen.get(new_rule, 0) + 1
        self.rule_tenure_ms.fold(tenure_ms)
        if returned:
            self.rule_returns += 1
        if false_positive:
            self.rule_false_positives += 1
        if new_rule == "Static" and old_rule != "Static":
            self.dynamic_to_static += 1

    def note_failed_attempt(self, rule_name: str, ip: str | None = None) -> None:
        self.rule_failures_session[rule_name] = self.rule_failures_session.get(rule_name, 0) + 1
        self.rule_failures_all_time[rule_name] = self.rule_failures_all_time.get(rule_name, 0) + 1
        if ip:
            self.ip_failed[ip] = self.ip_failed.get(ip, 0) + 1

    def note_attempt_source(self, ip: str | None, fingerprint: str | None, user_id: str, now: float) -> None:
        if ip:
            bucket = self.ip_accounts.setdefault(ip, {})
            bucket[user_id] = now
            cutoff = now - self.IP_WINDOW_S
            for uid in [u for u, t in bucket.items() if t < cutoff]:
                del bucket[uid]
        if fingerprint:
            self.fingerprint_accounts.setdefault(fingerprint, set()).add(user_id)

    def accounts_on_ip(self, ip: str | None, now: float) -> int:
        if not ip or ip not in self.ip_accounts:
            return 0
        cutoff = now - self.IP_WINDOW_S
        return sum(1 for t in self.ip_accounts[ip].values() if t >= cutoff)

    def accounts_with_fingerprint(self, fingerprint: str | None) -> int:
        if not fingerprint:
            return 0
        return len(self.fingerprint_accounts.get(fingerprint, ()))

    def embracement_rate(self, rule_name: str) -> float | None:
        total = sum(self.rule_embraced.values())
        if total == 0:
            return None
        return self.rule_embraced.get(rule_name, 0) / total

    def leaving_rate(self, rule_name: str) -> float | None:
        total = sum(self.rule_left.values())
        if total == 0:
            return None
        return self.rule_left.get(rule_name, 0) / total
