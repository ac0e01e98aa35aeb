"""Tiered risk scoring and the Allow/Challenge/Deny/Lock decision.

Five components, each in [0,1]: credential (how far the attempt is from the
expected secret), rule (deviation from the configured schedule), behavior
(z-score drift of timing/interaction features against per-user baselines),
context (device/network/geo indicators), and history consistency (whether
today's mistakes look like this user's usual mistakes).  The weighted average
is banded into an outcome; a decoy violation overrides everything.

Evaluation is layered: cheap components are considered first, and later tiers
are consulted only while the achievable range of the final total still spans
more than one decision band.  The short-circuit is therefore sound by
construction — skipping tiers can never change the outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dissection import ComparisonResult
from .rules import RuleDeviationReport
from .telemetry.history import BaselineStats
from .telemetry.metrics import MistakeSets, mistake_jaccard
from .telemetry.registry import baseline_feature_ids, fid
from .telemetry.vector import FeatureVector

COMPONENTS = ("credential", "rule", "behavior", "context", "history_consistency")

# reason codes surfaced to API consumers
DECOY_VIOLATION = "DECOY_VIOLATION"
CREDENTIAL_MISMATCH = "CREDENTIAL_MISMATCH"
RULE_DEVIATION = "RULE_DEVIATION"
STRIKE_LOCK = "STRIKE_LOCK"
STRIKE_SOFT = "STRIKE_CHALLENGE"
NEW_DEVICE = "NEW_DEVICE"
NEW_NETWORK = "NEW_NETWORK"
TOR_EXIT = "TOR_EXIT"
VPN_NEW_GEO = "VPN_NEW_GEO"
HIGH_VELOCITY = "HIGH_VELOCITY"
TIMEZONE_MISMATCH = "TIMEZONE_MISMATCH"
BEHAVIOR_ANOMALY = "BEHAVIOR_ANOMALY"
HISTORY_INCONSISTENT = "HISTORY_INCONSISTENT"
ACCOUNT_LOCKED = "ACCOUNT_LOCKED"


class Outcome:
    ALLOW = "Allow"
    CHALLENGE = "Challenge"
    DENY = "Deny"
    LOCK = "Lock"


class ChallengeKind:
    RULE_NAME_QUESTION = "RuleNameQuestion"
    ROTATION_THRESHOLD_QUESTION = "RotationThresholdQuestion"
    CAPTCHA = "Captcha"


@dataclass(frozen=True)
class RiskConfig:
    match_threshold: float = 0.80
    # context is weighted so that a fully hostile environment (tor + vpn +
    # unknown device and network) reaches the challenge band even when the
    # credential itself is right; history consistency is a mild signal only
    weights: dict[str, float] = field(
        default_factory=lambda: {
            "credential": 1.25,
            "rule": 1.0,
            "behavior": 0.75,
            "context": 1.75,
            "history_consistency": 0.25,
        }
    )
    allow_below: float = 0.25
    challenge_below: float = 0.50
    deny_below: float = 1.0
    lock_strikes: int = 10
    lock_window_s: float = 24 * 3600.0
    tiers: tuple[tuple[str, ...], ...] = (
        ("credential", "rule"),
        ("context",),
        ("behavior", "history_consistency"),
    )
    context_weights: dict[str, float] = field(
        default_factory=lambda: {
            "new_device": 0.25,
            "new_network": 0.15,
            "tor_exit": 0.20,
            "vpn_new_geo": 0.15,
            "high_velocity": 0.15,
            "timezone_mismatch": 0.10,
        }
    )
    velocity_kmh_threshold: float = 1000.0
    timezone_mismatch_min: float = 120.0
    rule_deviation_floor: float = 0.2
    min_baseline_count: int = 5

    def __post_init__(self) -> None:
        if not 0.0 < self.allow_below <= self.challenge_below <= self.deny_below <= 1.0:
            raise ValueError("cutoffs must satisfy 0 < allow <= challenge <= deny <= 1")
        if set(self.weights) != set(COMPONENTS):
            raise ValueError(f"weights must cover exactly {COMPONENTS}")
        if any(w <= 0 for w in self.weights.values()):
            raise ValueError("component weights must be positive")
        flat = tuple(c for tier in self.tiers for c in tier)
        if sorted(flat) != sorted(COMPONENTS):
            raise ValueError("tiers must partition the component set")

    def to_dict(self) -> dict:
        return {
            "match_threshold": self.match_threshold,
            "weights": dict(self.weights),
            "allow_below": self.allow_below,
            "challenge_below": self.challenge_below,
            "deny_below": self.deny_below,
            "lock_strikes": self.lock_strikes,
            "lock_window_s": self.lock_window_s,
            "tiers": [list(t) for t in self.tiers],
            "context_weights": dict(self.context_weights),
            "velocity_kmh_threshold": self.velocity_kmh_threshold,
            "timezone_mismatch_min": self.timezone_mismatch_min,
            "rule_deviation_floor": self.rule_deviation_floor,
            "min_baseline_count": self.min_baseline_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RiskConfig":
        kwargs = dict(doc)
        if "tiers" in kwargs:
            kwargs["tiers"] = tuple(tuple(t) for t in kwargs["tiers"])
        return cls(**kwargs)


@dataclass(frozen=True)
class RiskScore:
    components: dict[str, float]
    total: float
    tier_reached: int
    explanations: tuple[tuple[int, float], ...]
    decoy_forced: bool
    match_threshold: float

    def component(self, name: str) -> float:
        return self.components[name]


@dataclass(frozen=True)
class Decision:
    outcome: str
    challenge_kind: str | None
    reason_codes: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.outcome == Outcome.CHALLENGE and self.challenge_kind is None:
            raise ValueError("a Challenge decision must carry a challenge kind")


@dataclass(frozen=True)
class AttemptState:
    """Per-attempt session facts decide() needs beyond the score itself."""

    credential_matched: bool
    failed_in_window: int = 0
    window_match_median: float | None = None


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def _attempt_failed(comparison: ComparisonResult) -> bool:
    return comparison.match_percentage < 100.0 or comparison.length_delta != 0


def score(
    comparison: ComparisonResult,
    report: RuleDeviationReport,
    fv: FeatureVector,
    baselines: dict[int, BaselineStats],
    config: RiskConfig,
) -> RiskScore:
    components: dict[str, float] = {}
    explanations: list[tuple[int, float]] = []

    components["credential"] = max(0.0, min(1.0, 1.0 - comparison.match_percentage / 100.0))

    stored_length = comparison.matched_count + len(comparison.mismatch_positions)
    if report.decoy_violated:
        components["rule"] = 1.0
    elif report.deviated:
        signals = len(report.non_rule_mismatches) + len(report.unreachable_rule_positions)
        components["rule"] = min(
            1.0, config.rule_deviation_floor + signals / max(1, stored_length)
        )
    else:
        components["rule"] = 0.0

    squashed: list[float] = []
    for feature_id in baseline_feature_ids():
        value = fv.values.get(feature_id)
        stats = baselines.get(feature_id)
        if value is None or stats is None or stats.count < config.min_baseline_count:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            continue
        z = stats.zscore(float(value))
        if z is None:
            continue
        contribution = _logistic(abs(z) - 2.0)
        squashed.append(contribution)
        explanations.append((feature_id, contribution))
    components["behavior"] = sum(squashed) / len(squashed) if squashed else 0.0

    indicators = _context_indicators(fv, config)
    total_w = sum(config.context_weights.values())
    components["context"] = min(
        1.0,
        sum(config.context_weights[name] for name, _ in indicators) / total_w
        if total_w > 0
        else 0.0,
    )
    explanations.extend((feature_id, config.context_weights[name]) for name, feature_id in indicators)

    if _attempt_failed(comparison):
        e_hist = fv.get("User’s frequent mistakes") or ()
        components["history_consistency"] = 1.0 - mistake_jaccard(
            MistakeSets(frozenset(comparison.mismatch_positions), frozenset(e_hist))
        )
    else:
        components["history_consistency"] = 0.0

    if report.decoy_violated:
        total = 1.0
    else:
        weight_sum = sum(config.weights.values())
        total = max(
            0.0,
            min(1.0, sum(config.weights[c] * components[c] for c in COMPONENTS) / weight_sum),
        )

    return RiskScore(
        components=components,
        total=total,
        tier_reached=_tier_reached(components, config, report.decoy_violated),
        explanations=tuple(explanations),
        decoy_forced=report.decoy_violated,
        match_threshold=config.match_threshold,
    )


def _context_indicators(fv: FeatureVector, config: RiskConfig) -> list[tuple[str, int]]:
    """Fired indicator names with the feature id that triggered each."""
    out: list[tuple[str, int]] = []
    if fv.get("Device/browser familiarity") is False:
        out.append(("new_device", fid("Device/browser familiarity")))
    if fv.get("Login attempt from unknown IPs") is True:
        # profile tracks IPs, not ASNs; an unknown source address is the
        # nearest observable for "new network/ASN"
        out.append(("new_network", fid("Login attempt from unknown IPs")))
    if fv.get("Is the TOR exit node? (Yes/No)") is True:
        out.append(("tor_exit", fid("Is the TOR exit node? (Yes/No)")))
    vpn = fv.get("Is VPN detected? (Yes/No)")
    familiarity = fv.get("Region familiarity score (based on previous successful logins)")
    if vpn is True and (familiarity is None or familiarity == 0):
        out.append(("vpn_new_geo", fid("Is VPN detected? (Yes/No)")))
    velocity = fv.get("Geolocation velocity (distance and time from last known location)")
    if velocity is not None and velocity > config.velocity_kmh_threshold:
        out.append(
            ("high_velocity", fid("Geolocation velocity (distance and time from last known location)"))
        )
    tz = fv.get("Timezone and system clock offset")
    if tz is not None and abs(tz) >= config.timezone_mismatch_min:
        out.append(("timezone_mismatch", fid("Timezone and system clock offset")))
    return out


def _band(total: float, config: RiskConfig) -> str:
    if total < config.allow_below:
        return Outcome.ALLOW
    if total < config.challenge_below:
        return Outcome.CHALLENGE
    return Outcome.DENY


def _tier_reached(components: dict[str, float], config: RiskConfig, decoy: bool) -> int:
    """First tier at which the final total's achievable range sits in one band."""
    if decoy:
        return 1
    weight_sum = sum(config.weights.values())
    exact = 0.0
    seen_weight = 0.0
    for k, tier in enumerate(config.tiers, start=1):
        for name in tier:
            exact += config.weights[name] * components[name]
            seen_weight += config.weights[name]
        low = exact / weight_sum
        high = (exact + (weight_sum - seen_weight)) / weight_sum
        if _band(low, config) == _band(min(1.0, high), config):
            return k
    return len(config.tiers)


def decide(risk: RiskScore, state: AttemptState, config: RiskConfig) -> Decision:
    reasons: list[str] = []
    if risk.decoy_forced:
        return Decision(Outcome.LOCK, None, (DECOY_VIOLATION,))

    strike_challenge = False
    if state.failed_in_window >= config.lock_strikes:
        median = state.window_match_median
        if median is None or median < config.match_threshold * 100.0:
            return Decision(Outcome.LOCK, None, (STRIKE_LOCK,))
        # every strike was a near-miss: a struggling owner, not a guesser
        strike_challenge = True
        reasons.append(STRIKE_SOFT)

    if risk.components["rule"] > 0.0:
        reasons.append(RULE_DEVIATION)
    reasons.extend(_context_reasons(risk))
    if risk.components["behavior"] >= 0.5:
        reasons.append(BEHAVIOR_ANOMALY)
    if risk.components["history_consistency"] >= 0.5:
        reasons.append(HISTORY_INCONSISTENT)

    band = _band(risk.total, config)
    if band == Outcome.ALLOW:
        if state.credential_matched and not strike_challenge:
            return Decision(Outcome.ALLOW, None, tuple(reasons))
        if state.credential_matched and strike_challenge:
            return Decision(
                Outcome.CHALLENGE, ChallengeKind.ROTATION_THRESHOLD_QUESTION, tuple(reasons)
            )
        reasons.insert(0, CREDENTIAL_MISMATCH)
        if strike_challenge:
            return Decision(
                Outcome.CHALLENGE, ChallengeKind.ROTATION_THRESHOLD_QUESTION, tuple(reasons)
            )
        return Decision(Outcome.DENY, None, tuple(reasons))
    if band == Outcome.CHALLENGE:
        if not state.credential_matched:
            reasons.insert(0, CREDENTIAL_MISMATCH)
        kind = (
            ChallengeKind.ROTATION_THRESHOLD_QUESTION
            if strike_challenge
            else ChallengeKind.RULE_NAME_QUESTION
        )
        return Decision(Outcome.CHALLENGE, kind, tuple(reasons))
    if not state.credential_matched:
        reasons.insert(0, CREDENTIAL_MISMATCH)
    return Decision(Outcome.DENY, None, tuple(reasons))


_CONTEXT_REASON_BY_NAME = {
    "new_device": NEW_DEVICE,
    "new_network": NEW_NETWORK,
    "tor_exit": TOR_EXIT,
    "vpn_new_geo": VPN_NEW_GEO,
    "high_velocity": HIGH_VELOCITY,
    "timezone_mismatch": TIMEZONE_MISMATCH,
}


def _context_reasons(risk: RiskScore) -> list[str]:
    out = []
    context_ids = {
        fid("Device/browser familiarity"): NEW_DEVICE,
        fid("Login attempt from unknown IPs"): NEW_NETWORK,
        fid("Is the TOR exit node? (Yes/No)"): TOR_EXIT,
        fid("Is VPN detected? (Yes/No)"): VPN_NEW_GEO,
        fid("Geolocation velocity (distance and time from last known location)"): HIGH_VELOCITY,
        fid("Timezone and system clock offset"): TIMEZONE_MISMATCH,
    }
    for feature_id, _ in risk.explanations:
        code = context_ids.get(feature_id)
        if code and code not in out:
            out.append(code)
    return out


def update_baselines(
    baselines: dict[int, BaselineStats],
    fv_values: dict[int, object],
    outcome: str,
) -> dict[int, BaselineStats]:
    """Fold numeric features into per-user baselines on Allow only.

    Deny/Lock teach nothing (don't learn from attackers); Challenge folds are
    deferred until the challenge is actually passed, at which point the caller
    re-invokes this with Allow.
    """
    if outcome != Outcome.ALLOW:
        return baselines
    for feature_id in baseline_feature_ids():
        value = fv_values.get(feature_id)
        if value is None or isinstance(value, bool):
            continue
        if isinstance(value, (int, float)):
            baselines.setdefault(feature_id, BaselineStats()).fold(float(value))
    return baselines
