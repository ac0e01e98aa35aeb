"""Risk scoring components, tiered decisions, lockout policy, baselines."""

from __future__ import annotations

import random

import pytest

from dissectauth.dissection import ComparisonResult
from dissectauth.risk import (
    AttemptState,
    ChallengeKind,
    Decision,
    Outcome,
    RiskConfig,
    RiskScore,
    decide,
    score,
    update_baselines,
)
from dissectauth.rules import RuleDeviationReport
from dissectauth.telemetry import BaselineStats, FeatureVector, baseline_feature_ids, fid

CONFIG = RiskConfig()


def comparison_for(match_pct: float, length: int = 10, length_delta: int = 0) -> ComparisonResult:
    wrong = round(length * (1 - match_pct / 100.0))
    return ComparisonResult(
        block_matches=(wrong == 0 and length_delta == 0,),
        mismatch_positions=frozenset(range(1, wrong + 1)),
        matched_count=length - wrong,
        match_percentage=match_pct,
        length_delta=length_delta,
    )


def report_for(deviated=False, decoy=False, non_rule=frozenset(), unreachable=frozenset()):
    return RuleDeviationReport(
        deviated=deviated,
        deviation_positions=non_rule | unreachable,
        decoy_violated=decoy,
        expected_alternatives_checked=0,
        non_rule_mismatches=non_rule,
        unreachable_rule_positions=unreachable,
    )


def vector(values: dict[str, object] | None = None) -> FeatureVector:
    fv = FeatureVector(attempt_id="a", session_id="s", user_id="u")
    for name, value in (values or {}).items():
        fv.values[fid(name)] = value
    return fv


def known_context() -> dict[str, object]:
    return {
        "Device/browser familiarity": True,
        "Login attempt from unknown IPs": False,
        "Is the TOR exit node? (Yes/No)": False,
        "Is VPN detected? (Yes/No)": False,
    }


class TestScore:
    def test_perfect_match_known_device_scores_zero(self):
        risk = score(comparison_for(100.0), report_for(), vector(known_context()), {}, CONFIG)
        assert risk.total == 0.0
        assert all(v == 0.0 for v in risk.components.values())
        assert risk.total <= CONFIG.allow_below

    def test_decoy_forces_total_one(self):
        fv = vector({**known_context(), "Is the TOR exit node? (Yes/No)": True})
        risk = score(comparison_for(100.0), report_for(deviated=True, decoy=True), fv, {}, CONFIG)
        assert risk.total == 1.0
        assert risk.decoy_forced

    def test_ninety_percent_match_consistent_history(self):
        fv = vector({**known_context(), "User’s frequent mistakes": (1,)})
        risk = score(comparison_for(90.0), report_for(), fv, {}, CONFIG)
        assert risk.components["credential"] == pytest.approx(0.10)
        assert risk.components["history_consistency"] == 0.0  # E_new == E_hist
        assert risk.total < CONFIG.allow_below

    def test_context_indicators_weighted(self):
        fv = vector({
            "Device/browser familiarity": False,
            "Is the TOR exit node? (Yes/No)": True,
        })
        risk = score(comparison_for(100.0), report_for(), fv, {}, CONFIG)
        assert risk.components["context"] == pytest.approx((0.25 + 0.20) / 1.0)

    def test_behavior_needs_minimum_baseline_count(self):
        dwell = "Dwell time (duration key is pressed)"
        fv = vector({**known_context(), dwell: 500.0})
        thin = {fid(dwell): BaselineStats(count=3, mean=80.0, m2=200.0)}
        risk = score(comparison_for(100.0), report_for(), fv, thin, CONFIG)
        assert risk.components["behavior"] == 0.0
        fat = BaselineStats()
        for v in (78.0, 80.0, 82.0, 79.0, 81.0, 80.0):
            fat.fold(v)
        risk = score(comparison_for(100.0), report_for(), fv, {fid(dwell): fat}, CONFIG)
        assert risk.components["behavior"] > 0.9  # 500ms dwell is way off an 80ms habit

    def test_rule_component_proportional(self):
        low = score(
            comparison_for(90.0),
            report_for(deviated=True, non_rule=frozenset({3})),
            vector(known_context()), {}, CONFIG,
        )
        high = score(
            comparison_for(60.0),
            report_for(deviated=True, non_rule=frozenset({1, 2, 3, 4})),
            vector(known_context()), {}, CONFIG,
        )
        assert 0.0 < low.components["rule"] < high.components["rule"] <= 1.0

    def test_match_threshold_reported(self):
        risk = score(comparison_for(100.0), report_for(), vector(), {}, CONFIG)
        assert risk.match_threshold == CONFIG.match_threshold


def risk_with(total: float, components: dict[str, float] | None = None, decoy=False) -> RiskScore:
    comps = {c: 0.0 for c in ("credential", "rule", "behavior", "context", "history_consistency")}
    comps.update(components or {})
    return RiskScore(
        components=comps, total=total, tier_reached=3, explanations=(),
        decoy_forced=decoy, match_threshold=CONFIG.match_threshold,
    )


class TestDecide:
    def test_clean_matched_attempt_allows(self):
        d = decide(risk_with(0.0), AttemptState(credential_matched=True), CONFIG)
        assert d.outcome == Outcome.ALLOW
        assert d.challenge_kind is None

    def test_low_risk_mismatch_denies_with_reason(self):
        d = decide(risk_with(0.02), AttemptState(credential_matched=False), CONFIG)
        assert d.outcome == Outcome.DENY
        assert "CREDENTIAL_MISMATCH" in d.reason_codes

    def test_challenge_band_yields_rule_name_question(self):
        d = decide(risk_with(0.30), AttemptState(credential_matched=False), CONFIG)
        assert d.outcome == Outcome.CHALLENGE
        assert d.challenge_kind == ChallengeKind.RULE_NAME_QUESTION

    def test_twelve_low_match_failures_lock(self):
        state = AttemptState(credential_matched=False, failed_in_window=12, window_match_median=30.0)
        d = decide(risk_with(0.4), state, CONFIG)
        assert d.outcome == Outcome.LOCK
        assert "STRIKE_LOCK" in d.reason_codes

    def test_twelve_high_match_failures_challenge_not_lock(self):
        state = AttemptState(credential_matched=False, failed_in_window=12, window_match_median=90.0)
        d = decide(risk_with(0.05), state, CONFIG)
        assert d.outcome == Outcome.CHALLENGE
        assert d.outcome != Outcome.LOCK

    def test_decoy_dominance(self):
        d = decide(risk_with(1.0, decoy=True), AttemptState(credential_matched=False), CONFIG)
        assert d.outcome in (Outcome.DENY, Outcome.LOCK)
        assert "DECOY_VIOLATION" in d.reason_codes

    def test_deny_band(self):
        d = decide(risk_with(0.75), AttemptState(credential_matched=False), CONFIG)
        assert d.outcome == Outcome.DENY


class TestDecisionProperties:
    def test_decoy_dominance_randomized(self):
        rng = random.Random(11)
        for _ in range(300):
            comps = {c: rng.random() for c in ("credential", "rule", "behavior", "context", "history_consistency")}
            state = AttemptState(
                credential_matched=rng.random() < 0.5,
                failed_in_window=rng.randint(0, 20),
                window_match_median=rng.uniform(0, 100),
            )
            d = decide(risk_with(1.0, comps, decoy=True), state, CONFIG)
            assert d.outcome in (Outcome.DENY, Outcome.LOCK)

    def test_lock_guard_randomized(self):
        rng = random.Random(12)
        for _ in range(300):
            # every failure in the window matched at or above the threshold
            state = AttemptState(
                credential_matched=False,
                failed_in_window=rng.randint(CONFIG.lock_strikes, 40),
                window_match_median=rng.uniform(CONFIG.match_threshold * 100.0, 100.0),
            )
            d = decide(risk_with(rng.uniform(0, 0.9)), state, CONFIG)
            assert d.outcome != Outcome.LOCK

    def test_monotonicity_in_match_percentage(self):
        rng = random.Random(13)
        fv = vector(known_context())
        for _ in range(200):
            a = rng.uniform(0, 100)
            b = rng.uniform(0, a)  # b <= a
            ra = score(comparison_for(a), report_for(), fv, {}, CONFIG)
            rb = score(comparison_for(b), report_for(), fv, {}, CONFIG)
            assert rb.total >= ra.total

    def test_determinism(self):
        fv = vector({**known_context(), "Is VPN detected? (Yes/No)": True})
        args = (comparison_for(72.5), report_for(deviated=True, non_rule=frozenset({2})), fv, {}, CONFIG)
        assert score(*args) == score(*args)

    def test_tier_short_circuit_soundness(self):
        # whenever the tier logic stops early, the outcome equals full evaluation
        rng = random.Random(14)
        full_config = RiskConfig(tiers=(("credential", "rule", "behavior", "context", "history_consistency"),))
        for _ in range(500):
            comps = {c: rng.choice([0.0, rng.random(), 1.0]) for c in ("credential", "rule", "behavior", "context", "history_consistency")}
            total = sum(comps.values()) / 5.0
            state = AttemptState(credential_matched=rng.random() < 0.5)
            tiered = decide(risk_with(total, comps), state, CONFIG)
            flat = decide(risk_with(total, comps), state, full_config)
            assert tiered.outcome == flat.outcome

    def test_tier_reached_recorded(self):
        fv = vector(known_context())
        risk = score(comparison_for(100.0), report_for(decoy=True, deviated=True), fv, {}, CONFIG)
        assert risk.tier_reached == 1
        risk = score(comparison_for(100.0), report_for(), fv, {}, CONFIG)
        assert 1 <= risk.tier_reached <= 3


class TestUpdateBaselines:
    DWELL = "Dwell time (duration key is pressed)"

    def test_first_allow_seeds_baseline(self):
        baselines: dict[int, BaselineStats] = {}
        update_baselines(baselines, {fid(self.DWELL): 82.0}, Outcome.ALLOW)
        assert baselines[fid(self.DWELL)].count == 1
        assert baselines[fid(self.DWELL)].mean == 82.0

    def test_deny_leaves_baselines_untouched(self):
        baselines: dict[int, BaselineStats] = {}
        update_baselines(baselines, {fid(self.DWELL): 82.0}, Outcome.DENY)
        update_baselines(baselines, {fid(self.DWELL): 82.0}, Outcome.LOCK)
        assert baselines == {}

    def test_two_allows_hand_arithmetic(self):
        baselines: dict[int, BaselineStats] = {}
        update_baselines(baselines, {fid(self.DWELL): 100.0}, Outcome.ALLOW)
        update_baselines(baselines, {fid(self.DWELL): 200.0}, Outcome.ALLOW)
        stats = baselines[fid(self.DWELL)]
        assert stats.mean == pytest.approx(150.0)
        assert stats.variance() == pytest.approx(5000.0)

    def test_only_registered_baseline_features_fold(self):
        baselines: dict[int, BaselineStats] = {}
        update_baselines(baselines, {fid("Matching percentage"): 90.0}, Outcome.ALLOW)
        assert baselines == {}
        assert fid("Matching percentage") not in baseline_feature_ids()
