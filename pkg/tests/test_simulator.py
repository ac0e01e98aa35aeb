"""Persona event synthesis, adversary generators, and scenario runs."""

from __future__ import annotations

import json
import random

import pytest

from dissectauth.simulator import (
    AdversaryKind,
    AdversarySpec,
    PersonaSpec,
    Scenario,
    ScenarioError,
    bundled_wordlist,
    generate_events,
    mutate_secret,
    run,
)
from dissectauth.telemetry import reconstruct_typed
from dissectauth.telemetry.events import EventKind


class TestGenerateEvents:
    def test_zero_typo_rate_types_target_exactly(self):
        persona = PersonaSpec(typo_rate=0.0)
        for seed in (1, 2, 3):
            events = generate_events(persona, "yomnot2025", seed=seed)
            assert reconstruct_typed(events) == "yomnot2025"

    def test_zero_std_gives_constant_dwell(self):
        persona = PersonaSpec(typo_rate=0.0, dwell_std=0.0, dwell_mean=80.0)
        events = generate_events(persona, "abcdef", seed=5)
        presses = {}
        dwells = []
        for ev in events:
            if ev.kind is EventKind.KEY_DOWN and ev.key and len(ev.key) == 1:
                presses[ev.key] = ev.t_ms
            elif ev.kind is EventKind.KEY_UP and ev.key in presses:
                dwells.append(ev.t_ms - presses.pop(ev.key))
        assert dwells and all(d == pytest.approx(80.0) for d in dwells)

    def test_fixed_seed_reproduces_stream_exactly(self):
        persona = PersonaSpec(typo_rate=0.2, ambient_bias=0.5)
        a = generate_events(persona, "yomnot2025", seed=42)
        b = generate_events(persona, "yomnot2025", seed=42)
        assert a == b

    def test_typos_produce_backspaces(self):
        persona = PersonaSpec(typo_rate=0.8, correction_rate=1.0)
        events = generate_events(persona, "abcdefgh", seed=9)
        kinds = [e.kind for e in events]
        assert EventKind.BACKSPACE in kinds
        assert reconstruct_typed(events) == "abcdefgh"  # every typo corrected

    def test_uncorrected_typos_survive_to_submission(self):
        persona = PersonaSpec(typo_rate=1.0, correction_rate=0.0, ambient_bias=1.0)
        events = generate_events(persona, "abcdef", seed=3)
        typed = reconstruct_typed(events)
        assert typed != "abcdef"
        assert len(typed) == 6


class TestAdversaries:
    def test_bundled_wordlist_size(self):
        words = bundled_wordlist()
        assert len(words) == 1000
        assert all(words)

    def test_mutate_secret_distance(self):
        rng = random.Random(4)
        for _ in range(50):
            variant = mutate_secret("yomnot2025", 2, rng)
            assert len(variant) == 10
            diff = sum(1 for a, b in zip("yomnot2025", variant) if a != b)
            assert 1 <= diff <= 2

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            AdversarySpec(kind=AdversaryKind.BRUTE_FORCE, attempt_budget=0)


SMALL_SCENARIO = {
    "name": "smoke",
    "seed": 77,
    "users": [
        {
            "count": 2,
            "username_prefix": "u",
            "secret_length": 10,
            "rule": {"variant": "SpecialChar", "positions": [2], "charset": ["@", "&"]},
            "persona": {"typo_rate": 0.0},
            "sessions": 3,
        }
    ],
    "adversaries": [
        {"kind": "BruteForce", "target": "u-0", "attempt_budget": 15, "guess_length": 10},
        {"kind": "ShoulderSurfer", "target": "*", "attempt_budget": 5, "staleness_logins": 1},
    ],
}


class TestScenarioRun:
    def test_flawless_personas_always_allowed(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(SMALL_SCENARIO))
        report = run(path, mode="inprocess")
        benign = report.populations["benign"]
        assert benign.attempts == 6
        assert benign.allow_rate() == 1.0
        assert benign.lock_rate() == 0.0

    def test_brute_force_never_allowed_and_low_match(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(SMALL_SCENARIO))
        report = run(path, mode="inprocess")
        brute = report.populations["BruteForce"]
        assert brute.outcomes.get("Allow", 0) == 0
        assert brute.match_median() is not None and brute.match_median() <= 20.0

    def test_shoulder_surfer_replay_rejected(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(SMALL_SCENARIO))
        report = run(path, mode="inprocess")
        surfer = report.populations["ShoulderSurfer"]
        assert surfer.attempts > 0
        assert surfer.outcomes.get("Allow", 0) == 0

    def test_seeded_determinism(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(SMALL_SCENARIO))
        a = run(path, mode="inprocess").to_dict()
        b = run(path, mode="inprocess").to_dict()
        a.pop("runtime_s")
        b.pop("runtime_s")
        assert a == b

    def test_csv_and_json_outputs(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(SMALL_SCENARIO))
        out = tmp_path / "report.json"
        csv_out = tmp_path / "records.csv"
        report = run(path, mode="inprocess", out_path=out, csv_path=csv_out)
        doc = json.loads(out.read_text())
        assert doc["populations"]["benign"]["attempts"] == report.populations["benign"].attempts
        lines = csv_out.read_text().strip().splitlines()
        assert len(lines) == 1 + sum(p.attempts + p.rejected_locked for p in report.populations.values())

    def test_bad_scenario_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"seed": 1, "users": []}))
        with pytest.raises(ScenarioError):
            run(path, mode="inprocess")

    def test_unreachable_service_raises_connection_error(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(SMALL_SCENARIO))
        with pytest.raises(ConnectionError):
            run(path, mode="http", base_url="http://127.0.0.1:1")
