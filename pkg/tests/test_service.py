"""HTTP API: registration, sessions, attempt flow, challenges, admin routes."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from dissectauth.service import AppConfig, create_app

ADMIN = {"Authorization": "Bearer test-admin"}


class SimClock:
    def __init__(self, start: datetime):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def tick(self, seconds: float = 1.0) -> None:
        self.now = self.now + timedelta(seconds=seconds)


@pytest.fixture
def clock():
    return SimClock(datetime(2024, 5, 1, 15, 30, tzinfo=timezone.utc))


@pytest.fixture
def client(tmp_path, clock):
    config = AppConfig(storage_root=str(tmp_path / "data"), admin_token="test-admin")
    app = create_app(config=config, clock=clock)
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c
    app.state.store.close()


SPECIAL_RULE = {"variant": "SpecialChar", "positions": [2], "charset": ["@", "&", "*", "#"]}


def register(client, username="alice", secret="yomnot2025", rule=None, decoy=None):
    body = {"username": username, "secret": secret, "rule": rule or SPECIAL_RULE}
    if decoy:
        body["decoy"] = decoy
    r = client.post("/users", json=body)
    assert r.status_code == 201, r.text
    return r.json()


def open_session(client, username="alice"):
    r = client.post("/sessions", json={"username": username})
    assert r.status_code == 201, r.text
    return r.json()["session_token"]


def attempt_body(token, candidate, username="alice", attempt_id="a1", time_value=None,
                 context=None, events=None):
    return {
        "username": username,
        "secret_candidate": candidate,
        "time_value": time_value,
        "events": events or [],
        "context": context or {
            "device": {"browser": "Firefox", "user_agent": "UA", "screen_width": 1280,
                       "screen_height": 800, "fonts_plugins_digest": "fp"},
            "network": {"ip": "203.0.113.5", "vpn": False, "tor_exit": False},
            "geo": {"country": "BD", "region": "Dhaka", "city": "Dhaka"},
        },
        "session_token": token,
        "attempt_id": attempt_id,
    }


def submit(client, token, candidate, **kw):
    body = attempt_body(token, candidate, **kw)
    return client.post(f"/sessions/{token}/attempts", json=body)


class TestRegistration:
    def test_register_and_first_login(self, client):
        register(client)
        token = open_session(client)
        r = submit(client, token, "y@mnot2025")
        assert r.status_code == 200
        doc = r.json()
        assert doc["outcome"] == "Allow"
        assert doc["challenge"] is None
        assert doc["match_percentage"] == 100.0

    def test_duplicate_user_409(self, client):
        register(client)
        r = client.post("/users", json={"username": "alice", "secret": "x1y2z3", "rule": SPECIAL_RULE})
        assert r.status_code == 409
        assert r.json()["error"]["code"] == "USER_EXISTS"

    def test_invalid_rule_422(self, client):
        bad = {"variant": "SpecialChar", "positions": [40], "charset": ["@"]}
        r = client.post("/users", json={"username": "bob", "secret": "short", "rule": bad})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "INVALID_RULE"

    def test_unknown_user_session_404(self, client):
        r = client.post("/sessions", json={"username": "ghost"})
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "NOT_FOUND"


class TestAttemptFlow:
    def test_replay_of_same_secret_rejected_after_advance(self, client):
        register(client)
        token = open_session(client)
        assert submit(client, token, "y@mnot2025").json()["outcome"] == "Allow"
        token2 = open_session(client)
        r = submit(client, token2, "y@mnot2025", attempt_id="a2")
        assert r.json()["outcome"] != "Allow"
        r = submit(client, token2, "y&mnot2025", attempt_id="a3")
        assert r.json()["outcome"] == "Allow"

    def test_idempotent_attempt_id_returns_recorded_decision(self, client, clock):
        register(client)
        token = open_session(client)
        body = attempt_body(token, "wrongwrong", attempt_id="nonce-1")
        first = client.post(f"/sessions/{token}/attempts", json=body).json()
        clock.tick(5)
        again = client.post(f"/sessions/{token}/attempts", json=body).json()
        assert again == first
        store = client.app.state.store
        entries = store.scan_attempts("alice")
        assert len([e for e in entries if e.attempt_id == "nonce-1"]) == 1

    def test_decoy_violation_locks_with_reason(self, client):
        register(
            client, username="carol", secret="yomnot2025",
            decoy={"decoy_positions": [5], "enabled": True},
        )
        token = open_session(client, "carol")
        r = submit(client, token, "y@mnXt2025", username="carol")
        doc = r.json()
        assert doc["outcome"] in ("Deny", "Lock")
        assert "DECOY_VIOLATION" in doc["reason_codes"]
        assert doc["retry_allowed"] is False

    def test_time_rule_value_accepted(self, client, clock):
        register(client, username="tina", secret="yomnot2025",
                 rule={"variant": "Time", "offset_minutes": 15})
        token = open_session(client, "tina")
        # clock fixed at 15:30 -> expected value 45
        r = submit(client, token, "yomnot2025", username="tina", time_value=45)
        assert r.json()["outcome"] == "Allow"
        token = open_session(client, "tina")
        r = submit(client, token, "yomnot2025", username="tina", time_value=10, attempt_id="a2")
        assert r.json()["outcome"] != "Allow"

    def test_locked_account_gets_423(self, client, clock):
        register(client, username="dave", secret="yomnot2025")
        for i in range(12):
            token = open_session(client, "dave")
            r = submit(client, token, f"garbage{i:03d}", username="dave", attempt_id=f"a{i}")
            doc = r.json()
            clock.tick(1)
            if doc["outcome"] == "Lock":
                break
        else:
            pytest.fail("strike lock never fired")
        token = open_session(client, "dave")
        r = submit(client, token, "y@mnot2025", username="dave", attempt_id="afterlock")
        assert r.status_code == 423
        assert r.json()["error"]["code"] == "ACCOUNT_LOCKED"

    def test_session_token_required(self, client):
        register(client)
        body = attempt_body("bogus", "whatever")
        r = client.post("/sessions/bogus/attempts", json=body)
        assert r.status_code == 401
        assert r.json()["error"]["code"] == "SESSION_INVALID"

    def test_no_secret_material_in_error_bodies(self, client):
        register(client, username="eve", secret="SuperSentinel42")
        token = open_session(client, "eve")
        r = submit(client, token, "SuperSentinel42XX", username="eve")
        assert "SuperSentinel42" not in r.text or r.json().get("outcome")  # response has no echo
        r2 = client.post("/sessions/nope/attempts", json=attempt_body("nope", "SuperSentinel42"))
        assert "SuperSentinel42" not in r2.text


class TestChallenges:
    def setup_challenge(self, client, clock):
        # a correct secret from suspicious context lands in the challenge band
        register(client, username="hank", secret="yomnot2025")
        token = open_session(client, "hank")
        assert submit(client, token, "y@mnot2025", username="hank").json()["outcome"] == "Allow"
        context = {
            "device": {"browser": "Tor Browser"},
            "network": {"ip": "198.51.100.9", "vpn": True, "tor_exit": True},
            "geo": {"country": "ZZ"},
        }
        token = open_session(client, "hank")
        r = submit(client, token, "y&mnot2025", username="hank", attempt_id="c1", context=context)
        return token, r.json()

    def test_challenge_issued_and_passed_completes_login(self, client, clock):
        token, doc = self.setup_challenge(client, clock)
        assert doc["outcome"] == "Challenge", doc
        assert doc["challenge"]["kind"] == "RuleNameQuestion"
        r = client.post(
            f"/sessions/{token}/challenge",
            json={"session_token": token, "answer": "specialchar"},
        )
        out = r.json()
        assert out["passed"] is True
        assert out["outcome"] == "Allow"

    def test_wrong_answer_counts_down(self, client, clock):
        token, doc = self.setup_challenge(client, clock)
        assert doc["outcome"] == "Challenge"
        r = client.post(
            f"/sessions/{token}/challenge",
            json={"session_token": token, "answer": "caesar"},
        )
        out = r.json()
        assert out["passed"] is False
        assert out["attempts_left"] == 2

    def test_challenge_without_pending_422(self, client):
        register(client)
        token = open_session(client)
        r = client.post(f"/sessions/{token}/challenge", json={"session_token": token, "answer": "x"})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "NO_CHALLENGE_PENDING"


class TestAdmin:
    def test_profile_requires_token(self, client):
        register(client)
        assert client.get("/admin/users/alice/profile").status_code == 401
        r = client.get("/admin/users/alice/profile", headers=ADMIN)
        assert r.status_code == 200
        doc = r.json()
        assert "sealed_base_secret" not in doc["profile"]

    def test_stats_exposed(self, client):
        register(client)
        r = client.get("/admin/stats", headers=ADMIN)
        assert r.status_code == 200
        assert r.json()["stats"]["rule_creation_chosen"]["SpecialChar"] == 1

    def test_preview_matches_rule_engine(self, client):
        register(client)
        r = client.get("/admin/users/alice/preview?steps=4", headers=ADMIN)
        assert r.status_code == 200
        secrets = [s["expected_secret"] for s in r.json()["steps"]]
        assert secrets == ["y@mnot2025", "y&mnot2025", "y*mnot2025", "y#mnot2025"]

    def test_rule_switch_records_stats(self, client, clock):
        register(client)
        r = client.post("/users/alice/rule", json={"rule": {"variant": "Static"}})
        assert r.status_code == 200
        stats = client.get("/admin/stats", headers=ADMIN).json()["stats"]
        assert stats["rule_left"]["SpecialChar"] == 1


class TestEphemeralPurge:
    def test_sentinel_never_persisted(self, client, tmp_path, clock):
        sentinel = "ZqXvWt2718"
        register(client, username="secretive", secret=sentinel,
                 rule={"variant": "Static"})
        token = open_session(client, "secretive")
        # typo first, then the real secret, with per-key events
        events = [
            {"kind": "KeyDown", "t_ms": float(i * 100), "key": c, "field": "password"}
            for i, c in enumerate(sentinel)
        ]
        submit(client, token, sentinel + "x", username="secretive", attempt_id="p1",
               events=events)
        token = open_session(client, "secretive")
        r = submit(client, token, sentinel, username="secretive", attempt_id="p2",
                   events=events)
        assert r.json()["outcome"] == "Allow"
        store = client.app.state.store
        store.snapshot_all()
        for path in store.root.rglob("*"):
            if path.is_file():
                assert sentinel.encode() not in path.read_bytes(), path


class TestErrorEnvelope:
    def test_admin_401_uses_error_envelope(self, client):
        r = client.get("/admin/stats")
        assert r.status_code == 401
        assert r.json()["error"]["code"] == "BAD_ADMIN_TOKEN"

    def test_leet_rule_defaults_to_configured_map(self, client):
        r = client.post("/users", json={
            "username": "leety", "secret": "yomnot",
            "rule": {"variant": "Leet", "leet_schedule": [[1], []]},
        })
        assert r.status_code == 201, r.text
        preview = client.get("/admin/users/leety/preview?steps=2", headers=ADMIN).json()
        secrets = [s["expected_secret"] for s in preview["steps"]]
        assert secrets == ["eomnot", "yomnot"]  # y -> e from the default table
