"""In-memory session store with a hard inactivity TTL.

Holds everything that must die with the session: candidate strings,
per-position inputs, pending challenges, and the idempotency cache.  Nothing
here is ever written to disk; expiry purges the aggregate wholesale.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field

from ..telemetry.session import SessionAggregate

SESSION_TTL_S = 30 * 60.0


@dataclass
class PendingChallenge:
    kind: str
    expected_answer: str
    matched_attempt: bool
    feature_values: dict[int, object] = field(default_factory=dict)
    attempt_id: str = ""


@dataclass
class LiveSession:
    token: str
    aggregate: SessionAggregate
    expires_at: float
    pending_challenge: PendingChallenge | None = None
    recorded_responses: dict[str, dict] = field(default_factory=dict)
    device_digest: str | None = None


class SessionStore:
    def __init__(self, ttl_s: float = SESSION_TTL_S):
        self.ttl_s = ttl_s
        self._sessions: dict[str, LiveSession] = {}
        self._lock = threading.Lock()

    def open(self, user_id: str, now: float) -> LiveSession:
        token = secrets.token_urlsafe(24)
        live = LiveSession(
            token=token,
            aggregate=SessionAggregate(session_id=token, user_id=user_id, started_at=now),
            expires_at=now + self.ttl_s,
        )
        with self._lock:
            self._sessions[token] = live
        return live

    def get(self, token: str, now: float) -> LiveSession | None:
        with self._lock:
            live = self._sessions.get(token)
            if live is None:
                return None
            if now >= live.expires_at:
                del self._sessions[token]
                return None
            live.expires_at = now + self.ttl_s
            return live

    def expired(self, now: float) -> list[LiveSession]:
        """Pop every session past its TTL (callers fold summaries, we purge)."""
        with self._lock:
            dead = [s for s in self._sessions.values() if now >= s.expires_at]
            for s in dead:
                del self._sessions[s.token]
            return dead

    def close(self, token: str) -> LiveSession | None:
        with self._lock:
            return self._sessions.pop(token, None)

    def active_count(self) -> int:
        with self._lock:
            return len(self._sessions)
