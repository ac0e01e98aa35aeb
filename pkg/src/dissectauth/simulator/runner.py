"""Scenario runner: benign and adversarial traffic against the service.

One scenario file drives everything: users (secret + rule + persona), adversary
campaigns, and the seed.  The runner talks to the service exclusively through
its HTTP JSON API — in-process mode mounts the ASGI app directly (with an
injected deterministic clock), http mode points at a live server.  Same code
path either way, so reports are comparable.
"""

from __future__ import annotations

import json
import random
import statistics
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator

import httpx

from ..errors import DissectAuthError
from ..rules import RuleSpec, RuleState, advance, derive_expected, initial_state, spec_from_dict
from ..telemetry.events import RawEvent, reconstruct_typed
from .adversaries import (
    AdversaryKind,
    AdversarySpec,
    brute_force_guesses,
    dictionary_guesses,
    mutate_secret,
    stuffing_guesses,
)
from .personas import PersonaSpec, generate_events

BENIGN_POPULATION = "benign"
DEFAULT_RETRIES_PER_SESSION = 4


class ScenarioError(DissectAuthError):
    """Scenario file malformed or inconsistent."""


@dataclass
class UserScript:
    username: str
    secret: str
    rule: RuleSpec
    decoy_positions: tuple[int, ...]
    persona: PersonaSpec
    sessions: int
    state: RuleState = field(init=False)

    def __post_init__(self) -> None:
        self.state = initial_state(self.rule)


@dataclass
class Observation:
    """What a shoulder surfer saw: one full successful submission."""

    username: str
    secret: str
    time_value: int | None
    at_state_login_index: int


@dataclass
class Scenario:
    name: str
    seed: int
    users: list[UserScript]
    adversaries: list[dict]
    retries_per_session: int = DEFAULT_RETRIES_PER_SESSION

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        seed = int(doc.get("seed", 0))
        rng = random.Random(seed ^ 0x5CE11A)
        users: list[UserScript] = []
        for block in doc.get("users", []):
            users.extend(_expand_users(block, rng))
        if not users:
            raise ScenarioError("scenario defines no users")
        return cls(
            name=doc.get("name", "scenario"),
            seed=seed,
            users=users,
            adversaries=list(doc.get("adversaries", [])),
            retries_per_session=int(doc.get("retries_per_session", DEFAULT_RETRIES_PER_SESSION)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            doc = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot load scenario: {exc}") from exc
        return cls.from_dict(doc)


def _expand_users(block: dict, rng: random.Random) -> list[UserScript]:
    count = int(block.get("count", 1))
    persona = PersonaSpec.from_dict(block.get("persona", {}))
    sessions = int(block.get("sessions", 10))
    out = []
    for i in range(count):
        if count == 1 and "username" in block:
            username = block["username"]
        else:
            username = f"{block.get('username_prefix', 'user')}-{i}"
        rule_doc = block.get("rule") or {"variant": "SpecialChar", "positions": [2],
                                         "charset": ["@", "&", "*", "#"]}
        rule = spec_from_dict(rule_doc)
        secret = block.get("secret")
        if secret is None:
            secret = _random_secret(rng, int(block.get("secret_length", 10)), rule)
        decoy = tuple(block.get("decoy_positions", ()))
        out.append(UserScript(username, secret, rule, decoy, persona, sessions))
    return out


def _random_secret(rng: random.Random, length: int, rule: RuleSpec | None = None) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789"
    chars = [rng.choice(alphabet) for _ in range(length)]
    if rule is not None:
        # rule-governed positions must hold transformable characters
        for pos in rule.governed_positions():
            if pos <= length:
                chars[pos - 1] = rng.choice("abcdefghijklmnopqrstuvwxyz")
    return "".join(chars)


class SimClock:
    """Deterministic clock injected into the in-process service."""

    def __init__(self, start: datetime):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def tick(self, seconds: float) -> None:
        self.now = self.now + timedelta(seconds=seconds)


@dataclass
class PopulationStats:
    attempts: int = 0
    outcomes: dict[str, int] = field(default_factory=dict)
    rejected_locked: int = 0
    match_percentages: list[float] = field(default_factory=list)
    first_deny_indices: list[int] = field(default_factory=list)

    def note(self, outcome: str, match_pct: float | None) -> None:
        self.attempts += 1
        self.outcomes[outcome] = self.outcomes.get(outcome, 0) + 1
        if match_pct is not None:
            self.match_percentages.append(match_pct)

    def allow_rate(self) -> float:
        if self.attempts == 0:
            return 0.0
        return self.outcomes.get("Allow", 0) / self.attempts

    def lock_rate(self) -> float:
        if self.attempts == 0:
            return 0.0
        return self.outcomes.get("Lock", 0) / self.attempts

    def match_median(self) -> float | None:
        if not self.match_percentages:
            return None
        return statistics.median(self.match_percentages)

    def to_dict(self) -> dict:
        return {
            "attempts": self.attempts,
            "outcomes": dict(sorted(self.outcomes.items())),
            "rejected_while_locked": self.rejected_locked,
            "allow_rate": round(self.allow_rate(), 6),
            "lock_rate": round(self.lock_rate(), 6),
            "match_percentage_median": self.match_median(),
            "median_attempts_to_deny": (
                statistics.median(self.first_deny_indices) if self.first_deny_indices else None
            ),
        }


@dataclass
class RunReport:
    scenario: str
    seed: int
    mode: str
    populations: dict[str, PopulationStats]
    runtime_s: float = 0.0
    per_attempt: list[dict] = field(default_factory=list)
    final_profiles: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        benign = self.populations.get(BENIGN_POPULATION, PopulationStats())
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "mode": self.mode,
            "runtime_s": round(self.runtime_s, 3),
            "populations": {k: v.to_dict() for k, v in sorted(self.populations.items())},
            "benign_allow_rate": round(benign.allow_rate(), 6),
            "benign_lockout_rate": round(benign.lock_rate(), 6),
            "attacker_success_rates": {
                k: round(v.allow_rate(), 6)
                for k, v in sorted(self.populations.items())
                if k != BENIGN_POPULATION
            },
        }

    def table(self) -> str:
        rows = [
            f"{'population':<22} {'attempts':>8} {'allow':>7} {'challenge':>9} "
            f"{'deny':>7} {'lock':>6} {'locked-rejects':>14} {'median match%':>13}"
        ]
        for name, stats in sorted(self.populations.items()):
            median = stats.match_median()
            rows.append(
                f"{name:<22} {stats.attempts:>8} {stats.outcomes.get('Allow', 0):>7} "
                f"{stats.outcomes.get('Challenge', 0):>9} {stats.outcomes.get('Deny', 0):>7} "
                f"{stats.outcomes.get('Lock', 0):>6} {stats.rejected_locked:>14} "
                f"{median if median is not None else '-':>13}"
            )
        return "\n".join(rows)

    def write_csv(self, path: str | Path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=[
                    "population", "username", "attempt_index", "outcome",
                    "match_percentage", "risk_total", "reason_codes",
                ],
            )
            writer.writeheader()
            writer.writerows(self.per_attempt)


class ServiceClient:
    """Thin HTTP client used for both transports."""

    def __init__(self, client: httpx.Client):
        self.http = client

    def create_user(self, username: str, secret: str, rule: RuleSpec, decoy: tuple[int, ...]) -> None:
        from ..rules import spec_to_dict

        body = {"username": username, "secret": secret, "rule": spec_to_dict(rule)}
        if decoy:
            body["decoy"] = {"decoy_positions": list(decoy), "enabled": True}
        r = self.http.post("/users", json=body)
        if r.status_code == 409:
            return
        if r.status_code == 422:
            raise ScenarioError(f"user {username!r} rejected by service: {r.text}")
        r.raise_for_status()

    def open_session(self, username: str) -> str:
        r = self.http.post("/sessions", json={"username": username})
        r.raise_for_status()
        return r.json()["session_token"]

    def attempt(self, token: str, body: dict) -> tuple[int, dict]:
        r = self.http.post(f"/sessions/{token}/attempts", json=body)
        return r.status_code, r.json()

    def answer_challenge(self, token: str, answer: str) -> dict:
        r = self.http.post(
            f"/sessions/{token}/challenge", json={"session_token": token, "answer": answer}
        )
        r.raise_for_status()
        return r.json()


def _ip_octet(tag: str) -> int:
    # stable across processes (hash() is salted; crc32 is not)
    import zlib

    return zlib.crc32(tag.encode()) % 200 + 1


def _device_context(tag: str, hostile: bool = False, extra: dict | None = None) -> dict:
    ctx = {
        "device": {
            "browser": "Firefox", "browser_version": "126", "os": "Linux",
            "device_type": "desktop", "user_agent": f"Mozilla/5.0 sim-{tag}",
            "screen_width": 1920, "screen_height": 1080, "color_depth": 24,
            "touch_capable": False, "fonts_plugins_digest": f"fp-{tag}",
            "canvas_digest": f"cv-{tag}", "audio_digest": f"au-{tag}",
            "locale": "en-US", "keyboard_language": "en-US",
        },
        "network": {
            "ip": f"203.0.113.{_ip_octet(tag)}" if not hostile else f"198.51.100.{_ip_octet(tag)}",
            "asn": "AS64500" if not hostile else "AS64666",
            "isp": "SimNet" if not hostile else "BulletproofHosting",
            "connection_type": "wired",
            "vpn": hostile, "proxy": False, "tor_exit": hostile,
            "ip_reputation": "Clean" if not hostile else "Blacklisted",
        },
        "geo": {
            "country": "BD" if not hostile else "ZZ",
            "region": "Dhaka" if not hostile else None,
            "city": "Dhaka" if not hostile else None,
            "lat": 23.81 if not hostile else 48.85,
            "lon": 90.41 if not hostile else 2.35,
            "timezone_offset_min": -360,
        },
    }
    if extra:
        for section, values in extra.items():
            ctx.setdefault(section, {}).update(values)
    return ctx


class ScenarioRunner:
    def __init__(self, scenario: Scenario, client: ServiceClient, clock: SimClock | None,
                 collect_attempts: bool = False):
        self.scenario = scenario
        self.client = client
        self.clock = clock  # None in http mode: the server owns time
        self.rng = random.Random(scenario.seed)
        self.report = RunReport(
            scenario=scenario.name, seed=scenario.seed, mode="inprocess" if clock else "http",
            populations={},
        )
        self.collect_attempts = collect_attempts
        self.observations: list[Observation] = []
        self._attempt_counter = 0

    # --- helpers -----------------------------------------------------------

    def _tick(self, seconds: float) -> None:
        if self.clock is not None:
            self.clock.tick(seconds)

    def _now(self) -> datetime:
        if self.clock is not None:
            return self.clock.now
        return datetime.now(timezone.utc)

    def _next_attempt_id(self, tag: str) -> str:
        self._attempt_counter += 1
        return f"{tag}-{self._attempt_counter}"

    def _pop(self, name: str) -> PopulationStats:
        return self.report.populations.setdefault(name, PopulationStats())

    def _submit(self, population: str, username: str, token: str, candidate: str,
                events: list[RawEvent], context: dict, time_value: int | None,
                campaign_index: int | None = None) -> tuple[str, dict]:
        body = {
            "username": username,
            "secret_candidate": candidate,
            "time_value": time_value,
            "events": [e.to_wire() for e in events],
            "context": context,
            "session_token": token,
            "attempt_id": self._next_attempt_id(population),
        }
        status, doc = self.client.attempt(token, body)
        stats = self._pop(population)
        if status == 423:
            stats.rejected_locked += 1
            outcome = "RejectedLocked"
            match_pct = None
        else:
            outcome = doc["outcome"]
            match_pct = doc.get("match_percentage")
            stats.note(outcome, match_pct)
        if self.collect_attempts:
            self.report.per_attempt.append({
                "population": population,
                "username": username,
                "attempt_index": self._attempt_counter,
                "outcome": outcome,
                "match_percentage": match_pct,
                "risk_total": doc.get("risk_total"),
                "reason_codes": "|".join(doc.get("reason_codes", [])),
            })
        self._tick(self.rng.uniform(3.0, 8.0))
        return outcome, doc

    # --- benign traffic ------------------------------------------------------

    def run_benign(self) -> None:
        for user in self.scenario.users:
            self.client.create_user(user.username, user.secret, user.rule, user.decoy_positions)
        self._tick(60.0)
        remaining = {u.username: u.sessions for u in self.scenario.users}
        while any(v > 0 for v in remaining.values()):
            for user in self.scenario.users:
                if remaining[user.username] <= 0:
                    continue
                remaining[user.username] -= 1
                self._benign_session(user)
                self._tick(self.rng.uniform(300.0, 900.0))

    def _benign_session(self, user: UserScript) -> None:
        context = _device_context(user.username, extra=user.persona.device_profile or None)
        token = self.client.open_session(user.username)
        lapse = self.rng.random() < user.persona.rule_discipline_lapse
        for attempt in range(self.scenario.retries_per_session):
            now = self._now()
            state = user.state
            if lapse and attempt == 0 and state.login_index > 0:
                # forgot the schedule advanced; retype last login's secret
                stale = RuleState(
                    login_index=state.login_index - 1,
                    cursors=tuple(
                        (c - 1) % max(1, cyc) for c, cyc in zip(state.cursors, _cycles(user.rule))
                    ),
                )
                intended, tv = derive_expected(user.secret, user.rule, stale, now)
            else:
                intended, tv = derive_expected(user.secret, user.rule, state, now)
            events = generate_events(user.persona, intended, seed=self.rng.getrandbits(32))
            candidate = reconstruct_typed(events)
            outcome, doc = self._submit(
                BENIGN_POPULATION, user.username, token, candidate, events,
                context, tv,
            )
            if outcome == "Allow":
                if user.state.login_index == 0 or self.rng.random() < 0.25:
                    self.observations.append(Observation(
                        username=user.username, secret=candidate, time_value=tv,
                        at_state_login_index=user.state.login_index,
                    ))
                user.state = advance(user.rule, user.state)
                return
            if outcome == "Challenge":
                kind = (doc.get("challenge") or {}).get("kind", "RuleNameQuestion")
                if kind == "RotationThresholdQuestion":
                    answer = str(user.rule.effective_cycle())
                elif kind == "Captcha":
                    answer = "solved"
                else:
                    answer = user.rule.variant.value  # the owner knows their rule
                result = self.client.answer_challenge(token, answer)
                if result.get("outcome") == "Allow":
                    user.state = advance(user.rule, user.state)
                    return
            if outcome in ("Lock", "RejectedLocked"):
                return

    # --- adversarial traffic --------------------------------------------------

    def run_adversaries(self) -> None:
        for index, doc in enumerate(self.scenario.adversaries):
            doc = dict(doc)
            targets = doc.pop("target", "*")
            context_extra = doc.pop("context", None)
            spec = AdversarySpec.from_dict(doc)
            victims = (
                [u for u in self.scenario.users if u.username == targets]
                if targets != "*"
                else list(self.scenario.users)
            )
            if not victims:
                raise ScenarioError(f"adversary {spec.kind} targets unknown user {targets!r}")
            self._campaign(spec, victims, index, context_extra)
            self._tick(120.0)

    def _campaign(self, spec: AdversarySpec, victims: list[UserScript], index: int,
                  context_extra: dict | None) -> None:
        population = spec.kind.value
        rng = random.Random((self.scenario.seed << 8) ^ (index + 1))
        bot = PersonaSpec(
            typo_rate=0.0, dwell_mean=22.0, dwell_std=1.5, flight_mean=28.0, flight_std=2.0,
            correction_rate=0.0,
        )
        tag = f"adv-{spec.kind.value}-{index}"
        context = _device_context(tag, hostile=True, extra=context_extra)
        guesses = self._guess_stream(spec, victims, rng)
        stats = self._pop(population)
        token_by_user: dict[str, str] = {}
        first_deny: int | None = None
        for i in range(spec.attempt_budget):
            try:
                username, candidate, tv = next(guesses)
            except StopIteration:
                break
            token = token_by_user.get(username)
            if token is None:
                token = self.client.open_session(username)
                token_by_user[username] = token
            events = generate_events(bot, candidate, seed=rng.getrandbits(32))
            typed = reconstruct_typed(events)
            outcome, doc = self._submit(population, username, token, typed, events, context, tv)
            if outcome in ("Deny", "Lock") and first_deny is None:
                first_deny = i + 1
            if outcome in ("Lock", "RejectedLocked"):
                token_by_user.pop(username, None)  # session closed server-side
        if first_deny is not None:
            stats.first_deny_indices.append(first_deny)

    def _guess_stream(
        self, spec: AdversarySpec, victims: list[UserScript], rng: random.Random
    ) -> Iterator[tuple[str, str, int | None]]:
        if spec.kind is AdversaryKind.BRUTE_FORCE:
            victim = victims[0]
            for guess in brute_force_guesses(spec, rng):
                yield victim.username, guess, None
        elif spec.kind is AdversaryKind.DICTIONARY:
            victim = victims[0]
            for guess in dictionary_guesses(spec, rng):
                yield victim.username, guess, None
        elif spec.kind is AdversaryKind.CREDENTIAL_STUFFING:
            victim = victims[0]
            leaked = mutate_secret(victim.secret, spec.variant_distance, rng)
            for guess in stuffing_guesses(spec, rng, leaked):
                yield victim.username, guess, None
        elif spec.kind is AdversaryKind.SHOULDER_SURFER:
            usable = [
                o for o in self.observations
                if any(u.username == o.username and u.state.login_index
                       >= o.at_state_login_index + spec.staleness_logins
                       for u in victims)
            ]
            while True:
                if not usable:
                    return
                o = usable[rng.randrange(len(usable))]
                yield o.username, o.secret, o.time_value
        elif spec.kind is AdversaryKind.SPRAYING:
            while True:
                for victim in victims:
                    for pw in spec.spray_passwords:
                        yield victim.username, pw, None
        else:  # pragma: no cover
            raise ScenarioError(f"unhandled adversary kind {spec.kind}")


def _cycles(rule: RuleSpec) -> tuple[int, ...]:
    if rule.children:
        return tuple(c.effective_cycle() for c in rule.children)
    return (rule.effective_cycle(),)


def run(
    scenario_path: str | Path,
    seed: int | None = None,
    mode: str = "inprocess",
    base_url: str = "http://127.0.0.1:8200",
    out_path: str | Path | None = None,
    csv_path: str | Path | None = None,
    storage_root: str | Path | None = None,
) -> RunReport:
    """Execute a scenario and return (and optionally write) the report."""
    scenario = Scenario.load(scenario_path)
    if seed is not None:
        scenario.seed = seed

    started = time.monotonic()
    if mode == "inprocess":
        import tempfile

        from starlette.testclient import TestClient

        from ..service import AppConfig, create_app

        clock = SimClock(datetime(2024, 5, 1, 9, 0, tzinfo=timezone.utc))
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(storage_root) if storage_root else Path(tmp) / "store"
            config = AppConfig(storage_root=str(root), snapshot_every=0)
            app = create_app(config=config, clock=clock)
            with TestClient(app, raise_server_exceptions=False) as http:
                runner = ScenarioRunner(
                    scenario, ServiceClient(http), clock, collect_attempts=csv_path is not None
                )
                runner.run_benign()
                runner.run_adversaries()
            from ..store.records import profile_to_dict

            runner.report.final_profiles = {
                uid: profile_to_dict(p) for uid, p in app.state.store.profiles.items()
            }
            app.state.store.close()
    elif mode == "http":
        with httpx.Client(base_url=base_url, timeout=30.0) as http:
            try:
                http.get("/health").raise_for_status()
            except httpx.HTTPError as exc:
                raise ConnectionError(f"service unreachable at {base_url}: {exc}") from exc
            runner = ScenarioRunner(
                scenario, ServiceClient(http), None, collect_attempts=csv_path is not None
            )
            runner.run_benign()
            runner.run_adversaries()
    else:
        raise ScenarioError(f"unknown mode {mode!r}")

    report = runner.report
    report.runtime_s = time.monotonic() - started
    if out_path:
        Path(out_path).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    if csv_path:
        report.write_csv(csv_path)
    return report
