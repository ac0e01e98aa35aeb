"""Synthetic benign typists.

A persona turns a target string into a full keystroke event stream: Gaussian
dwell/flight timings, occasional typos biased toward adjacent keys, and
backspace corrections.  Everything is driven by one seeded RNG, so a fixed
seed reproduces the byte-identical stream.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from functools import lru_cache

from ..dissection import load_layout
from ..telemetry.events import EventKind, RawEvent

TYPEABLE = string.ascii_lowercase + string.digits
HABITUAL_TYPO_RATE = 0.25
HABITUAL_CORRECTION_FACTOR = 0.65


@dataclass(frozen=True)
class PersonaSpec:
    typo_rate: float = 0.03
    ambient_bias: float = 0.8
    correction_rate: float = 0.92
    dwell_mean: float = 85.0
    dwell_std: float = 18.0
    flight_mean: float = 130.0
    flight_std: float = 45.0
    habitual_mistake_positions: frozenset[int] = frozenset()
    rule_discipline_lapse: float = 0.0  # probability of submitting last login's secret
    device_profile: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("typo_rate", "ambient_bias", "correction_rate", "rule_discipline_lapse"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if self.dwell_std < 0 or self.flight_std < 0:
            raise ValueError("std must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "PersonaSpec":
        doc = dict(doc)
        if "habitual_mistake_positions" in doc:
            doc["habitual_mistake_positions"] = frozenset(doc["habitual_mistake_positions"])
        return cls(**doc)


@lru_cache(maxsize=1)
def _neighbor_table() -> dict[str, tuple[str, ...]]:
    layout = load_layout()
    keys = sorted(k for k in layout.key_coords if k in TYPEABLE)
    table: dict[str, tuple[str, ...]] = {}
    for a in keys:
        near = tuple(
            b for b in keys if b != a and layout.distance(a, b) <= 1.5
        )
        table[a] = near or tuple(b for b in keys if b != a)
    return table


def _typo_for(ch: str, rng: random.Random, ambient_bias: float) -> str:
    low = ch.lower() if ch.lower() in TYPEABLE else "a"
    if rng.random() < ambient_bias:
        return rng.choice(_neighbor_table()[low])
    far = [c for c in TYPEABLE if c != low and c not in _neighbor_table()[low]]
    return rng.choice(far)


def generate_events(
    persona: PersonaSpec,
    target_string: str,
    seed: int,
    start_ms: float = 0.0,
) -> list[RawEvent]:
    """Event stream for typing ``target_string`` once into the password field.

    The submitted string implied by the stream (reconstruct_typed) equals the
    target except where an uncorrected typo survives.
    """
    rng = random.Random(seed)
    events: list[RawEvent] = []
    t = start_ms

    def dwell() -> float:
        return max(1.0, rng.gauss(persona.dwell_mean, persona.dwell_std))

    def flight() -> float:
        return max(1.0, rng.gauss(persona.flight_mean, persona.flight_std))

    events.append(RawEvent(EventKind.POINTER_MOVE, t, x=rng.uniform(0, 400), y=rng.uniform(0, 300)))
    t += flight()
    events.append(RawEvent(EventKind.POINTER_MOVE, t, x=rng.uniform(200, 800), y=rng.uniform(100, 500)))
    t += flight()
    events.append(RawEvent(EventKind.POINTER_CLICK, t, field="password", x=rng.uniform(300, 600), y=rng.uniform(200, 260)))
    t += flight()
    events.append(RawEvent(EventKind.FOCUS_CHANGE, t, field="password"))
    t += flight()

    def press(key: str, field_name: str = "password") -> None:
        nonlocal t
        down = t
        up = down + dwell()
        events.append(RawEvent(EventKind.KEY_DOWN, down, key=key, field=field_name))
        events.append(RawEvent(EventKind.KEY_UP, up, key=key, field=field_name))
        t = up + flight()

    def press_backspace() -> None:
        nonlocal t
        down = t
        up = down + dwell()
        events.append(RawEvent(EventKind.BACKSPACE, down, key="Backspace", field="password"))
        events.append(RawEvent(EventKind.KEY_UP, up, key="Backspace", field="password"))
        t = up + flight()

    for index, ch in enumerate(target_string, start=1):
        habitual = index in persona.habitual_mistake_positions
        typo_rate = HABITUAL_TYPO_RATE if habitual else persona.typo_rate
        correction = persona.correction_rate * (HABITUAL_CORRECTION_FACTOR if habitual else 1.0)
        if rng.random() < typo_rate:
            wrong = _typo_for(ch, rng, persona.ambient_bias)
            if ch.isupper():
                press("Shift", "password")
            press(wrong)
            if rng.random() < correction:
                press_backspace()
            else:
                continue  # the typo survives; intended char never typed
        if ch.isupper():
            events.append(RawEvent(EventKind.KEY_DOWN, t, key="Shift", field="password"))
            shift_down = t
            t += dwell() * 0.3
            press(ch)
            events.append(RawEvent(EventKind.KEY_UP, max(t - 1.0, shift_down + 1.0), key="Shift", field="password"))
        else:
            press(ch)

    events.append(RawEvent(EventKind.SUBMIT, t, field="password"))
    return events
