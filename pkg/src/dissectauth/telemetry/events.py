"""Raw client event streams: parsing, timing reconstruction, stream statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from statistics import fmean


class EventKind(str, Enum):
    KEY_DOWN = "KeyDown"
    KEY_UP = "KeyUp"
    BACKSPACE = "Backspace"
    PASTE = "Paste"
    FOCUS_CHANGE = "FocusChange"
    POINTER_MOVE = "PointerMove"
    POINTER_CLICK = "PointerClick"
    SCROLL = "Scroll"
    SUBMIT = "Submit"
    CAPTCHA_SHOWN = "CaptchaShown"
    CAPTCHA_ACTION = "CaptchaAction"
    CAPTCHA_SOLVED = "CaptchaSolved"


PASSWORD_FIELD = "password"


@dataclass(frozen=True)
class RawEvent:
    """One client event; ``t_ms`` is milliseconds since session start.

    ``key`` for secret-field key events is transient input: it is used for
    live comparison and synthesis but must never survive session close in any
    persisted structure.
    """

    kind: EventKind
    t_ms: float
    key: str | None = None
    field: str | None = None
    x: float | None = None
    y: float | None = None

    def to_wire(self) -> dict:
        out: dict = {"kind": self.kind.value, "t_ms": self.t_ms}
        if self.key is not None:
            out["key"] = self.key
        if self.field is not None:
            out["field"] = self.field
        if self.x is not None:
            out["x"] = self.x
        if self.y is not None:
            out["y"] = self.y
        return out

    @classmethod
    def from_wire(cls, doc: dict) -> "RawEvent":
        return cls(
            kind=EventKind(doc["kind"]),
            t_ms=float(doc["t_ms"]),
            key=doc.get("key"),
            field=doc.get("field"),
            x=doc.get("x"),
            y=doc.get("y"),
        )


@dataclass(frozen=True)
class TimingExtraction:
    """Dwell/flight reconstruction; unmatched presses are excluded, not guessed."""

    dwell: tuple[float, ...]
    flight: tuple[float, ...]
    unmatched_downs: int = 0


MODIFIER_KEYS = frozenset({"Shift", "CapsLock", "Tab", "ModeSwitch", "Backspace"})


def dwell_and_flight(events: list[RawEvent], field: str | None = PASSWORD_FIELD) -> TimingExtraction:
    """Per-press hold times and inter-key gaps for one input field.

    ``dwell[i]`` is release minus press of key i; ``flight[j]`` is press of key
    j+1 minus release of key j, which goes negative under rollover typing.
    Modifier keys are not part of the character stream.
    """
    downs: list[RawEvent] = []
    ups: dict[int, float] = {}
    pending: dict[str, list[int]] = {}
    unmatched = 0
    for ev in events:
        if field is not None and ev.field != field:
            continue
        if ev.key in MODIFIER_KEYS:
            continue
        if ev.kind is EventKind.KEY_DOWN:
            pending.setdefault(ev.key or "", []).append(len(downs))
            downs.append(ev)
        elif ev.kind is EventKind.KEY_UP:
            queue = pending.get(ev.key or "")
            if queue:
                ups[queue.pop(0)] = ev.t_ms
    dwell = []
    flight = []
    prev_up: float | None = None
    for i, down in enumerate(downs):
        up = ups.get(i)
        if up is None:
            unmatched += 1
            continue
        dwell.append(up - down.t_ms)
        if prev_up is not None:
            flight.append(down.t_ms - prev_up)
        prev_up = up
    return TimingExtraction(tuple(dwell), tuple(flight), unmatched)


def reconstruct_typed(events: list[RawEvent], field: str = PASSWORD_FIELD) -> str:
    """Final field content implied by key-down, paste, and backspace events."""
    buf: list[str] = []
    for ev in events:
        if ev.field != field:
            continue
        if ev.kind is EventKind.KEY_DOWN and ev.key and len(ev.key) == 1:
            buf.append(ev.key)
        elif ev.kind is EventKind.PASTE and ev.key:
            buf.extend(ev.key)
        elif ev.kind is EventKind.BACKSPACE and buf:
            buf.pop()
    return "".join(buf)


@dataclass
class StreamStats:
    """Aggregates over one attempt's event stream used by feature extraction."""

    typing_time_ms: float | None = None
    mean_dwell_ms: float | None = None
    mean_flight_ms: float | None = None
    typing_speed_cps: float | None = None
    unmatched_downs: int = 0

    paste_any: bool = False
    paste_in_password: bool = False
    focus_changes: int = 0
    pointer_clicks: int = 0
    pointer_speed: float | None = None
    scroll_speed: float | None = None
    click_to_type_ms: float | None = None

    shift_dwell_ms: float | None = None
    caps_lock_used: bool = False
    tab_used: bool = False
    mode_switch_used: bool = False

    backspace_count: int = 0
    backspace_positions: tuple[int, ...] = ()
    backspace_dwell_ms: float | None = None
    backspace_long_press: bool = False
    emptied_field: bool = False
    removed_last_char: bool = False
    removed_middle_char: bool = False

    captcha_shown_at: float | None = None
    captcha_solved_at: float | None = None
    captcha_first_action_at: float | None = None
    captcha_actions: int = 0
    captcha_action_dwell_ms: float | None = None
    captcha_action_flight_ms: float | None = None
    key_sequence_fields: tuple[str, ...] = ()


def _pair_dwells(events: list[RawEvent], key: str) -> list[float]:
    downs: list[float] = []
    out: list[float] = []
    for ev in events:
        if ev.key != key:
            continue
        if ev.kind in (EventKind.KEY_DOWN, EventKind.BACKSPACE):
            downs.append(ev.t_ms)
        elif ev.kind is EventKind.KEY_UP and downs:
            out.append(ev.t_ms - downs.pop(0))
    return out


def analyze_stream(events: list[RawEvent]) -> StreamStats:
    stats = StreamStats()
    timing = dwell_and_flight(events, PASSWORD_FIELD)
    stats.unmatched_downs = timing.unmatched_downs
    if timing.dwell:
        stats.mean_dwell_ms = fmean(timing.dwell)
    if timing.flight:
        stats.mean_flight_ms = fmean(timing.flight)

    pw_keys = [
        ev for ev in events
        if ev.field == PASSWORD_FIELD
        and ev.kind in (EventKind.KEY_DOWN, EventKind.KEY_UP)
        and ev.key not in MODIFIER_KEYS
    ]
    if pw_keys:
        start = min(ev.t_ms for ev in pw_keys)
        end = max(ev.t_ms for ev in pw_keys)
        stats.typing_time_ms = end - start
        presses = sum(1 for ev in pw_keys if ev.kind is EventKind.KEY_DOWN)
        if end > start and presses > 1:
            stats.typing_speed_cps = 1000.0 * presses / (end - start)

    typed_len = 0
    first_type_t: float | None = None
    last_click_t: float | None = None
    last_bs_t: float | None = None
    clicked_mid_field = False
    for ev in events:
        if ev.kind is EventKind.PASTE:
            stats.paste_any = True
            if ev.field == PASSWORD_FIELD:
                stats.paste_in_password = True
                typed_len += len(ev.key or "")
        elif ev.kind is EventKind.FOCUS_CHANGE:
            stats.focus_changes += 1
        elif ev.kind is EventKind.POINTER_CLICK:
            stats.pointer_clicks += 1
            last_click_t = ev.t_ms
            if ev.field == PASSWORD_FIELD and typed_len > 0:
                clicked_mid_field = True
        elif ev.kind is EventKind.KEY_DOWN:
            if ev.key == "CapsLock":
                stats.caps_lock_used = True
            elif ev.key == "Tab":
                stats.tab_used = True
            elif ev.key == "ModeSwitch":
                stats.mode_switch_used = True
            if ev.field == PASSWORD_FIELD and ev.key and len(ev.key) == 1:
                if first_type_t is None:
                    first_type_t = ev.t_ms
                    if last_click_t is not None:
                        stats.click_to_type_ms = ev.t_ms - last_click_t
                typed_len += 1
        elif ev.kind is EventKind.BACKSPACE and ev.field == PASSWORD_FIELD:
            stats.backspace_count += 1
            if typed_len > 0:
                stats.backspace_positions = stats.backspace_positions + (typed_len,)
                typed_len -= 1
                stats.removed_last_char = not clicked_mid_field
                stats.removed_middle_char = clicked_mid_field
                if typed_len == 0:
                    stats.emptied_field = True
            if last_bs_t is not None and ev.t_ms - last_bs_t < 40.0:
                stats.backspace_long_press = True
            last_bs_t = ev.t_ms
        elif ev.kind is EventKind.CAPTCHA_SHOWN:
            stats.captcha_shown_at = ev.t_ms
        elif ev.kind is EventKind.CAPTCHA_ACTION:
            stats.captcha_actions += 1
            if stats.captcha_first_action_at is None:
                stats.captcha_first_action_at = ev.t_ms
        elif ev.kind is EventKind.CAPTCHA_SOLVED:
            stats.captcha_solved_at = ev.t_ms

    shift_dwells = _pair_dwells(events, "Shift")
    if shift_dwells:
        stats.shift_dwell_ms = fmean(shift_dwells)
    bs_dwells = _pair_dwells(events, "Backspace")
    if bs_dwells:
        stats.backspace_dwell_ms = fmean(bs_dwells)

    moves = [ev for ev in events if ev.kind is EventKind.POINTER_MOVE and ev.x is not None]
    if len(moves) >= 2:
        dist = 0.0
        for a, b in zip(moves, moves[1:]):
            dist += ((b.x - a.x) ** 2 + (b.y - a.y) ** 2) ** 0.5
        dt = moves[-1].t_ms - moves[0].t_ms
        if dt > 0:
            stats.pointer_speed = 1000.0 * dist / dt
    scrolls = [ev for ev in events if ev.kind is EventKind.SCROLL and ev.y is not None]
    if len(scrolls) >= 2:
        dist = sum(abs(b.y - a.y) for a, b in zip(scrolls, scrolls[1:]))
        dt = scrolls[-1].t_ms - scrolls[0].t_ms
        if dt > 0:
            stats.scroll_speed = 1000.0 * dist / dt

    captcha_downs = [ev.t_ms for ev in events if ev.kind is EventKind.CAPTCHA_ACTION]
    if len(captcha_downs) >= 2:
        gaps = [b - a for a, b in zip(captcha_downs, captcha_downs[1:])]
        stats.captcha_action_flight_ms = fmean(gaps)
        stats.captcha_action_dwell_ms = min(gaps)

    seen_fields: list[str] = []
    for ev in events:
        if ev.kind is EventKind.KEY_DOWN and ev.field and (
            not seen_fields or seen_fields[-1] != ev.field
        ):
            seen_fields.append(ev.field)
    stats.key_sequence_fields = tuple(seen_fields)
    return stats
