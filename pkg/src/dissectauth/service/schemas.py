"""Wire schemas for every route: the published JSON contract.

The event schema is deliberately small — {kind, t_ms, key?, field?, x?, y?} —
and secret-field key identities transmitted here are session-ephemeral on the
server: used for live comparison, never persisted.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

EventKindName = Literal[
    "KeyDown",
    "KeyUp",
    "Backspace",
    "Paste",
    "FocusChange",
    "PointerMove",
    "PointerClick",
    "Scroll",
    "Submit",
    "CaptchaShown",
    "CaptchaAction",
    "CaptchaSolved",
]


class WireEvent(BaseModel):
    kind: EventKindName
    t_ms: float = Field(ge=0)
    key: Optional[str] = None
    field: Optional[str] = None
    x: Optional[float] = None
    y: Optional[float] = None


class DeviceIn(BaseModel):
    browser: Optional[str] = None
    browser_version: Optional[str] = None
    os: Optional[str] = None
    os_version: Optional[str] = None
    device_type: Optional[str] = None
    user_agent: Optional[str] = None
    screen_width: Optional[int] = None
    screen_height: Optional[int] = None
    color_depth: Optional[int] = None
    touch_capable: Optional[bool] = None
    fonts_plugins_digest: Optional[str] = None
    canvas_digest: Optional[str] = None
    audio_digest: Optional[str] = None
    locale: Optional[str] = None
    keyboard_language: Optional[str] = None


class NetworkIn(BaseModel):
    ip: Optional[str] = None
    asn: Optional[str] = None
    isp: Optional[str] = None
    connection_type: Optional[str] = None
    vpn: Optional[bool] = None
    proxy: Optional[bool] = None
    tor_exit: Optional[bool] = None
    ip_reputation: Optional[Literal["Clean", "Blacklisted", "Unknown"]] = None


class GeoIn(BaseModel):
    country: Optional[str] = None
    region: Optional[str] = None
    city: Optional[str] = None
    lat: Optional[float] = Field(default=None, ge=-90, le=90)
    lon: Optional[float] = Field(default=None, ge=-180, le=180)
    timezone_offset_min: Optional[int] = None
    clock_offset_ms: Optional[float] = None


class ContextIn(BaseModel):
    device: DeviceIn = DeviceIn()
    network: NetworkIn = NetworkIn()
    geo: GeoIn = GeoIn()
    client_time: Optional[float] = None


class RuleSpecIn(BaseModel):
    """JSON vocabulary for rule specifications (shared with storage and clients)."""

    variant: Literal["Caesar", "Space", "Leet", "SpecialChar", "CharCase", "Mixed", "Time", "Static"]
    positions: list[int] = Field(default_factory=list)
    deltas: Optional[list[int]] = None
    alphabet_mode: Optional[Literal["Letters26", "Alnum36"]] = None
    cycle_length: Optional[int] = None
    space_schedule: Optional[list[list[int]]] = None
    leet_map: Optional[dict[str, str]] = None
    leet_schedule: Optional[list[list[int]]] = None
    charset: Optional[list[str]] = None
    case_schedule: Optional[list[list[int]]] = None
    children: Optional[list["RuleSpecIn"]] = None
    offset_minutes: Optional[int] = Field(default=None, ge=0, le=59)

    def to_engine_dict(self) -> dict:
        doc = self.model_dump(exclude_none=True)
        return doc

    @field_validator("positions")
    @classmethod
    def positions_positive(cls, v: list[int]) -> list[int]:
        if any(p < 1 for p in v):
            raise ValueError("positions are 1-based")
        return v


class DecoyIn(BaseModel):
    decoy_positions: list[int] = Field(default_factory=list)
    enabled: bool = False


class CreateUserRequest(BaseModel):
    username: str = Field(min_length=1, max_length=64)
    secret: str = Field(min_length=1, max_length=256)
    rule: RuleSpecIn = RuleSpecIn(variant="Static")
    decoy: DecoyIn = DecoyIn()


class CreateUserResponse(BaseModel):
    username: str
    rule_variant: str
    rule_cycle: int
    created_at: float


class SwitchRuleRequest(BaseModel):
    rule: RuleSpecIn
    decoy: Optional[DecoyIn] = None


class OpenSessionRequest(BaseModel):
    username: str


class OpenSessionResponse(BaseModel):
    session_token: str
    expires_in_s: float


class AttemptRequest(BaseModel):
    username: str
    secret_candidate: str = ""
    time_value: Optional[int] = Field(default=None, ge=0, le=59)
    events: list[WireEvent] = Field(default_factory=list)
    context: ContextIn = ContextIn()
    session_token: str
    attempt_id: str = Field(min_length=1, max_length=128)


class ChallengeDescriptor(BaseModel):
    kind: Literal["RuleNameQuestion", "RotationThresholdQuestion", "Captcha"]
    prompt: str


class AttemptResponse(BaseModel):
    outcome: Literal["Allow", "Challenge", "Deny", "Lock"]
    challenge: Optional[ChallengeDescriptor] = None
    risk_total: float
    reason_codes: list[str]
    retry_allowed: bool
    match_percentage: Optional[float] = None
    attempt_id: str


class ChallengeAnswerRequest(BaseModel):
    session_token: str
    answer: str


class ChallengeAnswerResponse(BaseModel):
    passed: bool
    outcome: Optional[Literal["Allow", "Deny"]] = None
    attempts_left: Optional[int] = None


class PreviewStep(BaseModel):
    step: int
    expected_secret: str
    expected_time_value: Optional[int] = None


class PreviewResponse(BaseModel):
    username: str
    steps: list[PreviewStep]


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody
