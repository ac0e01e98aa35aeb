"""The committed wire-contract schema file must match the live models."""

from __future__ import annotations

import json
from pathlib import Path

from dissectauth.service.schemas import (
    AttemptRequest,
    ChallengeAnswerRequest,
    CreateUserRequest,
    OpenSessionRequest,
)

SCHEMA_PATH = Path(__file__).resolve().parent.parent / "frontend" / "schema" / "wire_contract.schema.json"


def test_committed_schema_is_current():
    committed = json.loads(SCHEMA_PATH.read_text("utf-8"))
    live = {
        "attempt_request": AttemptRequest.model_json_schema(),
        "create_user_request": CreateUserRequest.model_json_schema(),
        "open_session_request": OpenSessionRequest.model_json_schema(),
        "challenge_answer_request": ChallengeAnswerRequest.model_json_schema(),
    }
    assert committed == json.loads(json.dumps(live, sort_keys=True)), (
        "regenerate with: dissectauth export-schema --out frontend/schema/wire_contract.schema.json"
    )


def test_event_schema_fields():
    doc = json.loads(SCHEMA_PATH.read_text("utf-8"))
    defs = doc["attempt_request"]["$defs"]
    event = defs["WireEvent"]
    assert set(event["properties"]) == {"kind", "t_ms", "key", "field", "x", "y"}
    assert set(event["required"]) == {"kind", "t_ms"}
    kinds = event["properties"]["kind"]["enum"]
    assert {
        "KeyDown", "KeyUp", "Backspace", "Paste", "FocusChange", "PointerMove",
        "PointerClick", "Scroll", "Submit", "CaptchaShown", "CaptchaAction", "CaptchaSolved",
    } == set(kinds)
