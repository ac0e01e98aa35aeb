"""The frozen behavioral/credential feature registry.

Feature ids, names, categories, kinds, scopes, and persistence classes are
pinned in a versioned data file so stored vectors stay decodable across
releases.  Names are load-bearing: lookups are by exact name string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

EXPECTED_TOTAL = 173


class FeatureCategory(str, Enum):
    DEVICE_FINGERPRINTING = "DeviceFingerprinting"
    GEOLOCATION = "Geolocation"
    NETWORK = "Network"
    TEMPORAL = "Temporal"
    SESSION_DEVICE_HISTORY = "SessionDeviceHistory"
    ENVIRONMENTAL_INTERACTION = "EnvironmentalInteraction"
    TYPING_BEHAVIOR = "TypingBehavior"
    PASSWORD_CHARACTERISTICS = "PasswordCharacteristics"
    RULE_INFORMATION = "RuleInformation"
    STRING_DISSECTION = "StringDissection"
    CHALLENGE_PATTERN = "ChallengePattern"
    BACKSPACE_USAGE = "BackspaceUsage"
    COMPLEXITY_SCALE = "ComplexityScale"


CATEGORY_SIZES = {
    FeatureCategory.DEVICE_FINGERPRINTING: 13,
    FeatureCategory.GEOLOCATION: 6,
    FeatureCategory.NETWORK: 6,
    FeatureCategory.TEMPORAL: 4,
    FeatureCategory.SESSION_DEVICE_HISTORY: 14,
    FeatureCategory.ENVIRONMENTAL_INTERACTION: 8,
    FeatureCategory.TYPING_BEHAVIOR: 10,
    FeatureCategory.PASSWORD_CHARACTERISTICS: 58,
    FeatureCategory.RULE_INFORMATION: 11,
    FeatureCategory.STRING_DISSECTION: 8,
    FeatureCategory.CHALLENGE_PATTERN: 14,
    FeatureCategory.BACKSPACE_USAGE: 9,
    FeatureCategory.COMPLEXITY_SCALE: 12,
}


class ValueKind(str, Enum):
    BOOLEAN = "boolean"
    COUNT = "count"
    REAL = "real"
    DURATION_MS = "duration_ms"
    PERCENTAGE = "percentage"
    CATEGORY_LABEL = "category_label"
    POSITION_SET = "position_set"
    TEXT = "text"


class Scope(str, Enum):
    PER_ATTEMPT = "PerAttempt"
    PER_SESSION = "PerSession"
    HISTORICAL = "Historical"
    GLOBAL = "Global"


class Persistence(str, Enum):
    PERMANENT = "Permanent"
    SESSION_EPHEMERAL = "SessionEphemeral"


@dataclass(frozen=True)
class FeatureDescriptor:
    id: int
    category: FeatureCategory
    name: str
    value_kind: ValueKind
    scope: Scope
    persistence: Persistence


@lru_cache(maxsize=1)
def registry() -> tuple[FeatureDescriptor, ...]:
    """All 173 descriptors, ordered by id."""
    raw = resources.files("dissectauth.data").joinpath("feature_registry.json").read_text("utf-8")
    doc = json.loads(raw)
    out = tuple(
        FeatureDescriptor(
            id=rec["id"],
            category=FeatureCategory(rec["category"]),
            name=rec["name"],
            value_kind=ValueKind(rec["value_kind"]),
            scope=Scope(rec["scope"]),
            persistence=Persistence(rec["persistence"]),
        )
        for rec in doc["features"]
    )
    if len(out) != EXPECTED_TOTAL:
        raise RuntimeError(f"registry file holds {len(out)} features, expected {EXPECTED_TOTAL}")
    return out


@lru_cache(maxsize=1)
def _by_name() -> dict[str, FeatureDescriptor]:
    return {d.name: d for d in registry()}


@lru_cache(maxsize=1)
def _by_id() -> dict[int, FeatureDescriptor]:
    return {d.id: d for d in registry()}


def descriptor(name: str) -> FeatureDescriptor:
    return _by_name()[name]


def descriptor_by_id(feature_id: int) -> FeatureDescriptor:
    return _by_id()[feature_id]


def fid(name: str) -> int:
    """Feature id for an exact registry name."""
    return _by_name()[name].id


def ephemeral_ids() -> frozenset[int]:
    return frozenset(d.id for d in registry() if d.persistence is Persistence.SESSION_EPHEMERAL)


# Hand-signature capture is future hardware; only these placeholder names are
# reserved so the registry never reuses them.  They are not part of the 173.
SIGNATURE_STUB_FEATURES = (
    "Signing speed(security challenge)",
    "Deviation occurrence",
    "Deviation position(s)",
    "Deviation intensity",
)

# Numeric per-attempt features whose per-user baselines feed the behavior tier.
BASELINE_FEATURE_NAMES = (
    "Mouse movement during login",
    "Scrolling speed on a particular page",
    "Click behavior against buttons, textboxes",
    "Key press and release timings",
    "Dwell time (duration key is pressed)",
    "Flight time (interval between keys)",
    "Typing speed for a full password for every successful login attempt",
    "Number of times the backspace button was used in a complete password",
    "Dwell time for the backspace button",
)


def baseline_feature_ids() -> tuple[int, ...]:
    return tuple(fid(n) for n in BASELINE_FEATURE_NAMES)
