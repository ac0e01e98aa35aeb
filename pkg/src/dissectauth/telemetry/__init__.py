"""Behavioral telemetry: the 173-feature registry, event analysis, extraction,
session aggregates, and per-user history."""

from .context import AttemptContext, DeviceContext, GeoContext, IpReputation, NetworkContext
from .events import (
    EventKind,
    PASSWORD_FIELD,
    RawEvent,
    TimingExtraction,
    analyze_stream,
    dwell_and_flight,
    reconstruct_typed,
)
from .extraction import extract_attempt_features
from .history import (
    BaselineStats,
    CaptchaTypeStats,
    DeviceSeen,
    GlobalStats,
    ProfileHistory,
    ProfileSummary,
    update_history,
)
from .metrics import MistakeSets, geo_velocity, haversine_km, mistake_jaccard
from .registry import (
    CATEGORY_SIZES,
    FeatureCategory,
    FeatureDescriptor,
    Persistence,
    Scope,
    SIGNATURE_STUB_FEATURES,
    ValueKind,
    baseline_feature_ids,
    descriptor,
    descriptor_by_id,
    ephemeral_ids,
    fid,
    registry,
)
from .session import SessionAggregate, note_attempt, session_mistake_positions, update_session
from .vector import FeatureVector, ephemeral_value_ids_present, validate_vector

__all__ = [
    "AttemptContext",
    "BaselineStats",
    "CATEGORY_SIZES",
    "CaptchaTypeStats",
    "DeviceContext",
    "DeviceSeen",
    "EventKind",
    "FeatureCategory",
    "FeatureDescriptor",
    "FeatureVector",
    "GeoContext",
    "GlobalStats",
    "IpReputation",
    "MistakeSets",
    "NetworkContext",
    "PASSWORD_FIELD",
    "Persistence",
    "ProfileHistory",
    "ProfileSummary",
    "RawEvent",
    "Scope",
    "SessionAggregate",
    "SIGNATURE_STUB_FEATURES",
    "TimingExtraction",
    "ValueKind",
    "analyze_stream",
    "baseline_feature_ids",
    "descriptor",
    "descriptor_by_id",
    "dwell_and_flight",
    "ephemeral_ids",
    "ephemeral_value_ids_present",
    "extract_attempt_features",
    "fid",
    "geo_velocity",
    "haversine_km",
    "mistake_jaccard",
    "note_attempt",
    "reconstruct_typed",
    "registry",
    "session_mistake_positions",
    "update_history",
    "update_session",
    "validate_vector",
]
