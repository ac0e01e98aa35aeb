"""Durable profiles, append-only attempt log, sealing, and session-ephemeral state."""

from .ephemeral import LiveSession, PendingChallenge, SessionStore, SESSION_TTL_S
from .records import (
    AttemptLogEntry,
    UserProfile,
    entry_from_dict,
    entry_to_dict,
    profile_from_dict,
    profile_to_dict,
    validate_entry,
)
from .store import ProfileStore, SessionSummary, STRIKE_HORIZON_S
from .vault import SealedBox, SecretVault, VaultHandle, master_key_from_hex

__all__ = [
    "AttemptLogEntry",
    "LiveSession",
    "PendingChallenge",
    "ProfileStore",
    "SESSION_TTL_S",
    "STRIKE_HORIZON_S",
    "SealedBox",
    "SecretVault",
    "SessionStore",
    "SessionSummary",
    "UserProfile",
    "VaultHandle",
    "entry_from_dict",
    "entry_to_dict",
    "master_key_from_hex",
    "profile_from_dict",
    "profile_to_dict",
    "validate_entry",
]
