"""Exception types shared across the package."""


class DissectAuthError(Exception):
    """Base class for all package errors."""


class InvalidSecret(DissectAuthError):
    """Secret string is empty or otherwise unusable."""


class UnknownKey(DissectAuthError):
    """Key identifier missing from the keyboard layout."""


class DimensionMismatch(DissectAuthError):
    """Paired vectors have different lengths."""


class InvalidRule(DissectAuthError):
    """Rule specification is inconsistent with the secret it governs."""


class UserExists(DissectAuthError):
    """Attempt to create a user id that is already registered."""


class NotFound(DissectAuthError):
    """Requested user or record does not exist."""


class SessionMismatch(DissectAuthError):
    """Feature vector folded into an aggregate from a different session."""


class SchemaViolation(DissectAuthError):
    """Persisted record would violate the storage schema (e.g. ephemeral data)."""


class StorageError(DissectAuthError):
    """Underlying storage failed while appending or snapshotting."""


class LockedOut(DissectAuthError):
    """Account is locked; retries refused until the lock window expires."""
