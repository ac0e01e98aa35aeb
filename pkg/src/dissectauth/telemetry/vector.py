"""Feature vectors: typed values keyed by registry id."""

from __future__ import annotations

from dataclasses import dataclass, field

from .registry import Persistence, ValueKind, descriptor_by_id, ephemeral_ids, registry


@dataclass
class FeatureVector:
    """Values for one attempt, keyed by feature id; None means Unknown."""

    attempt_id: str
    session_id: str
    user_id: str
    values: dict[int, object] = field(default_factory=dict)

    def get(self, name: str):
        from .registry import fid

        return self.values.get(fid(name))

    def permanent_values(self) -> dict[int, object]:
        """Values safe to persist: every session-ephemeral feature stripped."""
        drop = ephemeral_ids()
        return {k: v for k, v in self.values.items() if k not in drop and v is not None}


def validate_vector(fv: FeatureVector) -> list[str]:
    """Type-check values against their descriptors; returns human-readable issues."""
    issues = []
    for feature_id, value in fv.values.items():
        if value is None:
            continue
        try:
            desc = descriptor_by_id(feature_id)
        except KeyError:
            issues.append(f"unknown feature id {feature_id}")
            continue
        kind = desc.value_kind
        ok = True
        if kind is ValueKind.BOOLEAN:
            ok = isinstance(value, bool)
        elif kind is ValueKind.COUNT:
            ok = isinstance(value, int) and not isinstance(value, bool) and value >= 0
        elif kind in (ValueKind.REAL, ValueKind.DURATION_MS):
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif kind is ValueKind.PERCENTAGE:
            ok = isinstance(value, (int, float)) and 0.0 <= float(value) <= 100.0
        elif kind in (ValueKind.CATEGORY_LABEL, ValueKind.TEXT):
            ok = isinstance(value, str)
        elif kind is ValueKind.POSITION_SET:
            ok = isinstance(value, tuple) and all(
                isinstance(p, int) and p >= 1 for p in value
            )
        if not ok:
            issues.append(f"feature {feature_id} ({desc.name!r}): {value!r} is not {kind.value}")
    return issues


def ephemeral_value_ids_present(fv: FeatureVector) -> list[int]:
    drop = ephemeral_ids()
    return [k for k, v in fv.values.items() if k in drop and v is not None]


__all__ = [
    "FeatureVector",
    "validate_vector",
    "ephemeral_value_ids_present",
    "registry",
    "Persistence",
]
