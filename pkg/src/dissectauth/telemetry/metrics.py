"""Mistake-set similarity and geolocation velocity."""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class MistakeSets:
    """Current vs historically common mistake positions."""

    current: frozenset[int]
    historical: frozenset[int]


def mistake_jaccard(sets: MistakeSets) -> float:
    """Jaccard index of the two position sets.

    Two empty sets score 1.0: a flawless login is perfectly consistent with a
    history of flawless logins, not an anomaly.
    """
    union = sets.current | sets.historical
    if not union:
        return 1.0
    return len(sets.current & sets.historical) / len(union)


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return EARTH_RADIUS_KM * 2 * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def geo_velocity(
    prev: tuple[float, float, float],
    curr: tuple[float, float, float],
) -> float:
    """Great-circle speed in km/h between (lat, lon, unix_seconds) samples.

    Zero elapsed time with nonzero distance yields +infinity, a deliberate
    impossible-travel sentinel.
    """
    lat1, lon1, t1 = prev
    lat2, lon2, t2 = curr
    distance = haversine_km(lat1, lon1, lat2, lon2)
    hours = (t2 - t1) / 3600.0
    if hours <= 0:
        return 0.0 if distance == 0.0 else math.inf
    return distance / hours
