"""Device, network, and geographic context attached to a login attempt.

Every field is optional: clients report what they can, and anything absent is
Unknown rather than fabricated.  The service treats these as resolved inputs;
it performs no live reputation or geo lookups.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum


class IpReputation(str, Enum):
    CLEAN = "Clean"
    BLACKLISTED = "Blacklisted"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class DeviceContext:
    browser: str | None = None
    browser_version: str | None = None
    os: str | None = None
    os_version: str | None = None
    device_type: str | None = None
    user_agent: str | None = None
    screen_width: int | None = None
    screen_height: int | None = None
    color_depth: int | None = None
    touch_capable: bool | None = None
    fonts_plugins_digest: str | None = None
    canvas_digest: str | None = None
    audio_digest: str | None = None
    locale: str | None = None
    keyboard_language: str | None = None

    def fingerprint_digest(self) -> str:
        """Stable digest over the identifying surface; used as the device key."""
        parts = (
            self.browser, self.browser_version, self.os, self.os_version,
            self.device_type, self.user_agent,
            str(self.screen_width), str(self.screen_height), str(self.color_depth),
            str(self.touch_capable), self.fonts_plugins_digest,
            self.canvas_digest, self.audio_digest,
        )
        h = hashlib.sha256("\x1f".join(p or "" for p in parts).encode("utf-8"))
        return h.hexdigest()[:32]

    def missing_entropy(self) -> bool:
        return (
            self.screen_width is None
            or self.fonts_plugins_digest is None
            or self.user_agent is None
        )


@dataclass(frozen=True)
class NetworkContext:
    ip: str | None = None
    asn: str | None = None
    isp: str | None = None
    connection_type: str | None = None
    vpn: bool | None = None
    proxy: bool | None = None
    tor_exit: bool | None = None
    ip_reputation: IpReputation | None = None


@dataclass(frozen=True)
class GeoContext:
    country: str | None = None
    region: str | None = None
    city: str | None = None
    lat: float | None = None
    lon: float | None = None
    timezone_offset_min: int | None = None
    clock_offset_ms: float | None = None

    def __post_init__(self) -> None:
        if self.lat is not None and not -90.0 <= self.lat <= 90.0:
            raise ValueError("lat outside [-90, 90]")
        if self.lon is not None and not -180.0 <= self.lon <= 180.0:
            raise ValueError("lon outside [-180, 180]")

    def region_key(self) -> str | None:
        if self.country is None:
            return None
        return "/".join(p for p in (self.country, self.region, self.city) if p)


@dataclass(frozen=True)
class AttemptContext:
    device: DeviceContext = DeviceContext()
    network: NetworkContext = NetworkContext()
    geo: GeoContext = GeoContext()
    client_time: float | None = None  # unix seconds as reported by the client
