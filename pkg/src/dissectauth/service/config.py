"""Service configuration: JSON file plus environment overrides.

Every deployment knob lives here: storage root, master key, admin token, bind
address, risk cutoffs, dissection scheme defaults, session TTL, and the leet
substitution table.  Environment variables (DISSECTAUTH_*) override the file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..dissection import BlockScheme
from ..risk import RiskConfig
from ..rules import DEFAULT_CLOCK_SKEW_TOLERANCE_MIN

ENV_PREFIX = "DISSECTAUTH_"
DEFAULT_MASTER_KEY_HEX = "6b" * 32  # dev-only key; deployments must override


@dataclass
class AppConfig:
    storage_root: str = "./data"
    master_key_hex: str = DEFAULT_MASTER_KEY_HEX
    admin_token: str = "dev-admin-token"
    host: str = "127.0.0.1"
    port: int = 8200
    risk: RiskConfig = field(default_factory=RiskConfig)
    scheme_width: int = 3
    scheme_stride: int = 2
    scheme_min_blocks: int = 1
    session_ttl_s: float = 1800.0
    snapshot_every: int = 100
    clock_skew_tolerance_min: int = DEFAULT_CLOCK_SKEW_TOLERANCE_MIN
    leet_map: dict[str, str] = field(
        default_factory=lambda: {"t": "7", "n": "9", "o": "0", "y": "e"}
    )
    keyboard_layout_path: str | None = None

    def scheme(self) -> BlockScheme:
        return BlockScheme(
            width=self.scheme_width,
            stride=self.scheme_stride,
            min_blocks=self.scheme_min_blocks,
        )

    def to_dict(self) -> dict:
        return {
            "storage_root": self.storage_root,
            "master_key_hex": self.master_key_hex,
            "admin_token": self.admin_token,
            "host": self.host,
            "port": self.port,
            "risk": self.risk.to_dict(),
            "scheme_width": self.scheme_width,
            "scheme_stride": self.scheme_stride,
            "scheme_min_blocks": self.scheme_min_blocks,
            "session_ttl_s": self.session_ttl_s,
            "snapshot_every": self.snapshot_every,
            "clock_skew_tolerance_min": self.clock_skew_tolerance_min,
            "leet_map": dict(self.leet_map),
            "keyboard_layout_path": self.keyboard_layout_path,
        }


_ENV_FIELDS = {
    "STORAGE_ROOT": ("storage_root", str),
    "MASTER_KEY": ("master_key_hex", str),
    "ADMIN_TOKEN": ("admin_token", str),
    "HOST": ("host", str),
    "PORT": ("port", int),
    "SESSION_TTL_S": ("session_ttl_s", float),
    "SNAPSHOT_EVERY": ("snapshot_every", int),
    "SCHEME_WIDTH": ("scheme_width", int),
    "SCHEME_STRIDE": ("scheme_stride", int),
    "SCHEME_MIN_BLOCKS": ("scheme_min_blocks", int),
    "CLOCK_SKEW_TOLERANCE_MIN": ("clock_skew_tolerance_min", int),
    "KEYBOARD_LAYOUT_PATH": ("keyboard_layout_path", str),
}


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> AppConfig:
    env = os.environ if env is None else env
    doc: dict = {}
    path = path or env.get(ENV_PREFIX + "CONFIG")
    if path:
        doc = json.loads(Path(path).read_text("utf-8"))
    risk_doc = doc.pop("risk", None)
    config = AppConfig(**{k: v for k, v in doc.items() if k in AppConfig.__dataclass_fields__})
    if risk_doc:
        config.risk = RiskConfig.from_dict(risk_doc)
    for env_name, (attr, cast) in _ENV_FIELDS.items():
        raw = env.get(ENV_PREFIX + env_name)
        if raw is not None:
            setattr(config, attr, cast(raw))
    risk_env = env.get(ENV_PREFIX + "RISK")
    if risk_env is not None:
        config.risk = RiskConfig.from_dict(json.loads(risk_env))
    leet_env = env.get(ENV_PREFIX + "LEET_MAP")
    if leet_env is not None:
        config.leet_map = dict(json.loads(leet_env))
    return config
