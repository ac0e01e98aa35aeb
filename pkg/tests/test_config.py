"""Configuration loading: file, env overrides, example file validity."""

from __future__ import annotations

import json
from pathlib import Path

from dissectauth.service.config import AppConfig, load_config

EXAMPLE = Path(__file__).resolve().parent.parent / "config.example.json"


def test_defaults_without_file():
    config = load_config(env={})
    assert config.port == 8200
    assert config.scheme().width == 3


def test_example_config_loads():
    config = load_config(EXAMPLE, env={})
    assert config.admin_token == "change-me"
    assert config.risk.lock_strikes == 10
    assert config.risk.weights["context"] == 1.75
    assert config.leet_map["t"] == "7"


def test_env_overrides_scalars_and_risk(tmp_path):
    env = {
        "DISSECTAUTH_STORAGE_ROOT": str(tmp_path / "alt"),
        "DISSECTAUTH_PORT": "9999",
        "DISSECTAUTH_RISK": json.dumps({"lock_strikes": 3, "allow_below": 0.1}),
        "DISSECTAUTH_LEET_MAP": json.dumps({"s": "5"}),
    }
    config = load_config(EXAMPLE, env=env)
    assert config.port == 9999
    assert config.storage_root == str(tmp_path / "alt")
    assert config.risk.lock_strikes == 3
    assert config.risk.allow_below == 0.1
    assert config.leet_map == {"s": "5"}


def test_config_round_trips_through_dict(tmp_path):
    config = AppConfig(storage_root=str(tmp_path), admin_token="x")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config.to_dict()))
    again = load_config(path, env={})
    assert again.to_dict() == config.to_dict()
