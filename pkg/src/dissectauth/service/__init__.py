"""HTTP service: configuration, wire schemas, pipeline, FastAPI app factory."""

from .app import create_app
from .config import AppConfig, load_config
from .pipeline import AuthService, Clock, system_clock

__all__ = ["AppConfig", "AuthService", "Clock", "create_app", "load_config", "system_clock"]
