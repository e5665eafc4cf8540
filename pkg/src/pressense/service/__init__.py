"""Streaming service: wire models, the FastAPI app, and offline record replay."""

from .app import create_app
from .replay import ReplayResult, ReplaySettings, evaluate_records, replay_records

__all__ = ["create_app", "ReplayResult", "ReplaySettings", "evaluate_records", "replay_records"]
