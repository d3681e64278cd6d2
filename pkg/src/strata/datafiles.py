"""Access to the packaged scenario/knowledge data files."""
from __future__ import annotations

from pathlib import Path


def data_dir() -> Path:
    return Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    return data_dir() / name
