"""Per-robot namespaced key/value store driving tree evaluation.

Keys follow ``<namespace>/<name...>`` with namespaces {percept, command,
safety, internal}. Values are restricted to plain scalar types, float
tuples (poses/vectors) and identifier lists so a blackboard can always
be snapshotted byte-for-byte for determinism checks.
"""
from __future__ import annotations

import json
from typing import Any, Iterable

NAMESPACES = ("percept", "command", "safety", "internal")


class BlackboardTypeMismatch(Exception):
    """A key held a value of the wrong semantic type."""


class BtBlackboard:
    def __init__(self, robot_id: str) -> None:
        self.robot_id = robot_id
        self.tick_counter = 0
        self._entries: dict[str, Any] = {}

    # -- raw access ---------------------------------------------------------

    def set(self, key: str, value: Any) -> None:
        self._check_key(key)
        self._check_value(key, value)
        self._entries[key] = value

    def get(self, key: str, default: Any = None) -> Any:
        return self._entries.get(key, default)

    def has(self, key: str) -> bool:
        return key in self._entries

    def delete(self, key: str) -> None:
        self._entries.pop(key, None)

    def keys(self, prefix: str = "") -> list[str]:
        return sorted(k for k in self._entries if k.startswith(prefix))

    def clear_prefix(self, prefix: str) -> None:
        for key in [k for k in self._entries if k.startswith(prefix)]:
            del self._entries[key]

    # -- typed access (raises instead of silently mis-reading) --------------

    def get_float(self, key: str, default: float | None = None) -> float:
        return self._typed(key, (int, float), "number", default)

    def get_int(self, key: str, default: int | None = None) -> int:
        return self._typed(key, (int,), "integer", default)

    def get_str(self, key: str, default: str | None = None) -> str:
        return self._typed(key, (str,), "string", default)

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        return self._typed(key, (bool,), "bool", default)

    def get_vec(self, key: str, default: tuple | None = None) -> tuple:
        value = self._typed(key, (tuple,), "float tuple", default)
        return value

    def get_list(self, key: str, default: list | None = None) -> list:
        return self._typed(key, (list,), "identifier list", default)

    def _typed(self, key: str, types: tuple, label: str, default: Any) -> Any:
        if key not in self._entries:
            if default is not None:
                return default
            raise BlackboardTypeMismatch(f"{key}: missing (expected {label})")
        value = self._entries[key]
        if types == (int, float) and isinstance(value, bool):
            raise BlackboardTypeMismatch(f"{key}: expected {label}, got bool")
        if not isinstance(value, types):
            raise BlackboardTypeMismatch(
                f"{key}: expected {label}, got {type(value).__name__}"
            )
        return value

    # -- validation and snapshots -------------------------------------------

    @staticmethod
    def _check_key(key: str) -> None:
        ns, sep, rest = key.partition("/")
        if not sep or not rest or ns not in NAMESPACES:
            raise ValueError(
                f"blackboard key {key!r} must be <namespace>/<name> with "
                f"namespace in {NAMESPACES}"
            )

    @staticmethod
    def _check_value(key: str, value: Any) -> None:
        if isinstance(value, (bool, int, float, str)):
            return
        if isinstance(value, tuple) and all(isinstance(v, (int, float)) for v in value):
            return
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            return
        raise BlackboardTypeMismatch(
            f"{key}: unsupported value type {type(value).__name__}"
        )

    def snapshot(self) -> str:
        """Canonical byte-stable dump of all entries plus the tick counter."""
        plain = {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in self._entries.items()
        }
        marked = {
            k: ({"__vec__": v} if isinstance(self._entries[k], tuple) else v)
            for k, v in plain.items()
        }
        return json.dumps(
            {"tick_counter": self.tick_counter, "entries": marked},
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_snapshot(cls, robot_id: str, blob: str) -> "BtBlackboard":
        data = json.loads(blob)
        bb = cls(robot_id)
        bb.tick_counter = data["tick_counter"]
        for key, value in data["entries"].items():
            if isinstance(value, dict) and "__vec__" in value:
                bb.set(key, tuple(value["__vec__"]))
            else:
                bb.set(key, value)
        return bb

    def items(self) -> Iterable[tuple[str, Any]]:
        return sorted(self._entries.items())
