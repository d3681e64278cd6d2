"""Sensor and perception data types shared with the tactical layer."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SensorSpec:
    """Vision cone plus an always-on deterministic proximity ring."""

    fov: float
    range: float
    p_detect: float
    proximity_radius: float

    def __post_init__(self) -> None:
        if not 0.0 < self.fov <= 2.0 * math.pi + 1e-9:
            raise ValueError("sensor fov must lie in (0, 2*pi]")
        if self.range <= 0.0:
            raise ValueError("sensor range must be positive")
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError("p_detect must lie in [0, 1]")


@dataclass(frozen=True)
class Detection:
    """One raw sensor hit, in the sensing robot's frame."""

    class_label: str
    confidence: float
    relative_position: tuple[float, float]  # (range m, bearing rad)
    tick: int

    def to_payload(self) -> dict:
        return {
            "class_label": self.class_label,
            "confidence": self.confidence,
            "range": self.relative_position[0],
            "bearing": self.relative_position[1],
            "tick": self.tick,
        }


@dataclass(frozen=True)
class CollisionEvent:
    robot_id: str
    position: tuple[float, float]
    tick: int

    def to_payload(self) -> dict:
        return {
            "robot_id": self.robot_id,
            "x": self.position[0],
            "y": self.position[1],
            "tick": self.tick,
        }
