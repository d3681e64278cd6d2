"""Actuator-side output type of the tactical layer."""
from __future__ import annotations

from dataclasses import dataclass

ACTUATOR_CHANNELS = ("drive", "vertical", "gripper", "signal")


@dataclass(frozen=True)
class ActuatorRequest:
    """One per-channel setpoint for one robot for one tick.

    drive: (v m/s, omega rad/s) for a UGV, (vx, vy, omega) for a drone.
    vertical: (vz m/s). gripper: (closed fraction in [0, 1]).
    Setpoints are clamped to body limits before they leave the layer.
    """

    robot_id: str
    channel: str
    setpoint: tuple[float, ...]
    source_node_id: str = ""

    def __post_init__(self) -> None:
        if self.channel not in ACTUATOR_CHANNELS:
            raise ValueError(f"unknown actuator channel {self.channel!r}")

    def to_payload(self) -> dict:
        return {
            "robot_id": self.robot_id,
            "channel": self.channel,
            "setpoint": list(self.setpoint),
            "source_node_id": self.source_node_id,
        }
