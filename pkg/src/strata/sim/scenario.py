"""Scenario -> WorldState construction (deterministic per config+seed)."""
from __future__ import annotations

import random

from strata.gateway.config import ScenarioConfig, ScenarioValidationError
from strata.sim.grid import Grid, MapParseError
from strata.sim.types import SensorSpec
from strata.sim.world import (
    DRONE_SENSOR,
    UGV_SENSOR,
    HumanBody,
    RobotBody,
    WorldObject,
    WorldState,
    validate_world,
)


def load_scenario(config: ScenarioConfig) -> WorldState:
    """Build the initial world. Same config + seed always yields a
    byte-identical serialized state."""
    config.validate()
    try:
        grid = Grid.from_text(config.map_path.read_text(encoding="utf-8"))
    except MapParseError as exc:
        raise ScenarioValidationError(f"map: {exc}") from exc

    robots: dict[str, RobotBody] = {}
    for spec in config.robots:
        base_sensor = UGV_SENSOR if spec.kind == "UGV" else DRONE_SENSOR
        over = spec.sensor_overrides
        sensor = SensorSpec(
            fov=over.get("fov", base_sensor.fov),
            range=over.get("range", base_sensor.range),
            p_detect=over.get("p_detect", base_sensor.p_detect),
            proximity_radius=over.get("proximity_radius", base_sensor.proximity_radius),
        )
        robots[spec.robot_id] = RobotBody.make(
            spec.robot_id,
            spec.kind,
            spec.pos[0],
            spec.pos[1],
            heading=spec.heading,
            altitude=spec.altitude if spec.kind == "Drone" else 0.0,
            battery=spec.battery,
            sensor=sensor,
            dock=spec.dock,
        )

    objects = {
        o.instance_id: WorldObject(
            instance_id=o.instance_id,
            concept=o.concept,
            class_label=o.label,
            x=o.pos[0],
            y=o.pos[1],
        )
        for o in config.objects
    }
    humans = {
        h.agent_id: HumanBody(agent_id=h.agent_id, x=h.pos[0], y=h.pos[1])
        for h in config.humans
    }

    world = WorldState(
        grid=grid,
        rooms=dict(config.rooms),
        robots=robots,
        objects=objects,
        humans=humans,
        rng=random.Random(config.seed),
        static_grid=grid,
    )
    try:
        validate_world(world)
    except ValueError as exc:
        raise ScenarioValidationError(str(exc)) from exc
    _check_room_tiling(world)
    return world


def _check_room_tiling(world: WorldState) -> None:
    if not world.rooms:
        return
    for cy in range(world.grid.height):
        for cx in range(world.grid.width):
            if not world.grid.is_free_cell(cx, cy):
                continue
            x, y = world.grid.cell_center(cx, cy)
            hits = [
                name
                for name, (x0, y0, x1, y1) in world.rooms.items()
                if x0 <= x < x1 and y0 <= y < y1
            ]
            if len(hits) != 1:
                raise ScenarioValidationError(
                    f"rooms must tile free space: cell ({cx}, {cy}) is in {hits or 'no room'}"
                )
