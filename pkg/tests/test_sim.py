"""World kinematics, collision clipping, sensing and determinism."""
from __future__ import annotations

import math
import random

import pytest

from strata.gateway.config import load_scenario_config, ScenarioValidationError
from strata.datafiles import data_path
from strata.sim.grid import Grid, MapParseError
from strata.sim.scenario import load_scenario
from strata.sim.types import SensorSpec
from strata.sim.world import (
    DT,
    IDLE_DRAIN,
    RobotBody,
    UnknownRobot,
    WorldObject,
    WorldState,
    clip_motion,
    inject_obstacle,
    sense,
    serialize_world,
    step,
)
from strata.tactical.types import ActuatorRequest

from tests.helpers import OPEN_5X5


def make_world(seed: int = 1, objects: dict | None = None, sensor: SensorSpec | None = None) -> WorldState:
    grid = Grid.from_text(OPEN_5X5)
    body = RobotBody.make("r1", "UGV", 0.875, 0.875, heading=0.0)
    if sensor is not None:
        body.sensor = sensor
    return WorldState(
        grid=grid,
        rooms={"room": (0.0, 0.0, 1.75, 1.75)},
        robots={"r1": body},
        objects=objects or {},
        humans={},
        rng=random.Random(seed),
        static_grid=grid,
    )


def drive(v: float, w: float, rid: str = "r1") -> ActuatorRequest:
    return ActuatorRequest(rid, "drive", (v, w))


class TestKinematics:
    def test_zero_velocity_only_drains_idle_battery(self):
        world = make_world()
        b0 = world.robots["r1"].battery
        step(world, [drive(0.0, 0.0)])
        body = world.robots["r1"]
        assert (body.x, body.y, body.heading) == (0.875, 0.875, 0.0)
        assert body.battery == pytest.approx(b0 - IDLE_DRAIN * DT)

    def test_unicycle_straight_step(self):
        # closed-form oracle: x' = x + v*cos(theta)*dt
        world = make_world()
        step(world, [drive(1.0, 0.0)])
        body = world.robots["r1"]
        assert body.x == pytest.approx(0.875 + 1.0 * math.cos(0.0) * DT, abs=1e-12)
        assert body.y == pytest.approx(0.875, abs=1e-12)

    def test_unicycle_turn_step(self):
        world = make_world()
        world.robots["r1"].heading = math.pi / 4
        step(world, [drive(0.8, 0.5)])
        body = world.robots["r1"]
        assert body.x == pytest.approx(0.875 + 0.8 * math.cos(math.pi / 4) * DT, abs=1e-12)
        assert body.y == pytest.approx(0.875 + 0.8 * math.sin(math.pi / 4) * DT, abs=1e-12)
        assert body.heading == pytest.approx(math.pi / 4 + 0.5 * DT, abs=1e-12)

    def test_speed_clamped_to_limit(self):
        world = make_world()
        step(world, [drive(99.0, 0.0)])
        assert world.robots["r1"].x == pytest.approx(0.875 + 1.0 * DT)

    def test_unknown_robot_rejected(self):
        world = make_world()
        with pytest.raises(UnknownRobot):
            step(world, [drive(0.1, 0.0, rid="ghost")])
        with pytest.raises(ValueError, match="duplicate"):
            step(world, [drive(0.1, 0.0), drive(0.2, 0.0)])


class TestCollision:
    def test_wall_contact_clips_at_boundary(self):
        # wall cells start at x=1.5 in the 7x7 map (outer ring at x in [1.5, 1.75))
        world = make_world()
        world.robots["r1"].x = 1.43
        _, _, events = step(world, [drive(1.0, 0.0)])
        body = world.robots["r1"]
        assert len(events) == 1
        assert body.x == pytest.approx(1.5, abs=1e-5)
        assert body.x < 1.5
        assert world.grid.is_free_point(body.x, body.y)

    def test_no_tunneling_at_max_speed(self):
        world = make_world()
        body = world.robots["r1"]
        body.x, body.y = 0.875, 0.875
        for _ in range(400):
            step(world, [drive(body.v_max, 0.35)])
            assert world.grid.is_free_point(body.x, body.y)

    def test_clip_motion_free_path(self):
        grid = Grid.from_text(OPEN_5X5)
        x, y, hit = clip_motion(grid, 0.5, 0.5, 0.6, 0.62)
        assert (x, y, hit) == (0.6, 0.62, False)


class TestGripperAndBattery:
    def test_grasp_within_radius(self):
        objects = {"keys-1": WorldObject("keys-1", "KEY-SET", "keys", 1.1, 0.875)}
        world = make_world(objects=objects)
        step(world, [ActuatorRequest("r1", "gripper", (1.0,))])
        assert world.robots["r1"].holding == "keys-1"
        assert world.objects["keys-1"].held_by == "r1"
        # held object rides along
        step(world, [drive(1.0, 0.0)])
        assert world.objects["keys-1"].x == pytest.approx(world.robots["r1"].x)

    def test_release_places_object(self):
        objects = {"keys-1": WorldObject("keys-1", "KEY-SET", "keys", 1.0, 0.875)}
        world = make_world(objects=objects)
        step(world, [ActuatorRequest("r1", "gripper", (1.0,))])
        step(world, [ActuatorRequest("r1", "gripper", (0.0,))])
        assert world.robots["r1"].holding is None
        assert world.objects["keys-1"].held_by is None

    def test_grasp_out_of_radius_fails(self):
        objects = {"keys-1": WorldObject("keys-1", "KEY-SET", "keys", 1.4, 0.3)}
        world = make_world(objects=objects)
        step(world, [ActuatorRequest("r1", "gripper", (1.0,))])
        assert world.robots["r1"].holding is None

    def test_battery_never_negative_and_monotone_without_dock(self):
        world = make_world()
        world.robots["r1"].battery = 0.0005
        last = world.robots["r1"].battery
        for _ in range(50):
            step(world, [drive(1.0, 0.0)])
            battery = world.robots["r1"].battery
            assert 0.0 <= battery <= last
            last = battery

    def test_dock_charges(self):
        world = make_world()
        world.robots["r1"].dock = (0.875, 0.875)
        world.robots["r1"].battery = 0.5
        step(world, [])
        assert world.robots["r1"].battery > 0.5


class TestSensing:
    def test_empty_when_nothing_in_range(self):
        world = make_world()
        assert sense(world, world.robots["r1"]) == []

    def test_blocked_by_wall_regardless_of_rng(self):
        text = "\n".join([
            "#########",
            "#...#...#",
            "#...#...#",
            "#...#...#",
            "#########",
        ])
        grid = Grid.from_text(text)
        body = RobotBody.make("r1", "UGV", 0.6, 0.6, heading=0.0)
        world = WorldState(
            grid=grid, rooms={}, robots={"r1": body},
            objects={"o": WorldObject("o", "KEY-SET", "keys", 1.8, 0.6)},
            humans={}, rng=random.Random(0), static_grid=grid,
        )
        for _ in range(200):
            hits = [d for d in sense(world, body) if d.class_label == "keys"]
            assert hits == []

    def test_detection_frequency_tracks_p_detect(self):
        sensor = SensorSpec(fov=2.0, range=3.0, p_detect=0.7, proximity_radius=0.2)
        objects = {"o": WorldObject("o", "KEY-SET", "keys", 1.4, 0.875)}
        world = make_world(seed=1234, objects=objects, sensor=sensor)
        body = world.robots["r1"]
        hits = sum(
            1
            for _ in range(10_000)
            if any(d.class_label == "keys" for d in sense(world, body))
        )
        assert abs(hits / 10_000 - 0.7) <= 0.02

    def test_proximity_detection_is_deterministic(self):
        world = make_world()
        world.robots["r1"].x = 1.45  # 0.05 m from the east wall face
        for _ in range(20):
            obstacles = [d for d in sense(world, world.robots["r1"]) if d.class_label == "obstacle"]
            assert len(obstacles) == 1
            assert obstacles[0].confidence == 1.0
            assert obstacles[0].relative_position[0] == pytest.approx(0.05, abs=1e-9)

    def test_confidence_in_band(self):
        sensor = SensorSpec(fov=2.0, range=3.0, p_detect=1.0, proximity_radius=0.2)
        objects = {"o": WorldObject("o", "KEY-SET", "keys", 1.4, 0.875)}
        world = make_world(objects=objects, sensor=sensor)
        for _ in range(100):
            for det in sense(world, world.robots["r1"]):
                if det.class_label == "keys":
                    assert 0.6 <= det.confidence <= 1.0


class TestDeterminismAndScenario:
    def test_identical_runs_serialize_identically(self):
        w1, w2 = make_world(seed=9), make_world(seed=9)
        for _ in range(60):
            step(w1, [drive(0.6, 0.3)])
            step(w2, [drive(0.6, 0.3)])
        assert serialize_world(w1) == serialize_world(w2)

    def test_different_seed_diverges(self):
        objects = lambda: {"o": WorldObject("o", "KEY-SET", "keys", 1.3, 0.875)}
        w1 = make_world(seed=1, objects=objects())
        w2 = make_world(seed=2, objects=objects())
        for _ in range(5):
            step(w1, [])
            step(w2, [])
        assert serialize_world(w1) != serialize_world(w2)

    def test_inject_obstacle_visible_to_proximity_not_planner(self):
        world = make_world()
        inject_obstacle(world, 1.125, 0.875)
        obstacles = [d for d in sense(world, world.robots["r1"]) if d.class_label == "obstacle"]
        assert obstacles and obstacles[0].relative_position[0] < 0.2
        assert world.static_grid.is_free_point(1.125, 0.875)  # planner's map unchanged

    def test_shipped_scenario_loads(self):
        cfg = load_scenario_config(data_path("lost_keys.scenario"))
        world = load_scenario(cfg)
        assert set(world.robots) == {"rover", "skye"}
        assert world.robots["rover"].kind == "UGV"
        assert world.robots["skye"].kind == "Drone"
        assert "keys-1" in world.objects
        assert "danny" in world.humans
        assert serialize_world(world) == serialize_world(load_scenario(cfg))

    def test_placement_on_wall_rejected(self, tmp_path):
        text = data_path("lost_keys.scenario").read_text()
        text = text.replace("pos=6.15,2.2", "pos=0.1,0.1")  # outer wall cell
        bad = tmp_path / "bad.scenario"
        bad.write_text(text)
        cfg = load_scenario_config(bad)
        with pytest.raises(ScenarioValidationError, match="non-free"):
            load_scenario(cfg)

    def test_map_parse_error_carries_line(self):
        with pytest.raises(MapParseError, match="line 2"):
            Grid.from_text("###\n#?#\n###")
