"""Scenario configuration files.

Line-based grammar (``#`` comments, blank lines ignored)::

    name lost-keys
    map apartment.map
    plans team.plans
    kb ontology.kb lexicon.kb profiles.kb
    seed 42
    max_ticks 5000
    tick_rate_hz 10
    strategic_period 5
    room living-room 0 0 4 6
    robot rover kind=UGV pos=2.5,3.5 heading=0 dock=1.0,1.0
    robot skye kind=Drone pos=3.0,4.5 altitude=1.5 dock=3.25,5.25
    object keys-1 concept=KEY-SET label=keys pos=6.15,2.2
    human danny pos=1.5,2.5
    say 20 danny Find my keys

Relative paths resolve against the scenario file's directory first and
the packaged data directory second. ``say`` lines script human chat at
a given tick so headless runs are self-contained and reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from strata.datafiles import data_dir


class ScenarioValidationError(Exception):
    pass


@dataclass
class RobotSpec:
    robot_id: str
    kind: str
    pos: tuple[float, float]
    heading: float = 0.0
    altitude: float = 1.5
    dock: tuple[float, float] | None = None
    tree: str | None = None
    battery: float = 1.0
    battery_reserve: float = 0.15
    obstacle_radius: float = 0.18
    min_altitude: float = 0.5
    sensor_overrides: dict[str, float] = field(default_factory=dict)


@dataclass
class ObjectSpec:
    instance_id: str
    concept: str
    label: str
    pos: tuple[float, float]


@dataclass
class HumanSpec:
    agent_id: str
    pos: tuple[float, float]


@dataclass
class ScriptLine:
    tick: int
    sender: str
    text: str


@dataclass
class ScenarioConfig:
    name: str = "unnamed"
    map_path: Path | None = None
    plans_path: Path | None = None
    kb_paths: tuple[Path, Path, Path] | None = None
    seed: int | None = None
    max_ticks: int = 5000
    tick_rate_hz: float = 10.0
    strategic_period_ticks: int = 5
    rooms: dict[str, tuple[float, float, float, float]] = field(default_factory=dict)
    robots: list[RobotSpec] = field(default_factory=list)
    objects: list[ObjectSpec] = field(default_factory=list)
    humans: list[HumanSpec] = field(default_factory=list)
    script: list[ScriptLine] = field(default_factory=list)
    base_dir: Path = field(default_factory=Path.cwd)

    def validate(self) -> None:
        if not self.robots:
            raise ScenarioValidationError("scenario needs at least one robot")
        if self.seed is None:
            raise ScenarioValidationError("seed is required (no wall-clock entropy)")
        if self.strategic_period_ticks < 1:
            raise ScenarioValidationError("strategic_period must be >= 1")
        if self.max_ticks < 0:
            raise ScenarioValidationError("max_ticks must be >= 0")
        if self.map_path is None or not self.map_path.exists():
            raise ScenarioValidationError(f"map file not found: {self.map_path}")
        if self.plans_path is None or not self.plans_path.exists():
            raise ScenarioValidationError(f"plans file not found: {self.plans_path}")
        if self.kb_paths is None or not all(p.exists() for p in self.kb_paths):
            raise ScenarioValidationError(f"kb files not found: {self.kb_paths}")
        ids = [r.robot_id for r in self.robots] + [h.agent_id for h in self.humans]
        if len(set(ids)) != len(ids):
            raise ScenarioValidationError("duplicate agent ids in scenario")
        humans = {h.agent_id for h in self.humans}
        for line in self.script:
            if line.sender not in humans:
                raise ScenarioValidationError(
                    f"script sender {line.sender!r} is not a declared human"
                )
        for spec in self.robots:
            if spec.kind not in ("UGV", "Drone"):
                raise ScenarioValidationError(f"robot {spec.robot_id}: bad kind {spec.kind!r}")
            if spec.tree is not None and self.resolve(spec.tree) is None:
                raise ScenarioValidationError(f"tree file not found: {spec.tree}")

    def resolve(self, name: str) -> Path | None:
        for root in (self.base_dir, data_dir()):
            candidate = root / name
            if candidate.exists():
                return candidate
        p = Path(name)
        return p if p.exists() else None


def _pair(raw: str, what: str, line_no: int) -> tuple[float, float]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise ScenarioValidationError(f"line {line_no}: {what} must be 'x,y'")
    return float(parts[0]), float(parts[1])


def _attrs(tokens: list[str], line_no: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for token in tokens:
        if "=" not in token:
            raise ScenarioValidationError(f"line {line_no}: malformed attribute {token!r}")
        key, value = token.split("=", 1)
        out[key] = value
    return out


def parse_scenario(text: str, base_dir: Path) -> ScenarioConfig:
    cfg = ScenarioConfig(base_dir=base_dir)
    kb_names: tuple[str, str, str] = ("ontology.kb", "lexicon.kb", "profiles.kb")
    map_name = "apartment.map"
    plans_name = "team.plans"
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        key = tokens[0]
        try:
            if key == "name" and len(tokens) == 2:
                cfg.name = tokens[1]
            elif key == "map" and len(tokens) == 2:
                map_name = tokens[1]
            elif key == "plans" and len(tokens) == 2:
                plans_name = tokens[1]
            elif key == "kb" and len(tokens) == 4:
                kb_names = (tokens[1], tokens[2], tokens[3])
            elif key == "seed" and len(tokens) == 2:
                cfg.seed = int(tokens[1])
            elif key == "max_ticks" and len(tokens) == 2:
                cfg.max_ticks = int(tokens[1])
            elif key == "tick_rate_hz" and len(tokens) == 2:
                cfg.tick_rate_hz = float(tokens[1])
            elif key == "strategic_period" and len(tokens) == 2:
                cfg.strategic_period_ticks = int(tokens[1])
            elif key == "room" and len(tokens) == 6:
                cfg.rooms[tokens[1]] = (
                    float(tokens[2]), float(tokens[3]), float(tokens[4]), float(tokens[5])
                )
            elif key == "robot" and len(tokens) >= 3:
                attrs = _attrs(tokens[2:], line_no)
                if "kind" not in attrs or "pos" not in attrs:
                    raise ScenarioValidationError(f"line {line_no}: robot needs kind= and pos=")
                spec = RobotSpec(
                    robot_id=tokens[1],
                    kind=attrs.pop("kind"),
                    pos=_pair(attrs.pop("pos"), "pos", line_no),
                )
                if "heading" in attrs:
                    spec.heading = float(attrs.pop("heading"))
                if "altitude" in attrs:
                    spec.altitude = float(attrs.pop("altitude"))
                if "dock" in attrs:
                    spec.dock = _pair(attrs.pop("dock"), "dock", line_no)
                if "tree" in attrs:
                    spec.tree = attrs.pop("tree")
                for scalar in ("battery", "battery_reserve", "obstacle_radius", "min_altitude"):
                    if scalar in attrs:
                        setattr(spec, scalar, float(attrs.pop(scalar)))
                for sensor_key in ("p_detect", "range", "fov", "proximity_radius"):
                    if sensor_key in attrs:
                        spec.sensor_overrides[sensor_key] = float(attrs.pop(sensor_key))
                if attrs:
                    raise ScenarioValidationError(
                        f"line {line_no}: unknown robot attributes {sorted(attrs)}"
                    )
                cfg.robots.append(spec)
            elif key == "object" and len(tokens) >= 3:
                attrs = _attrs(tokens[2:], line_no)
                if "concept" not in attrs or "pos" not in attrs:
                    raise ScenarioValidationError(f"line {line_no}: object needs concept= and pos=")
                cfg.objects.append(
                    ObjectSpec(
                        instance_id=tokens[1],
                        concept=attrs["concept"],
                        label=attrs.get("label", attrs["concept"].lower()),
                        pos=_pair(attrs["pos"], "pos", line_no),
                    )
                )
            elif key == "human" and len(tokens) >= 3:
                attrs = _attrs(tokens[2:], line_no)
                if "pos" not in attrs:
                    raise ScenarioValidationError(f"line {line_no}: human needs pos=")
                cfg.humans.append(HumanSpec(agent_id=tokens[1], pos=_pair(attrs["pos"], "pos", line_no)))
            elif key == "say" and len(tokens) >= 4:
                cfg.script.append(
                    ScriptLine(tick=int(tokens[1]), sender=tokens[2], text=" ".join(tokens[3:]))
                )
            else:
                raise ScenarioValidationError(f"line {line_no}: unknown directive {key!r}")
        except ValueError as exc:
            raise ScenarioValidationError(f"line {line_no}: {exc}") from exc
    cfg.map_path = cfg.resolve(map_name)
    cfg.plans_path = cfg.resolve(plans_name)
    resolved = tuple(cfg.resolve(n) for n in kb_names)
    if all(p is not None for p in resolved):
        cfg.kb_paths = resolved  # type: ignore[assignment]
    cfg.script.sort(key=lambda s: s.tick)
    return cfg


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.exists():
        raise ScenarioValidationError(f"scenario file not found: {p}")
    cfg = parse_scenario(p.read_text(encoding="utf-8"), p.parent)
    cfg.validate()
    return cfg


def config_payload(cfg: ScenarioConfig) -> dict[str, Any]:
    """Metadata slice of the config for the trace header and snapshots."""
    return {
        "name": cfg.name,
        "seed": cfg.seed,
        "max_ticks": cfg.max_ticks,
        "tick_rate_hz": cfg.tick_rate_hz,
        "strategic_period_ticks": cfg.strategic_period_ticks,
        "robots": [{"robot_id": r.robot_id, "kind": r.kind} for r in cfg.robots],
        "humans": [h.agent_id for h in cfg.humans],
    }
