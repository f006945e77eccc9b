"""Mission scenario files: what to fly, where, for how long, with what seed."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .worlds import BUILTIN_WORLDS

SCENARIO_SCHEMA_VERSION = 1

BUILTIN_REFERENCES = ("lemniscate", "spiral")


class MissionType(enum.Enum):
    TRACK_REFERENCE = "track_reference"
    EXPLORE = "explore"
    GOAL_SEQUENCE = "goal_sequence"
    TELEOP_BRIDGE = "teleop_bridge"


@dataclass(frozen=True)
class Scenario:
    name: str
    mission: MissionType
    world: str                      # built-in world name or a file path
    duration_cap_s: float
    seed: int = 0
    reference: str | None = None    # built-in curve name or trajectory file
    peak_speed_mps: float = 6.0
    goals: tuple = ()               # (x, y, z) tuples for goal_sequence
    noise: str = "default"          # "default" or "none"
    out_dir: str | None = None
    base_dir: Path = field(default=Path("."), compare=False)

    def world_path(self) -> Path | None:
        """Path for file-referenced worlds, None for built-ins."""
        if self.world in BUILTIN_WORLDS:
            return None
        return (self.base_dir / self.world).resolve()

    def reference_path(self) -> Path | None:
        if self.reference is None or self.reference in BUILTIN_REFERENCES:
            return None
        return (self.base_dir / self.reference).resolve()

    def validate(self) -> None:
        if self.duration_cap_s <= 0.0:
            raise ValueError("duration_cap_s must be > 0")
        if self.noise not in ("default", "none"):
            raise ValueError(f"unknown noise profile {self.noise!r}")
        wp = self.world_path()
        if wp is not None and not wp.exists():
            raise FileNotFoundError(f"world file {wp} does not exist")
        if self.mission is MissionType.TRACK_REFERENCE:
            if self.reference is None:
                raise ValueError("track_reference missions need a reference")
            rp = self.reference_path()
            if rp is not None and not rp.exists():
                raise FileNotFoundError(f"reference trajectory file {rp} does not exist")
        if self.mission is MissionType.GOAL_SEQUENCE and not self.goals:
            raise ValueError("goal_sequence missions need at least one goal")


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    doc = yaml.safe_load(path.read_text())
    version = doc.get("schema_version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise ValueError(f"unsupported scenario schema_version: {version!r}")
    try:
        mission = MissionType(doc["mission"])
    except KeyError:
        raise ValueError("scenario is missing the mission type")
    scenario = Scenario(
        name=str(doc.get("name", path.stem)),
        mission=mission,
        world=str(doc["world"]),
        duration_cap_s=float(doc["duration_cap_s"]),
        seed=int(doc.get("seed", 0)),
        reference=doc.get("reference"),
        peak_speed_mps=float(doc.get("peak_speed_mps", 6.0)),
        goals=tuple(tuple(float(v) for v in g) for g in doc.get("goals", [])),
        noise=str(doc.get("noise", "default")),
        out_dir=doc.get("out_dir"),
        base_dir=path.parent,
    )
    scenario.validate()
    return scenario


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    doc = {
        "schema_version": SCENARIO_SCHEMA_VERSION,
        "name": scenario.name,
        "mission": scenario.mission.value,
        "world": scenario.world,
        "duration_cap_s": scenario.duration_cap_s,
        "seed": scenario.seed,
        "noise": scenario.noise,
    }
    if scenario.reference is not None:
        doc["reference"] = scenario.reference
        doc["peak_speed_mps"] = scenario.peak_speed_mps
    if scenario.goals:
        doc["goals"] = [list(g) for g in scenario.goals]
    if scenario.out_dir is not None:
        doc["out_dir"] = scenario.out_dir
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def stock_scenarios() -> dict[str, Scenario]:
    """The standing evaluation set."""
    return {
        "lemniscate": Scenario(
            name="lemniscate", mission=MissionType.TRACK_REFERENCE, world="arena",
            duration_cap_s=30.0, seed=7, reference="lemniscate",
        ),
        "spiral": Scenario(
            name="spiral", mission=MissionType.TRACK_REFERENCE, world="arena",
            duration_cap_s=30.0, seed=7, reference="spiral",
        ),
        "explore": Scenario(
            name="explore", mission=MissionType.EXPLORE, world="reference_room",
            duration_cap_s=300.0, seed=7,
        ),
        "coverage": Scenario(
            name="coverage", mission=MissionType.GOAL_SEQUENCE, world="reference_room",
            duration_cap_s=300.0, seed=7,
            goals=(
                (4.0, 2.5, 1.6), (4.0, 9.5, 1.6), (2.0, 6.0, 2.8),
                (5.4, 5.4, 1.6),
                (10.5, 9.0, 1.6), (10.5, 5.5, 2.6), (10.5, 1.5, 1.6),
                (13.95, 3.5, 1.6),
                (17.0, 1.5, 1.6), (18.5, 4.5, 2.6), (15.2, 4.8, 1.2),
                (17.78, 6.0, 1.6),
                (16.0, 8.0, 1.6), (19.0, 10.5, 2.2), (15.0, 10.8, 1.4),
            ),
        ),
        "teleop": Scenario(
            name="teleop", mission=MissionType.TELEOP_BRIDGE, world="reference_room",
            duration_cap_s=120.0, seed=7,
        ),
    }


def write_stock_scenarios(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, scenario in stock_scenarios().items():
        path = directory / f"{name}.yaml"
        save_scenario(scenario, path)
        out.append(path)
    return out
