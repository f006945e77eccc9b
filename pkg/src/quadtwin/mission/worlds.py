"""Built-in worlds the stock scenarios fly in.

reference_room is a 20 x 12 x 4 m three-room interior connected by 0.8 m
doorways, with free-standing clutter. arena is an open 16 x 12 x 5 m hall
sized so the stock reference trajectories fit with wall margin.

Exposed surfaces sit deliberately on the 0.15 m map lattice anchored at
the bounds origin, because a scan votes a hit into the voxel containing
the hit point and carves free votes along the ray before it:

- Vertical faces go at lattice + 0.05 m when the solid extends toward
  +axis and lattice + 0.10 m when it extends toward -axis. The vote
  voxel's center is then 0.025 m inside the solid and hits scattered by
  range noise (default sigma 0.01 m) stay in it. Rays cannot travel
  near-vertically (elevation is bounded), so the thin free slice of the
  face voxel is never skimmed tangentially.
- Horizontal faces (floor, ceiling, tops of clutter) go exactly on
  lattice planes so the vote voxel is fully solid. A face mid-voxel
  would leave a free slice that shallow rays skim for meters, carving
  the face voxel free. On a lattice plane, range noise splits hits
  between the solid voxel (hit votes only, stays occupied) and the
  voxel beyond the face (pass-dominated, stays free); both end correct.

Bounds planes that miss these rules are lined with thin shell slabs
whose exposed faces satisfy them; planes already compliant stay bare.
One jamb of each doorway falls on a lattice plane so the gap is exactly
0.80 m; noise splits votes on those few columns, a negligible exception.
"""

from __future__ import annotations

from pathlib import Path

from ..sim import Box, WorldModel, save_world
from ..sim.world import WORLD_SCHEMA_VERSION


def reference_room() -> WorldModel:
    boxes = [
        # shell linings over the bounds planes that miss the lattice rules
        Box((0.0, 0.0, 0.0), (20.0, 12.0, 0.15)),     # floor, top face on-lattice
        Box((0.0, 0.0, 3.90), (20.0, 12.0, 4.0)),     # ceiling, face on-lattice 3.90
        Box((0.0, 0.0, 0.0), (0.10, 12.0, 4.0)),      # west, face 0.10
        Box((0.0, 0.0, 0.0), (20.0, 0.10, 4.0)),      # south, face 0.10
        Box((0.0, 11.90, 0.0), (20.0, 12.0, 4.0)),    # north, face 11.90 = 79*0.15+0.05
        # east plane x = 20 = 133*0.15+0.05 already satisfies the rule, no lining
        # x ~ 7 dividing wall, doorway y 5.05..5.85
        Box((6.95, 0.0, 0.0), (7.15, 5.05, 4.0)),
        Box((6.95, 5.85, 0.0), (7.15, 12.0, 4.0)),
        # x ~ 14 dividing wall, doorway y 3.10..3.90
        Box((13.85, 0.0, 0.0), (14.05, 3.10, 4.0)),
        Box((13.85, 3.90, 0.0), (14.05, 12.0, 4.0)),
        # y ~ 6 partition in the right room, doorway x 17.35..18.15
        Box((14.05, 5.90, 0.0), (17.35, 6.10, 4.0)),
        Box((18.15, 5.90, 0.0), (20.0, 6.10, 4.0)),
        # free-standing clutter, tops on-lattice
        Box((3.05, 8.00, 0.0), (3.70, 8.65, 4.0)),    # pillar, full height
        Box((10.10, 2.00, 0.0), (11.35, 3.25, 1.35)),  # crate
        Box((16.55, 9.05, 0.0), (17.95, 10.00, 1.05)),  # table
    ]
    return WorldModel(
        bounds=Box((0.0, 0.0, 0.0), (20.0, 12.0, 4.0)),
        obstacles=boxes,
        spawn_position=(2.0, 2.0, 1.2),
        name="reference_room",
    )


def arena() -> WorldModel:
    boxes = [
        Box((0.0, 0.0, 0.0), (16.0, 12.0, 0.15)),     # floor, top face on-lattice
        Box((0.0, 0.0, 4.95), (16.0, 12.0, 5.0)),     # ceiling, face on-lattice 4.95
        Box((0.0, 0.0, 0.0), (0.10, 12.0, 5.0)),      # west, face 0.10
        Box((0.0, 0.0, 0.0), (16.0, 0.10, 5.0)),      # south, face 0.10
        Box((0.0, 11.90, 0.0), (16.0, 12.0, 5.0)),    # north, face 79*0.15+0.05
        Box((15.80, 0.0, 0.0), (16.0, 12.0, 5.0)),    # east, face 105*0.15+0.05
    ]
    return WorldModel(
        bounds=Box((0.0, 0.0, 0.0), (16.0, 12.0, 5.0)),
        obstacles=boxes,
        spawn_position=(12.0, 6.0, 1.6),
        name="arena",
    )


BUILTIN_WORLDS = {
    "reference_room": reference_room,
    "arena": arena,
}


def builtin_world(name: str) -> WorldModel:
    try:
        return BUILTIN_WORLDS[name]()
    except KeyError:
        raise ValueError(f"unknown built-in world {name!r}; have {sorted(BUILTIN_WORLDS)}")


def world_doc(world: WorldModel) -> dict:
    """The world as a plain dict, the same shape the world file uses.

    Embedded in the run log so a report can be recomputed from the log
    alone, without the original world file.
    """
    return {
        "schema_version": WORLD_SCHEMA_VERSION,
        "name": world.name,
        "bounds": [list(map(float, world.bounds.lo)), list(map(float, world.bounds.hi))],
        "obstacles": [
            [list(map(float, b.lo)), list(map(float, b.hi))] for b in world.obstacles
        ],
        "spawn": {
            "position": list(map(float, world.spawn_position)),
            "yaw_rad": float(world.spawn_yaw_rad),
        },
    }


def world_from_doc(doc: dict) -> WorldModel:
    version = doc.get("schema_version")
    if version != WORLD_SCHEMA_VERSION:
        raise ValueError(f"unsupported world schema_version: {version!r}")
    spawn = doc.get("spawn", {})
    return WorldModel(
        bounds=Box(tuple(doc["bounds"][0]), tuple(doc["bounds"][1])),
        obstacles=[Box(tuple(o[0]), tuple(o[1])) for o in doc.get("obstacles", [])],
        spawn_position=tuple(spawn.get("position", (1.0, 1.0, 1.5))),
        spawn_yaw_rad=float(spawn.get("yaw_rad", 0.0)),
        name=doc.get("name", "world"),
    )


def write_builtin_worlds(directory: Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, build in BUILTIN_WORLDS.items():
        path = directory / f"{name}.yaml"
        save_world(build(), path)
        out.append(path)
    return out
