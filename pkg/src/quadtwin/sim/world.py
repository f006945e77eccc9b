"""Static box-world environment: bounds, obstacles, ground truth, world files.

A world is an axis-aligned bounding box containing axis-aligned box obstacles.
Ground truth occupancy at a given resolution is defined exactly: a voxel is
occupied iff its center lies inside any obstacle or outside the world bounds.
The evaluation grid is padded by one voxel on every side so the boundary
walls themselves are representable as occupied voxels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

WORLD_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, inclusive bounds in meters."""

    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.min, self.max)):
            raise ValueError(f"degenerate box: {self.min} .. {self.max}")

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.min, dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.max, dtype=float)

    def contains(self, p: np.ndarray) -> bool:
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        return np.all(pts >= self.lo, axis=-1) & np.all(pts <= self.hi, axis=-1)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


@dataclass
class WorldModel:
    bounds: Box
    obstacles: list[Box] = field(default_factory=list)
    spawn_position: tuple[float, float, float] = (1.0, 1.0, 1.5)
    spawn_yaw_rad: float = 0.0
    name: str = "unnamed"

    def __post_init__(self):
        for ob in self.obstacles:
            if not (np.all(ob.lo >= self.bounds.lo) and np.all(ob.hi <= self.bounds.hi)):
                raise ValueError(f"obstacle {ob} not contained in bounds")

    def occupied_at(self, pts: np.ndarray) -> np.ndarray:
        """Exact truth predicate: inside any obstacle or outside bounds."""
        pts = np.atleast_2d(pts)
        occ = ~self.bounds.contains_many(pts)
        for ob in self.obstacles:
            occ |= ob.contains_many(pts)
        return occ

    def ground_truth_grid(self, voxel_size: float, pad_voxels: int = 1):
        """Boolean occupancy over the padded evaluation lattice.

        Returns (origin, dims, occupied) where occupied is a (nx, ny, nz)
        bool array and voxel (i, j, k) has center
        origin + (i + 0.5, j + 0.5, k + 0.5) * voxel_size.
        """
        origin = self.bounds.lo - pad_voxels * voxel_size
        span = self.bounds.hi - origin + pad_voxels * voxel_size
        dims = np.ceil(span / voxel_size - 1e-9).astype(int)
        ii, jj, kk = np.meshgrid(
            np.arange(dims[0]), np.arange(dims[1]), np.arange(dims[2]), indexing="ij"
        )
        centers = origin + (np.stack([ii, jj, kk], axis=-1) + 0.5) * voxel_size
        occ = self.occupied_at(centers.reshape(-1, 3)).reshape(tuple(dims))
        return origin, dims, occ

    def contains_sphere(self, center: np.ndarray, radius: float) -> bool:
        """True if the sphere stays fully inside bounds and clear of obstacles."""
        if np.any(center - radius < self.bounds.lo) or np.any(center + radius > self.bounds.hi):
            return False
        for ob in self.obstacles:
            # closest point on box to center
            q = np.clip(center, ob.lo, ob.hi)
            if np.dot(center - q, center - q) <= radius * radius:
                return False
        return True


def _box_to_list(b: Box) -> list:
    return [list(b.min), list(b.max)]


def save_world(world: WorldModel, path: str | Path, sensor_config: dict | None = None):
    doc = {
        "schema_version": WORLD_SCHEMA_VERSION,
        "name": world.name,
        "bounds": _box_to_list(world.bounds),
        "obstacles": [_box_to_list(b) for b in world.obstacles],
        "spawn": {
            "position": list(world.spawn_position),
            "yaw_rad": world.spawn_yaw_rad,
        },
    }
    if sensor_config:
        doc["sensors"] = sensor_config
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def load_world(path: str | Path) -> tuple[WorldModel, dict]:
    """Load a world file. Returns (world, sensor/noise overrides dict)."""
    doc = yaml.safe_load(Path(path).read_text())
    version = doc.get("schema_version")
    if version != WORLD_SCHEMA_VERSION:
        raise ValueError(f"unsupported world schema_version: {version!r}")
    bounds = Box(tuple(doc["bounds"][0]), tuple(doc["bounds"][1]))
    obstacles = [Box(tuple(o[0]), tuple(o[1])) for o in doc.get("obstacles", [])]
    spawn = doc.get("spawn", {})
    world = WorldModel(
        bounds=bounds,
        obstacles=obstacles,
        spawn_position=tuple(spawn.get("position", (1.0, 1.0, 1.5))),
        spawn_yaw_rad=float(spawn.get("yaw_rad", 0.0)),
        name=doc.get("name", Path(path).stem),
    )
    return world, doc.get("sensors", {})


def ray_box_intersect(
    origin: np.ndarray, direction: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> tuple[float, float]:
    """Slab-method ray/AABB intersection.

    Returns (t_enter, t_exit); no hit when t_enter > t_exit or t_exit < 0.
    Direction need not be normalized; t is in units of |direction|.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / direction
        t0 = (lo - origin) * inv
        t1 = (hi - origin) * inv
    # parallel rays: inside slab -> (-inf, inf), outside -> no overlap
    lo_t = np.where(np.isnan(t0), -np.inf, np.minimum(t0, t1))
    hi_t = np.where(np.isnan(t1), np.inf, np.maximum(t0, t1))
    par = direction == 0.0
    if np.any(par):
        inside = (origin >= lo) & (origin <= hi)
        lo_t = np.where(par, np.where(inside, -np.inf, np.inf), lo_t)
        hi_t = np.where(par, np.where(inside, np.inf, -np.inf), hi_t)
    return float(np.max(lo_t)), float(np.min(hi_t))
