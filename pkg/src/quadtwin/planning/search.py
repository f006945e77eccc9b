"""Path search on the occupancy grid: inflation, A*, line-of-sight smoothing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..mapping import CLASS_FREE, CLASS_OCCUPIED, CLASS_UNKNOWN, OccupancyGrid
from ..mapping._dda import traverse_segments
from ._astar import AXIS_COST, astar_grid


def inflation_ball(radius_m: float, voxel_size: float) -> np.ndarray:
    """Spherical structuring element: offsets within radius (voxel units)."""
    r = radius_m / voxel_size
    n = int(np.floor(r))
    axis = np.arange(-n, n + 1)
    dx, dy, dz = np.meshgrid(axis, axis, axis, indexing="ij")
    return (dx * dx + dy * dy + dz * dz) <= r * r


# a panoramic scanner with a limited elevation fan cannot see how far a
# wall extends above or below its current altitude, so flight next to a
# partially observed wall risks climbing into the unseen part; unknown
# voxels within this vertical distance of a known-occupied voxel count as
# wall continuation and block with full clearance
_VERTICAL_CONTINUATION_M = 0.75


def _inflated_blocking(grid: OccupancyGrid, clearance_m: float) -> np.ndarray:
    vox = grid.params.voxel_size
    occupied = grid.classes == CLASS_OCCUPIED
    k = int(np.ceil(_VERTICAL_CONTINUATION_M / vox))
    column = np.ones((1, 1, 2 * k + 1), dtype=bool)
    plausible = ndimage.binary_dilation(occupied, structure=column) & (
        grid.classes == CLASS_UNKNOWN
    )
    return ndimage.binary_dilation(
        occupied | plausible, structure=inflation_ball(clearance_m, vox)
    )


def traversable_mask(grid: OccupancyGrid, clearance_m: float) -> np.ndarray:
    """Free voxels of the obstacle-inflated grid; unknown blocks as itself."""
    return (grid.classes == CLASS_FREE) & ~_inflated_blocking(grid, clearance_m)


def optimistic_mask(grid: OccupancyGrid, clearance_m: float) -> np.ndarray:
    """Like traversable_mask but unknown counts as traversable.

    For routing toward goals that sit in not-yet-mapped space: only the
    inflated blocking set rules voxels out. Trajectory tracking still
    replans as unknown space resolves, so optimism here is self-correcting.
    """
    return ~_inflated_blocking(grid, clearance_m)


@dataclass
class PathPlan:
    waypoints: np.ndarray          # (n, 3) meters, consecutive voxels grid-adjacent
    smoothed: np.ndarray           # (m, 3) meters, line-of-sight pruned polyline
    clearance_m: float
    cost_m: float                  # raw grid path length, meters
    cost_units: int                # integer search cost (1000 per axis voxel)
    voxel_path: np.ndarray = field(repr=False, default=None)  # (n, 3) int indices


def _line_is_free(trav: np.ndarray, grid: OccupancyGrid, a: np.ndarray, b: np.ndarray) -> bool:
    vox = grid.params.voxel_size
    g0 = ((a - grid.origin) / vox)[None, :]
    g1 = ((b - grid.origin) / vox)[None, :]
    nx, ny, nz = (int(d) for d in grid.dims)
    buf = np.empty(nx + ny + nz + 3, dtype=np.int64)
    cnt = traverse_segments(
        g0, g1, np.zeros(1, dtype=bool), nx, ny, nz, buf
    )
    return bool(trav.reshape(-1)[buf[:cnt]].all())


def shortcut_smooth(
    waypoints: np.ndarray, trav: np.ndarray, grid: OccupancyGrid
) -> np.ndarray:
    """Greedy line-of-sight pruning: keep a waypoint only when the straight
    line to the next kept one would leave free inflated space."""
    if len(waypoints) <= 2:
        return waypoints.copy()
    kept = [0]
    i = 0
    while i < len(waypoints) - 1:
        j = len(waypoints) - 1
        while j > i + 1 and not _line_is_free(trav, grid, waypoints[i], waypoints[j]):
            j -= 1
        kept.append(j)
        i = j
    return waypoints[kept]


def find_path(
    grid: OccupancyGrid,
    start_m: np.ndarray,
    goal_m: np.ndarray,
    clearance_m: float = 0.35,
    trav: np.ndarray | None = None,
) -> PathPlan | None:
    """A* path in the inflated grid. None = goal unreachable (not an error).

    trav: precomputed traversable_mask(grid, clearance_m), to amortize the
    inflation across repeated queries on one snapshot.
    """
    if trav is None:
        trav = traversable_mask(grid, clearance_m)
    start_idx = grid.world_to_index(start_m)[0]
    goal_idx = grid.world_to_index(goal_m)[0]
    if not grid.in_grid(start_idx)[0]:
        raise ValueError(f"start {start_m} outside grid")
    if not trav[tuple(start_idx)]:
        raise ValueError(f"start voxel {tuple(start_idx)} not free in inflated grid")
    if not grid.in_grid(goal_idx)[0] or not trav[tuple(goal_idx)]:
        return None

    nx, ny, nz = (int(d) for d in grid.dims)
    flat_start = int(start_idx[0]) * ny * nz + int(start_idx[1]) * nz + int(start_idx[2])
    flat_goal = int(goal_idx[0]) * ny * nz + int(goal_idx[1]) * nz + int(goal_idx[2])
    trav_flat = np.ascontiguousarray(trav.reshape(-1).astype(np.uint8))

    cost, parents = astar_grid(trav_flat, nx, ny, nz, flat_start, flat_goal)
    if cost < 0:
        return None

    chain = [flat_goal]
    while chain[-1] != flat_start:
        chain.append(int(parents[chain[-1]]))
    chain.reverse()
    flat = np.asarray(chain, dtype=np.int64)
    vox = np.stack([flat // (ny * nz), (flat // nz) % ny, flat % nz], axis=1)
    waypoints = grid.index_to_center(vox)

    steps = np.diff(vox, axis=0)
    length_m = float(
        (np.linalg.norm(steps, axis=1) * grid.params.voxel_size).sum()
    )
    smoothed = shortcut_smooth(waypoints, trav, grid)
    return PathPlan(
        waypoints=waypoints,
        smoothed=smoothed,
        clearance_m=clearance_m,
        cost_m=length_m,
        cost_units=int(cost),
        voxel_path=vox,
    )
