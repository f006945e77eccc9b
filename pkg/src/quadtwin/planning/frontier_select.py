"""Closest-frontier goal selection with deterministic tie-breaking.

Frontier voxels border unknown space by definition, and unknown space may
be solid right at the border, so the vehicle never flies to the frontier
itself. It flies to a viewpoint: a traversable voxel with body clearance
from everything unknown, as close to the cluster as such a voxel exists.
The sensor covers the remaining distance.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..mapping import CLASS_UNKNOWN, OccupancyGrid
from ..mapping.frontier import FrontierCluster
from .search import find_path, inflation_ball, traversable_mask

# how far from the cluster centroid a viewpoint may sit; beyond this the
# cluster counts as unobservable from traversable space
VIEWPOINT_REACH_M = 1.5

# body clearance kept between a viewpoint and any unknown voxel
VIEWPOINT_STANDOFF_M = 0.35


def _order_key(cluster: FrontierCluster, position: np.ndarray):
    d = float(np.linalg.norm(cluster.centroid - position))
    # ties: nearer first, then larger cluster, then lexicographic centroid
    return (d, -cluster.size, tuple(np.round(cluster.centroid, 12)))


def viewpoint_mask(grid: OccupancyGrid, trav: np.ndarray) -> np.ndarray:
    """Traversable voxels that keep body clearance from unknown space."""
    near_unknown = ndimage.binary_dilation(
        grid.classes == CLASS_UNKNOWN,
        structure=inflation_ball(VIEWPOINT_STANDOFF_M, grid.params.voxel_size),
    )
    return trav & ~near_unknown


def reach_point(
    cluster: FrontierCluster, grid: OccupancyGrid, viewpoints: np.ndarray
):
    """The viewpoint voxel center nearest the cluster centroid, or None
    when no viewpoint exists within VIEWPOINT_REACH_M of it."""
    vox = grid.params.voxel_size
    r = int(np.ceil(VIEWPOINT_REACH_M / vox))
    c_idx = grid.world_to_index(cluster.centroid)[0]
    lo = np.maximum(c_idx - r, 0)
    hi = np.minimum(c_idx + r + 1, grid.dims)
    cand = np.argwhere(viewpoints[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]) + lo
    if len(cand) == 0:
        return None
    centers = grid.index_to_center(cand)
    d = np.linalg.norm(centers - cluster.centroid, axis=1)
    near = d <= VIEWPOINT_REACH_M
    if not np.any(near):
        return None
    centers = centers[near]
    d = d[near]
    # deterministic: argwhere candidates are lexicographic, argmin is first
    return centers[int(np.argmin(d))]


def select_frontier(
    clusters: list[FrontierCluster],
    position: np.ndarray,
    grid: OccupancyGrid,
    clearance_m: float = 0.35,
    trav: np.ndarray | None = None,
    viewpoints: np.ndarray | None = None,
) -> np.ndarray | None:
    """Centroid of the nearest observable reachable cluster; None = done.

    Reachability is verified by path search from the current position to
    the cluster's viewpoint. A position that is itself blocked in the
    inflated grid raises (as find_path does): the caller must move
    somewhere traversable before asking, because nothing could ever be
    reached from a blocked voxel and "done" would be the wrong answer.
    """
    if trav is None:
        trav = traversable_mask(grid, clearance_m)
    if viewpoints is None:
        viewpoints = viewpoint_mask(grid, trav)
    ranked = sorted(clusters, key=lambda c: _order_key(c, position))
    for cluster in ranked:
        target = reach_point(cluster, grid, viewpoints)
        if target is None:
            continue
        if find_path(grid, position, target, clearance_m, trav=trav) is not None:
            return cluster.centroid
    return None
