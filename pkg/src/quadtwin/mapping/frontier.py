"""Frontier clustering: group frontier voxels by 26-connectivity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import OccupancyGrid


@dataclass
class FrontierCluster:
    voxels: np.ndarray     # (n, 3) int indices
    centroid: np.ndarray   # meters
    size: int


def extract_clusters(grid: OccupancyGrid, min_size: int | None = None) -> list[FrontierCluster]:
    """Clusters of the current frontier set, small ones discarded.

    Output order is deterministic: descending size, then lexicographic
    centroid.
    """
    if min_size is None:
        min_size = grid.params.frontier_min_cluster
    mask = grid.frontier_mask
    if not mask.any():
        return []
    labels, count = ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=int))
    clusters: list[FrontierCluster] = []
    for lab in range(1, count + 1):
        vox = np.argwhere(labels == lab)
        if len(vox) < min_size:
            continue
        centroid = grid.index_to_center(vox).mean(axis=0)
        clusters.append(FrontierCluster(vox, centroid, len(vox)))
    clusters.sort(key=lambda c: (-c.size, tuple(c.centroid)))
    return clusters
