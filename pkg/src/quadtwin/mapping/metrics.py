"""Map quality metrics: IoU against ground truth and volume coverage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CLASS_FREE, CLASS_OCCUPIED, CLASS_UNKNOWN, OccupancyGrid


@dataclass
class IouResult:
    value: float
    empty_union: bool
    explored_voxels: int


@dataclass
class CoverageSample:
    t: float
    free_fraction: float
    occupied_fraction: float
    unknown_fraction: float


def iou(grid: OccupancyGrid, truth_occupied: np.ndarray) -> IouResult:
    """Intersection-over-union of occupied sets, over the explored region.

    Explored = voxels the grid has classified (non-unknown). Both grids must
    share lattice and dims. An empty union counts as perfect agreement and is
    flagged.
    """
    if tuple(truth_occupied.shape) != tuple(grid.dims):
        raise ValueError(
            f"truth dims {truth_occupied.shape} do not match grid dims {tuple(grid.dims)}"
        )
    explored = grid.classes != CLASS_UNKNOWN
    occ = (grid.classes == CLASS_OCCUPIED) & explored
    tru = truth_occupied & explored
    inter = int(np.count_nonzero(occ & tru))
    union = int(np.count_nonzero(occ | tru))
    if union == 0:
        return IouResult(1.0, True, int(np.count_nonzero(explored)))
    return IouResult(inter / union, False, int(np.count_nonzero(explored)))


def coverage(grid: OccupancyGrid, t: float) -> CoverageSample:
    """Volume fractions over the voxels inside the world bounds."""
    window = grid.in_bounds_mask
    total = int(np.count_nonzero(window))
    if total == 0:
        return CoverageSample(t, 0.0, 0.0, 1.0)
    cls = grid.classes[window]
    free = int(np.count_nonzero(cls == CLASS_FREE))
    occ = int(np.count_nonzero(cls == CLASS_OCCUPIED))
    unk = int(np.count_nonzero(cls == CLASS_UNKNOWN))
    return CoverageSample(t, free / total, occ / total, unk / total)
