from .grid import CLASS_FREE, CLASS_OCCUPIED, CLASS_UNKNOWN, MapParams, OccupancyGrid
from .frontier import FrontierCluster, extract_clusters
from .metrics import CoverageSample, IouResult, coverage, iou
from .io import load_grid_dump, save_grid_dump

__all__ = [
    "CLASS_FREE",
    "CLASS_OCCUPIED",
    "CLASS_UNKNOWN",
    "MapParams",
    "OccupancyGrid",
    "FrontierCluster",
    "extract_clusters",
    "CoverageSample",
    "IouResult",
    "coverage",
    "iou",
    "load_grid_dump",
    "save_grid_dump",
]
