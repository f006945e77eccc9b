from .search import PathPlan, find_path, inflation_ball, optimistic_mask, shortcut_smooth, traversable_mask
from .minsnap import (
    BoundaryState,
    MotionLimits,
    PolyTrajectory,
    ReferenceSample,
    TrajectorySolveError,
    check_trajectory,
    generate_trajectory,
    load_trajectory,
    save_trajectory,
    trapezoidal_times,
)
from .frontier_select import reach_point, select_frontier, viewpoint_mask

__all__ = [
    "PathPlan",
    "find_path",
    "inflation_ball",
    "shortcut_smooth",
    "optimistic_mask",
    "traversable_mask",
    "BoundaryState",
    "MotionLimits",
    "PolyTrajectory",
    "ReferenceSample",
    "TrajectorySolveError",
    "check_trajectory",
    "generate_trajectory",
    "load_trajectory",
    "save_trajectory",
    "trapezoidal_times",
    "reach_point",
    "viewpoint_mask",
    "select_frontier",
]
