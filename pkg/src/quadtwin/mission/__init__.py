"""Mission layer: scenarios, closed-loop execution, logs, and reports."""

from .logschema import (
    TOPIC_ESTIMATE,
    TOPIC_REFERENCE,
    TOPIC_TRUE_STATE,
    PoseRecord,
    pose_series,
)
from .metrics import MetricsReport, ate_rmse, config_fingerprint, iou_classes
from .minsnap_fit import fit_path_trajectory
from .references import (
    lemniscate_points,
    lemniscate_trajectory,
    reference_trajectories,
    spiral_points,
    spiral_trajectory,
)
from .report import LogData, compare_reports, compute_report, load_log, load_report
from .runner import MissionResult, run
from .scenario import (
    SCENARIO_SCHEMA_VERSION,
    MissionType,
    Scenario,
    load_scenario,
    save_scenario,
    stock_scenarios,
    write_stock_scenarios,
)
from .worlds import (
    BUILTIN_WORLDS,
    arena,
    builtin_world,
    reference_room,
    world_doc,
    world_from_doc,
    write_builtin_worlds,
)

__all__ = [
    "TOPIC_ESTIMATE",
    "TOPIC_REFERENCE",
    "TOPIC_TRUE_STATE",
    "PoseRecord",
    "pose_series",
    "MetricsReport",
    "ate_rmse",
    "config_fingerprint",
    "iou_classes",
    "fit_path_trajectory",
    "lemniscate_points",
    "lemniscate_trajectory",
    "reference_trajectories",
    "spiral_points",
    "spiral_trajectory",
    "LogData",
    "compare_reports",
    "compute_report",
    "load_log",
    "load_report",
    "MissionResult",
    "run",
    "SCENARIO_SCHEMA_VERSION",
    "MissionType",
    "Scenario",
    "load_scenario",
    "save_scenario",
    "stock_scenarios",
    "write_stock_scenarios",
    "BUILTIN_WORLDS",
    "arena",
    "builtin_world",
    "reference_room",
    "world_doc",
    "world_from_doc",
    "write_builtin_worlds",
]
