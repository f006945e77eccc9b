"""Report computation: every metric derives from the recorded log alone.

The runner never hands live state to this module. It replays the log,
feeds the wire frames through the same TelemetryReceiver an operator
station uses, decodes the full-precision pose topics, and computes the
metrics from those. Recomputing a report from a copied log file therefore
reproduces the original numbers by construction.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..flightlog import ReplayReport, replay, session_segments
from ..telemetry import TelemetryReceiver
from .logschema import TOPIC_ESTIMATE, TOPIC_REFERENCE, TOPIC_TRUE_STATE, PoseRecord, pose_series
from .metrics import MetricsReport, ate_rmse, iou_classes
from .worlds import world_from_doc

_POSE_TOPICS = (TOPIC_TRUE_STATE, TOPIC_ESTIMATE, TOPIC_REFERENCE)


@dataclass
class LogData:
    """Everything a report needs, decoded from one session's segments."""

    true_poses: list[PoseRecord] = field(default_factory=list)
    estimate_poses: list[PoseRecord] = field(default_factory=list)
    reference_poses: list[PoseRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    config: dict | None = None
    coverage: list = field(default_factory=list)      # telemetry CoverageSample
    mirror_classes: np.ndarray | None = None
    replay_report: ReplayReport | None = None
    malformed_events: int = 0
    receiver: TelemetryReceiver | None = None


def load_log(log_dir: str | Path) -> LogData:
    paths = session_segments(Path(log_dir))
    if not paths:
        raise FileNotFoundError(f"no log segments under {log_dir}")
    messages, rep = replay(paths)

    data = LogData(replay_report=rep)
    receiver = TelemetryReceiver()
    by_topic = {
        TOPIC_TRUE_STATE: data.true_poses,
        TOPIC_ESTIMATE: data.estimate_poses,
        TOPIC_REFERENCE: data.reference_poses,
    }
    for _stamp, topic_id, body in messages:
        bucket = by_topic.get(topic_id)
        if bucket is not None:
            bucket.append(PoseRecord.decode(body))
        else:
            receiver.feed(body)

    for payload in receiver.log_events:
        try:
            doc = json.loads(payload)
        except (ValueError, UnicodeDecodeError):
            data.malformed_events += 1
            continue
        data.events.append(doc)
        if doc.get("kind") == "config" and data.config is None:
            data.config = doc
    data.coverage = list(receiver.coverage)
    data.mirror_classes = receiver.mirror.classes_grid()
    data.receiver = receiver
    return data


def _tracking_errors(data: LogData) -> tuple[list, float | None]:
    if not data.reference_poses or not data.true_poses:
        return [], None
    ref_t, ref_p = pose_series(data.reference_poses)
    true_t, true_p = pose_series(data.true_poses)
    flown = np.stack([np.interp(ref_t, true_t, true_p[:, ax]) for ax in range(3)], axis=1)
    err = flown - ref_p
    norm = np.linalg.norm(err, axis=1)
    series = [
        [float(ref_t[i]), float(err[i, 0]), float(err[i, 1]), float(err[i, 2]), float(norm[i])]
        for i in range(len(ref_t))
    ]
    return series, float(np.max(norm))


def _ate(data: LogData) -> float | None:
    if not data.reference_poses or not data.true_poses:
        return None
    ref_t, ref_p = pose_series(data.reference_poses)
    true_t, true_p = pose_series(data.true_poses)
    try:
        return ate_rmse(true_t, true_p, ref_t, ref_p)
    except ValueError:
        return None


def _map_agreement(data: LogData) -> tuple[float | None, int | None]:
    if data.mirror_classes is None or data.config is None or "world" not in data.config:
        return None, None
    world = world_from_doc(data.config["world"])
    voxel = (
        data.config.get("map", {}).get("voxel_size")
        or _default_voxel_size()
    )
    _origin, dims, truth_occ = world.ground_truth_grid(voxel)
    classes = data.mirror_classes
    if tuple(classes.shape) != tuple(dims):
        return None, None
    value, explored = iou_classes(classes, truth_occ)
    return value, explored


def _default_voxel_size() -> float:
    from ..mapping import MapParams

    return MapParams().voxel_size


def compute_report(
    log_dir: str | Path,
    out_dir: str | Path | None = None,
    render: bool = False,
    scenario_name: str | None = None,
    wall_s: float | None = None,
) -> tuple[MetricsReport, list[Path]]:
    """Build the report for one recorded session, with optional artifacts.

    out_dir: where CSV tables (and figures when render is set) land; when
    None only the report object is produced.
    """
    data = load_log(log_dir)

    config = data.config or {}
    scen = config.get("scenario", {})
    mission_end = next((e for e in data.events if e.get("kind") == "mission_end"), None)

    tracking_series, tracking_max = _tracking_errors(data)
    iou_value, explored = _map_agreement(data)
    coverage_series = [
        [float(c.stamp), float(c.free), float(c.occupied), float(c.unknown)]
        for c in data.coverage
    ]
    final_coverage = None
    if coverage_series:
        t, free, occ, unk = coverage_series[-1]
        final_coverage = {"t": t, "free": free, "occupied": occ, "unknown": unk}

    duration_s = float(data.true_poses[-1].stamp) if data.true_poses else 0.0
    rep = data.replay_report
    wall = {
        "wall_s": wall_s,
        "log_segments": rep.segments if rep else 0,
        "log_messages": rep.messages if rep else 0,
        "log_skipped_chunks": rep.skipped_chunks if rep else 0,
        "malformed_events": data.malformed_events,
    }

    report = MetricsReport(
        scenario_name=scenario_name or scen.get("name", "unknown"),
        mission=scen.get("mission", "unknown"),
        seed=int(config.get("seed", 0)),
        complete=bool(mission_end.get("complete", False)) if mission_end else False,
        end_reason=mission_end.get("reason", "log_truncated") if mission_end else "log_truncated",
        duration_s=duration_s,
        config_fingerprint=config.get("fingerprint", ""),
        ate_rmse_m=_ate(data),
        tracking_error_max_m=tracking_max,
        iou=iou_value,
        explored_voxels=explored,
        final_coverage=final_coverage,
        coverage_series=coverage_series,
        tracking_error_series=tracking_series,
        events=data.events,
        wall=wall,
    )

    artifacts: list[Path] = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts += _write_tables(out, report)
        if render:
            artifacts += _render_figures(out, report, data)
    return report, artifacts


def _write_tables(out: Path, report: MetricsReport) -> list[Path]:
    paths = []

    p = out / "tracking_error.csv"
    with p.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "ex_m", "ey_m", "ez_m", "norm_m"])
        w.writerows(report.tracking_error_series)
    paths.append(p)

    p = out / "coverage.csv"
    with p.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "free_fraction", "occupied_fraction", "unknown_fraction"])
        w.writerows(report.coverage_series)
    paths.append(p)

    p = out / "events.csv"
    with p.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "kind", "detail"])
        for e in report.events:
            extras = {k: v for k, v in e.items() if k not in ("t", "kind")}
            w.writerow([e.get("t"), e.get("kind"), json.dumps(extras, sort_keys=True)])
    paths.append(p)
    return paths


def _render_figures(out: Path, report: MetricsReport, data: LogData) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []

    fig, ax = plt.subplots(figsize=(7, 5.5))
    if data.config and "world" in data.config:
        world = world_from_doc(data.config["world"])
        lo, hi = world.bounds.lo, world.bounds.hi
        ax.add_patch(
            plt.Rectangle(
                (lo[0], lo[1]), hi[0] - lo[0], hi[1] - lo[1],
                fill=False, edgecolor="black", linewidth=1.2,
            )
        )
        for b in world.obstacles:
            ax.add_patch(
                plt.Rectangle(
                    (b.lo[0], b.lo[1]), b.hi[0] - b.lo[0], b.hi[1] - b.lo[1],
                    color="0.75",
                )
            )
    if data.reference_poses:
        _t, ref_p = pose_series(data.reference_poses)
        ax.plot(ref_p[:, 0], ref_p[:, 1], "--", color="tab:orange", label="reference")
    if data.true_poses:
        _t, true_p = pose_series(data.true_poses)
        ax.plot(true_p[:, 0], true_p[:, 1], color="tab:blue", linewidth=1.0, label="flown")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"{report.scenario_name}: top view")
    ax.legend(loc="upper right")
    p = out / "trajectory_xy.png"
    fig.savefig(p, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    if report.tracking_error_series:
        arr = np.asarray(report.tracking_error_series)
        fig, ax = plt.subplots(figsize=(7, 3.2))
        ax.plot(arr[:, 0], arr[:, 4], color="tab:red", linewidth=0.9)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("position error [m]")
        ax.set_title("tracking error")
        ax.grid(True, alpha=0.3)
        p = out / "tracking_error.png"
        fig.savefig(p, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(p)

    if report.coverage_series:
        arr = np.asarray(report.coverage_series)
        fig, ax = plt.subplots(figsize=(7, 3.2))
        ax.plot(arr[:, 0], arr[:, 1], label="free", color="tab:green")
        ax.plot(arr[:, 0], arr[:, 2], label="occupied", color="tab:gray")
        ax.plot(arr[:, 0], arr[:, 3], label="unknown", color="tab:purple")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("fraction of world volume")
        ax.set_ylim(0.0, 1.0)
        ax.set_title("coverage")
        ax.legend(loc="center right")
        ax.grid(True, alpha=0.3)
        p = out / "coverage_timeline.png"
        fig.savefig(p, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(p)

    return paths


def load_report(path: str | Path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text()))


def compare_reports(a: MetricsReport, b: MetricsReport) -> dict:
    """Field-by-field comparison of two reports.

    identical_deterministic is byte equality of the wall-stripped
    serializations, the bar two equal-seed runs must meet.
    """

    def delta(x, y):
        if x is None or y is None:
            return None
        return y - x

    return {
        "identical_deterministic": a.deterministic_json() == b.deterministic_json(),
        "scenario": [a.scenario_name, b.scenario_name],
        "seed": [a.seed, b.seed],
        "fingerprint_match": a.config_fingerprint == b.config_fingerprint,
        "complete": [a.complete, b.complete],
        "end_reason": [a.end_reason, b.end_reason],
        "duration_s": [a.duration_s, b.duration_s],
        "ate_rmse_m": {"a": a.ate_rmse_m, "b": b.ate_rmse_m, "delta": delta(a.ate_rmse_m, b.ate_rmse_m)},
        "tracking_error_max_m": {
            "a": a.tracking_error_max_m,
            "b": b.tracking_error_max_m,
            "delta": delta(a.tracking_error_max_m, b.tracking_error_max_m),
        },
        "iou": {"a": a.iou, "b": b.iou, "delta": delta(a.iou, b.iou)},
        "final_unknown_fraction": {
            "a": a.final_coverage.get("unknown") if a.final_coverage else None,
            "b": b.final_coverage.get("unknown") if b.final_coverage else None,
        },
    }
