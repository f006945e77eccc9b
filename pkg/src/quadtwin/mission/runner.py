"""Closed-loop mission execution.

One lockstep loop advances physics at 400 Hz and derives every other
cadence from it: IMU 200 Hz, control 100 Hz, lidar 10 Hz, telemetry pump
at control rate with its own per-topic rate limits, coverage 1 Hz. The
controller steers on the estimator output, never on ground truth, and the
map is built at the estimated pose, so estimation error propagates into
mapping exactly as it would on the vehicle.

Everything a report needs is written to the flight log during the run:
the full telemetry wire stream (one frame per log message, so replay can
drive a TelemetryReceiver), plus full-precision pose records on log-only
topics. Metrics are computed from the log afterwards, never from live
state, so recomputing a report from the log file reproduces it by
construction.

Sensor clocks run synchronized to master time here (offsets and drift
zero). The clock-discipline path has its own tests; mission-level metrics
assume the sub-millisecond sync those tests demonstrate.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..control import (
    ACTIVE_MODES,
    CommandSource,
    ControlFault,
    ControlGains,
    FlightMode,
    HealthFlags,
    ModeMachine,
    ModeRequest,
    MotionBounds,
    TwistCommand,
    VehicleParams,
    bound_reference,
    clamp_twist,
    hold_reference,
    track,
    twist_reference,
)
from ..estimation import EstimatorConfig, NavState, StateEstimator, SurfaceModel
from ..flightlog import LogWriterConfig, SegmentedLogWriter
from ..geometry import SE3, quat_from_yaw, yaw_of
from ..mapping import CLASS_UNKNOWN, MapParams, OccupancyGrid, coverage, extract_clusters
from ..planning import (
    BoundaryState,
    MotionLimits,
    TrajectorySolveError,
    check_trajectory,
    find_path,
    optimistic_mask,
    generate_trajectory,
    load_trajectory,
    reach_point,
    select_frontier,
    traversable_mask,
    viewpoint_mask,
)
from ..sim import (
    ActuatorCommand,
    Box,
    ImuModel,
    ImuNoise,
    LidarModel,
    SimConfig,
    SimulationFault,
    VehicleState,
    load_world,
    step,
)
from ..telemetry import (
    CoverageSample,
    Deframer,
    HEALTH_BATTERY_LOW,
    HEALTH_CRASHED,
    HEALTH_ESTIMATOR_OK,
    HEALTH_FENCE_BREACH,
    HEALTH_TWIST_STALE,
    MapPublisher,
    StateSample,
    TelemetrySender,
    encode_frame,
)
from .logschema import TOPIC_ESTIMATE, TOPIC_REFERENCE, TOPIC_TRUE_STATE, PoseRecord
from .metrics import config_fingerprint
from .references import reference_trajectories
from .scenario import MissionType, Scenario
from .worlds import builtin_world, world_doc

PHYSICS_RATE_HZ = 400.0
IMU_EVERY_STEPS = 2         # 200 Hz
CONTROL_EVERY_STEPS = 4     # 100 Hz
LIDAR_EVERY_STEPS = 40      # 10 Hz
COVERAGE_EVERY_STEPS = 400  # 1 Hz

SURFACE_REBUILD_PERIOD_S = 1.0
GEOFENCE_INSET_M = 0.4
BATTERY_ENDURANCE_S = 900.0
BATTERY_LOW_FRACTION = 0.25
HOLD_SETTLE_S = 1.0
HOLD_RESUME_COOLDOWN_S = 1.0
TWIST_STALENESS_S = 1.0
PLAN_CLEARANCE_M = 0.35
NAV_SPEED_MPS = 2.5
NAV_ACCEL_MPS2 = 4.0
REPLAN_CHECK_PERIOD_S = 1.0
REPLAN_BACKOFF_S = 0.5
LAND_DESCENT_MPS = 0.5
LAND_HOVER_ALT_M = 0.45
DRAIN_STEP_S = 0.1
DRAIN_MAX_S = 60.0


def _battery_fraction(t: float) -> float:
    return max(0.0, 1.0 - t / BATTERY_ENDURANCE_S)


def _event_payload(t: float, kind: str, **fields) -> bytes:
    doc = {"t": round(float(t), 9), "kind": kind}
    doc.update(fields)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


@dataclass
class MissionResult:
    report: object          # MetricsReport
    out_dir: Path
    log_dir: Path
    report_path: Path
    artifacts: list[Path] = field(default_factory=list)


class _Navigator:
    """Plans and carries the active point-to-point trajectory.

    Plans A* in the inflated live map, smooths through the line-of-sight
    waypoints, and falls back to the raw voxel path when the smooth
    trajectory clips an obstacle the shortcut pass cut across.
    """

    def __init__(self, grid: OccupancyGrid, events, v_max=NAV_SPEED_MPS, a_max=NAV_ACCEL_MPS2,
                 mask_fn=traversable_mask):
        self.grid = grid
        self.events = events
        self.limits = MotionLimits(v_max=v_max, a_max=a_max)
        self.clearance = PLAN_CLEARANCE_M
        self.mask_fn = mask_fn
        self.traj = None
        self.t0 = 0.0
        self._last_clear_check = 0.0

    def flying(self, t: float) -> bool:
        return self.traj is not None and (t - self.t0) < self.traj.total_time

    def arrived(self, t: float) -> bool:
        return self.traj is not None and (t - self.t0) >= self.traj.total_time

    def reference(self, t: float):
        tau = min(t - self.t0, self.traj.total_time)
        return self.traj.sample(tau)

    def clear(self) -> None:
        self.traj = None

    def plan_to(self, position, velocity, goal_m, t: float, trav=None) -> bool:
        """Plan from the current state to goal_m. False = no usable path."""
        if trav is None:
            trav = self.mask_fn(self.grid, self.clearance)
        try:
            plan = find_path(self.grid, position, goal_m, self.clearance, trav=trav)
        except ValueError:
            # start voxel blocked in the inflated grid; hold and let the
            # next map update free it
            self.events(t, "plan_failed", why="start_blocked")
            return False
        if plan is None:
            return False

        speed_cap = 0.9 * self.limits.v_max
        v0 = np.asarray(velocity, dtype=float).copy()
        speed = float(np.linalg.norm(v0))
        if speed > speed_cap:
            v0 *= speed_cap / speed
        start = BoundaryState(velocity=v0)

        for waypoints in (plan.smoothed, plan.waypoints):
            pts = np.vstack([np.asarray(position, dtype=float), waypoints[1:]])
            try:
                traj = generate_trajectory(pts, self.limits, start=start)
            except (TrajectorySolveError, ValueError):
                continue
            if check_trajectory(self.grid, traj, trav=trav, clearance_m=self.clearance) is None:
                self.traj = traj
                self.t0 = t
                self._last_clear_check = t
                return True
        self.events(t, "plan_failed", why="trajectory_blocked")
        return False

    def escape_target(self, position):
        """Nearest traversable voxel center when the current voxel is not
        traversable in the inflated map; None when no escape is needed (or
        nothing nearby is free). Hovering close to a surface puts the
        vehicle inside the inflation margin, where path search cannot
        start; a short direct move out restores planning."""
        trav = self.mask_fn(self.grid, self.clearance)
        idx = self.grid.world_to_index(position)[0]
        if self.grid.in_grid(idx)[0] and trav[tuple(idx)]:
            return None
        r = 5
        lo = np.maximum(idx - r, 0)
        hi = np.minimum(idx + r + 1, self.grid.dims)
        cand = np.argwhere(trav[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]) + lo
        if len(cand) == 0:
            return None
        centers = self.grid.index_to_center(cand)
        d = np.linalg.norm(centers - np.asarray(position, dtype=float), axis=1)
        return centers[int(np.argmin(d))]

    def still_clear(self, t: float) -> bool:
        """Recheck the remaining trajectory against the current map, 1 Hz."""
        if self.traj is None or (t - self._last_clear_check) < REPLAN_CHECK_PERIOD_S:
            return True
        self._last_clear_check = t
        trav = self.mask_fn(self.grid, self.clearance)
        dt = self.grid.params.voxel_size / (2.0 * self.limits.v_max)
        tau = t - self.t0
        while tau <= self.traj.total_time:
            pos = self.traj.sample(min(tau, self.traj.total_time)).position
            idx = self.grid.world_to_index(pos)[0]
            if self.grid.in_grid(idx)[0] and not trav[tuple(idx)]:
                return False
            tau += dt
        return True


class _TrackLogic:
    """Fly a fixed reference trajectory from its own start pose."""

    mode_target = FlightMode.NAVIGATION
    request_source = CommandSource.AUTONOMY
    ends_at_cap = False

    def __init__(self, traj):
        self.traj = traj

    def start_pose(self, world):
        s = self.traj.sample(0.0)
        return s.position.copy(), float(s.yaw)

    def update(self, t, position, velocity) -> None:
        pass

    def on_resume(self, t) -> None:
        pass

    def finished(self, t) -> bool:
        return t >= self.traj.total_time

    def reference(self, t, position, yaw):
        return self.traj.sample(min(t, self.traj.total_time))


class _HoldFallback:
    """Shared hold-in-place reference for logics that plan on the fly."""

    def __init__(self):
        self._pos = None
        self._yaw = 0.0

    def latch(self, position, yaw) -> None:
        if self._pos is None:
            self._pos = np.asarray(position, dtype=float).copy()
            self._yaw = float(yaw)

    def move_to(self, position) -> None:
        """Redirect the hold point, keeping the latched yaw."""
        self._pos = np.asarray(position, dtype=float).copy()

    def release(self) -> None:
        self._pos = None

    def reference(self, t, position, yaw):
        self.latch(position, yaw)
        return hold_reference(self._pos, self._yaw, t)


class _ExploreLogic:
    """Frontier-driven exploration until no reachable frontier remains."""

    mode_target = FlightMode.EXPLORATION
    request_source = CommandSource.AUTONOMY
    ends_at_cap = False

    # a cluster whose plans keep failing is parked on or walled off: the
    # vehicle may stand at the frontier itself with the unknown space in
    # its sensor's blind band, where waiting resolves nothing
    BAN_AFTER_FAILS = 4
    BAN_RADIUS_M = 0.45
    # "nothing selectable" only means done once it has persisted across a
    # few seconds of fresh scans; early on, the map is too tight for any
    # viewpoint to exist at all
    COMPLETE_PATIENCE_S = 3.0

    def __init__(self, nav: _Navigator, events):
        self.nav = nav
        self.events = events
        self.done = False
        self._hold = _HoldFallback()
        self._next_replan_ok = 0.0
        self._banned: list[np.ndarray] = []
        self._last_target = None
        self._target_fails = 0
        self._none_since = None

    def start_pose(self, world):
        return np.asarray(world.spawn_position, dtype=float), float(world.spawn_yaw_rad)

    def _note_failure(self, t, target) -> None:
        same = (
            self._last_target is not None
            and float(np.linalg.norm(target - self._last_target)) < 0.3
        )
        self._target_fails = self._target_fails + 1 if same else 1
        self._last_target = target
        if self._target_fails >= self.BAN_AFTER_FAILS:
            self._banned.append(target.copy())
            self._target_fails = 0
            self._last_target = None
            self.events(
                t, "frontier_banned", target=[round(float(x), 3) for x in target]
            )

    def update(self, t, position, velocity) -> None:
        if self.done:
            return
        if self.nav.flying(t):
            if self.nav.still_clear(t):
                return
            self.events(t, "replan", why="path_blocked")
            self.nav.clear()
        if t < self._next_replan_ok:
            return
        self._next_replan_ok = t + REPLAN_BACKOFF_S

        esc = self.nav.escape_target(position)
        if esc is not None:
            self._hold.latch(position, 0.0)
            self._hold.move_to(esc)
            self.events(t, "escape", target=[round(float(x), 3) for x in esc])
            return

        grid = self.nav.grid
        clusters = [
            c for c in extract_clusters(grid)
            if all(
                float(np.linalg.norm(c.centroid - b)) > self.BAN_RADIUS_M
                for b in self._banned
            )
        ]
        trav = traversable_mask(grid, self.nav.clearance)
        viewpoints = viewpoint_mask(grid, trav)
        try:
            target = select_frontier(
                clusters, position, grid, self.nav.clearance,
                trav=trav, viewpoints=viewpoints,
            )
        except ValueError:
            # blocked with no free voxel near enough to escape to; hold
            # until the map resolves
            self.events(t, "plan_failed", why="start_blocked")
            return
        if target is None:
            # an empty map has no frontiers either; completion only counts
            # once scans have put known space on the grid
            if not np.any(grid.classes != CLASS_UNKNOWN):
                return
            if self._none_since is None:
                self._none_since = t
            if (t - self._none_since) < self.COMPLETE_PATIENCE_S:
                return
            self.done = True
            self.events(
                t, "exploration_complete",
                clusters=len(clusters), banned=len(self._banned),
            )
            return
        self._none_since = None
        match = min(clusters, key=lambda c: float(np.linalg.norm(c.centroid - target)))
        goal = reach_point(match, grid, viewpoints)
        if goal is None:
            self._note_failure(t, target)
            return
        if float(np.linalg.norm(goal - np.asarray(position, dtype=float))) < \
                grid.params.voxel_size:
            # already standing at the best viewpoint and the cluster has
            # not resolved: it sits in the sensor's blind band, and
            # waiting here cannot help
            self._note_failure(t, target)
            return
        if self.nav.plan_to(position, velocity, goal, t, trav=trav):
            self._hold.release()
            self._last_target = None
            self._target_fails = 0
            self.events(
                t, "frontier_selected",
                target=[round(float(x), 3) for x in target],
                goal=[round(float(x), 3) for x in goal],
                cluster_size=int(match.size),
            )
        else:
            self._note_failure(t, target)

    def on_resume(self, t) -> None:
        self.nav.clear()
        self._next_replan_ok = 0.0

    def finished(self, t) -> bool:
        return self.done

    def reference(self, t, position, yaw):
        if self.nav.traj is not None:
            return self.nav.reference(t)
        return self._hold.reference(t, position, yaw)


class _GoalLogic:
    """Fly a fixed goal list in order, skipping unreachable goals."""

    mode_target = FlightMode.GOAL
    request_source = CommandSource.AUTONOMY
    ends_at_cap = False

    def __init__(self, nav: _Navigator, goals, events):
        self.nav = nav
        self.goals = [np.asarray(g, dtype=float) for g in goals]
        self.events = events
        self.index = 0
        self.done = not self.goals
        self._planned_for = -1
        self._fail_count = 0
        self._next_replan_ok = 0.0
        self._hold = _HoldFallback()

    def start_pose(self, world):
        return np.asarray(world.spawn_position, dtype=float), float(world.spawn_yaw_rad)

    def update(self, t, position, velocity) -> None:
        if self.done:
            return
        if self.nav.flying(t):
            if self.nav.still_clear(t):
                return
            self.events(t, "replan", why="path_blocked")
            self.nav.clear()
            self._planned_for = -1
        if self.nav.arrived(t) and self._planned_for == self.index:
            self.events(t, "goal_reached", index=self.index,
                        goal=[round(float(x), 3) for x in self.goals[self.index]])
            self.index += 1
            self.nav.clear()
            self._planned_for = -1
            self._fail_count = 0
            if self.index >= len(self.goals):
                self.done = True
                return
        if t < self._next_replan_ok:
            return
        esc = self.nav.escape_target(position)
        if esc is not None:
            self._hold.latch(position, 0.0)
            self._hold.move_to(esc)
            self.events(t, "escape", target=[round(float(x), 3) for x in esc])
            self._next_replan_ok = t + REPLAN_BACKOFF_S
            return
        if self.nav.plan_to(position, velocity, self.goals[self.index], t):
            self._planned_for = self.index
            self._fail_count = 0
            self._hold.release()
            return
        self._next_replan_ok = t + REPLAN_BACKOFF_S
        self._fail_count += 1
        if self._fail_count >= 3:
            self.events(t, "goal_unreachable", index=self.index,
                        goal=[round(float(x), 3) for x in self.goals[self.index]])
            self.index += 1
            self._fail_count = 0
            if self.index >= len(self.goals):
                self.done = True

    def on_resume(self, t) -> None:
        self.nav.clear()
        self._planned_for = -1
        self._next_replan_ok = 0.0

    def finished(self, t) -> bool:
        return self.done

    def reference(self, t, position, yaw):
        if self.nav.traj is not None:
            return self.nav.reference(t)
        return self._hold.reference(t, position, yaw)


class _TeleopLogic:
    """Track operator twist commands; the duration cap is the natural end.

    With no twist source the stale-command rule demotes to HOLD at the
    first decision, which is the headless behavior: hover at spawn.
    """

    mode_target = FlightMode.TWIST
    request_source = CommandSource.OPERATOR
    ends_at_cap = True

    def __init__(self, twist_source, bounds: MotionBounds):
        self.twist_source = twist_source
        self.bounds = bounds
        self.last_twist: TwistCommand | None = None
        self.yaw = 0.0
        self._yaw_init = False

    def start_pose(self, world):
        return np.asarray(world.spawn_position, dtype=float), float(world.spawn_yaw_rad)

    def stale(self, t) -> bool:
        return self.last_twist is None or (t - self.last_twist.stamp) > TWIST_STALENESS_S

    def update(self, t, position, velocity) -> None:
        if self.twist_source is None:
            return
        cmd = self.twist_source(t)
        if cmd is not None:
            self.last_twist = clamp_twist(cmd, self.bounds)

    def on_resume(self, t) -> None:
        pass

    def finished(self, t) -> bool:
        return False

    def reference(self, t, position, yaw):
        if not self._yaw_init:
            self.yaw = float(yaw)
            self._yaw_init = True
        cmd = self.last_twist
        if cmd is None or self.stale(t):
            cmd = TwistCommand(stamp=t, velocity=np.zeros(3), yaw_rate=0.0)
        self.yaw += cmd.yaw_rate * (CONTROL_EVERY_STEPS / PHYSICS_RATE_HZ)
        return twist_reference(position, self.yaw, cmd, t)


def _build_world(scenario: Scenario):
    path = scenario.world_path()
    if path is None:
        return builtin_world(scenario.world), {}
    return load_world(path)


def _sim_config(noise: str, sensor_overrides: dict) -> SimConfig:
    cfg = SimConfig(**sensor_overrides) if sensor_overrides else SimConfig()
    cfg.clock_drift_ppm = {"imu": 0.0, "lidar": 0.0}
    cfg.clock_offset_s = {"imu": 0.0, "lidar": 0.0}
    if noise == "none":
        cfg.imu_noise = ImuNoise.zero()
        cfg.lidar_range_noise_m = 0.0
    return cfg


def _geofence(world) -> Box:
    lo = world.bounds.lo + GEOFENCE_INSET_M
    hi = world.bounds.hi - GEOFENCE_INSET_M
    return Box(tuple(lo), tuple(hi))


def _reference_for(scenario: Scenario):
    if scenario.reference in ("lemniscate", "spiral"):
        return reference_trajectories(peak_speed_mps=scenario.peak_speed_mps)[scenario.reference]
    return load_trajectory(scenario.reference_path())


def _build_logic(scenario: Scenario, grid, bounds, events, twist_source):
    if scenario.mission is MissionType.TRACK_REFERENCE:
        return _TrackLogic(_reference_for(scenario))
    if scenario.mission is MissionType.EXPLORE:
        return _ExploreLogic(_Navigator(grid, events), events)
    if scenario.mission is MissionType.GOAL_SEQUENCE:
        # goals may sit in rooms the map has not reached yet; route through
        # unknown space and let the 1 Hz clear-check replan as it resolves
        nav = _Navigator(grid, events, mask_fn=optimistic_mask)
        return _GoalLogic(nav, scenario.goals, events)
    return _TeleopLogic(twist_source, bounds)


def _effective_config(scenario: Scenario, world, cfg: SimConfig, seed: int) -> dict:
    params = {
        "scenario": {
            "name": scenario.name,
            "mission": scenario.mission.value,
            "world": scenario.world,
            "reference": scenario.reference,
            "peak_speed_mps": scenario.peak_speed_mps,
            "goals": [list(map(float, g)) for g in scenario.goals],
            "noise": scenario.noise,
            "duration_cap_s": scenario.duration_cap_s,
        },
        "seed": seed,
        "world": world_doc(world),
        "sim": cfg.to_dict(),
        "map": dataclasses.asdict(MapParams()),
        "estimator": dataclasses.asdict(EstimatorConfig()),
        "gains": dataclasses.asdict(ControlGains()),
        "schedule": {
            "physics_rate_hz": PHYSICS_RATE_HZ,
            "imu_every_steps": IMU_EVERY_STEPS,
            "control_every_steps": CONTROL_EVERY_STEPS,
            "lidar_every_steps": LIDAR_EVERY_STEPS,
            "surface_rebuild_period_s": SURFACE_REBUILD_PERIOD_S,
        },
        "battery": {
            "endurance_s": BATTERY_ENDURANCE_S,
            "low_fraction": BATTERY_LOW_FRACTION,
        },
        "navigation": {
            "clearance_m": PLAN_CLEARANCE_M,
            "speed_mps": NAV_SPEED_MPS,
            "accel_mps2": NAV_ACCEL_MPS2,
        },
        "geofence_inset_m": GEOFENCE_INSET_M,
    }
    return {"params": params, "fingerprint": config_fingerprint(params)}


def run(
    scenario: Scenario,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    realtime: bool = False,
    render: bool = True,
    twist_source=None,
) -> MissionResult:
    """Execute a scenario and build its report from the recorded log."""
    from .report import compute_report

    scenario.validate()
    seed = scenario.seed if seed is None else int(seed)
    out = Path(out_dir) if out_dir else (
        Path(scenario.out_dir) if scenario.out_dir else Path("runs") / scenario.name
    )
    out.mkdir(parents=True, exist_ok=True)
    log_dir = out / "log"
    log_dir.mkdir(parents=True, exist_ok=True)
    for stale_file in list(log_dir.glob("*.aglg")) + list(log_dir.glob("*.aglg.part")):
        stale_file.unlink()

    world, sensor_overrides = _build_world(scenario)
    cfg = _sim_config(scenario.noise, sensor_overrides)
    effective = _effective_config(scenario, world, cfg, seed)
    fingerprint = effective["fingerprint"]

    rng = np.random.default_rng(seed)
    grid = OccupancyGrid.for_world(world)
    imu = ImuModel(cfg)
    lidar = LidarModel(cfg)
    publisher = MapPublisher(grid)
    sender = TelemetrySender(map_publisher=publisher)
    deframer = Deframer()
    machine = ModeMachine()
    gains = ControlGains()
    vehicle = VehicleParams.from_config(cfg)
    fence = _geofence(world)
    bounds = MotionBounds(
        v_max=max(8.0, 1.4 * scenario.peak_speed_mps),
        a_max=40.0,
        geofence=fence,
        yaw_rate_max=4.0,
    )
    bounds.validate_within(world.bounds)

    session_id = hashlib.sha256(fingerprint.encode()).digest()[:16]
    log = SegmentedLogWriter(LogWriterConfig(directory=log_dir), session_id=session_id)

    def events(t: float, kind: str, **fields) -> None:
        sender.publish_log_event(_event_payload(t, kind, **fields), t)

    logged_transitions = 0

    def drain(now: float) -> None:
        nonlocal logged_transitions
        for rec in machine.log[logged_transitions:]:
            sender.publish_log_event(
                _event_payload(
                    rec.t, "mode_change",
                    previous=rec.previous.value, mode=rec.mode.value,
                    source=rec.source.value, reason=rec.reason,
                ),
                now,
            )
        logged_transitions = len(machine.log)
        sender.pump(now)
        data = sender.take_output()
        for f in deframer.feed(data):
            log.append(f.topic_id, now, encode_frame(f.topic_id, f.seq, f.payload, f.flags))

    logic = _build_logic(scenario, grid, bounds, events, twist_source)
    start_pos, start_yaw = logic.start_pose(world)
    state = VehicleState(t=0.0, position=start_pos.copy(), attitude=quat_from_yaw(start_yaw))
    est = StateEstimator(
        NavState(
            t=0.0,
            position=start_pos.copy(),
            velocity=np.zeros(3),
            attitude=quat_from_yaw(start_yaw),
        )
    )

    events(0.0, "config", **effective["params"], fingerprint=fingerprint)

    surface: SurfaceModel | None = None
    last_surface_t = -np.inf
    cmd = ActuatorCommand(0.0, 0.0, np.zeros(3))
    hold_pos = start_pos.copy()
    hold_yaw = start_yaw
    land_entry_z = float(start_pos[2])
    prev_mode = machine.mode
    end_reason = "duration_cap"
    complete = False
    n_steps = int(round(scenario.duration_cap_s * PHYSICS_RATE_HZ))
    wall_start = time.monotonic()
    t = 0.0

    try:
        for i in range(n_steps + 1):
            t = i / PHYSICS_RATE_HZ

            if i % CONTROL_EVERY_STEPS == 0:
                est_pos = est.state.position
                est_vel = est.state.velocity
                est_yaw = yaw_of(est.state.attitude)

                logic.update(t, est_pos, est_vel)

                stale = logic.stale(t) if isinstance(logic, _TeleopLogic) else False
                flags = HealthFlags(
                    estimator_healthy=est.healthy,
                    estimator_diverged=est.diverged,
                    geofence_breached=not fence.contains(est_pos),
                    crashed=state.crashed,
                    twist_command_stale=stale,
                    battery_low=_battery_fraction(t) < BATTERY_LOW_FRACTION,
                )
                safety_clear = (
                    flags.estimator_healthy
                    and not flags.estimator_diverged
                    and not flags.geofence_breached
                    and not flags.crashed
                    and not flags.battery_low
                )

                request = None
                if logic.finished(t):
                    if machine.mode is not FlightMode.HOLD:
                        request = ModeRequest(FlightMode.HOLD, CommandSource.AUTONOMY)
                elif machine.mode is FlightMode.IDLE:
                    request = ModeRequest(logic.mode_target, logic.request_source)
                elif (
                    machine.mode is FlightMode.HOLD
                    and safety_clear
                    and not stale
                    and (t - machine.state.entered_at) >= HOLD_RESUME_COOLDOWN_S
                ):
                    # resume the mission once whatever forced the hold has
                    # cleared; teleop resumes as soon as twists are fresh
                    request = ModeRequest(logic.mode_target, logic.request_source)
                elif (
                    isinstance(logic, _TeleopLogic)
                    and machine.mode is FlightMode.HOLD
                    and not stale
                ):
                    request = ModeRequest(FlightMode.TWIST, CommandSource.OPERATOR)

                machine.step(request, flags, t)
                if machine.mode is not prev_mode:
                    if machine.mode is FlightMode.HOLD:
                        hold_pos = est_pos.copy()
                        hold_yaw = est_yaw
                    if machine.mode is FlightMode.LAND:
                        hold_pos = est_pos.copy()
                        hold_yaw = est_yaw
                        land_entry_z = float(est_pos[2])
                    if machine.mode is logic.mode_target and prev_mode in (
                        FlightMode.HOLD,
                        FlightMode.LAND,
                    ):
                        logic.on_resume(t)
                    prev_mode = machine.mode

                if state.crashed:
                    events(t, "crash", position=[round(float(x), 3) for x in state.position])
                    end_reason = "crash"
                    break
                if est.diverged:
                    events(t, "estimator_divergence", sigma_m=round(est.position_sigma_m, 4))
                    end_reason = "estimator_divergence"
                    break
                if (
                    logic.finished(t)
                    and machine.mode is FlightMode.HOLD
                    and (t - machine.state.entered_at) >= HOLD_SETTLE_S
                ):
                    end_reason = "mission_complete"
                    complete = True
                    break

                mission_ref = None
                if machine.mode in ACTIVE_MODES:
                    mission_ref = logic.reference(t, est_pos, est_yaw)
                    ref = mission_ref
                elif machine.mode is FlightMode.HOLD:
                    ref = hold_reference(hold_pos, hold_yaw, t)
                elif machine.mode is FlightMode.LAND:
                    z = max(
                        LAND_HOVER_ALT_M,
                        land_entry_z - LAND_DESCENT_MPS * (t - machine.state.entered_at),
                    )
                    target = np.array([hold_pos[0], hold_pos[1], z])
                    ref = hold_reference(target, hold_yaw, t)
                else:
                    ref = None  # IDLE: motors off

                if ref is not None:
                    ref = bound_reference(ref, bounds)
                    sp = track(ref, est.state, gains, vehicle)
                    cmd = ActuatorCommand(t, sp.collective_thrust, sp.body_rate)
                else:
                    cmd = ActuatorCommand(t, 0.0, np.zeros(3))

                log.append(
                    TOPIC_TRUE_STATE, t,
                    PoseRecord(t, state.position, state.velocity, yaw_of(state.attitude)).encode(),
                )
                log.append(TOPIC_ESTIMATE, t, PoseRecord(t, est_pos, est_vel, est_yaw).encode())
                if mission_ref is not None:
                    log.append(
                        TOPIC_REFERENCE, t,
                        PoseRecord(
                            t, mission_ref.position, mission_ref.velocity, mission_ref.yaw
                        ).encode(),
                    )

                health = 0
                if est.healthy:
                    health |= HEALTH_ESTIMATOR_OK
                if flags.battery_low:
                    health |= HEALTH_BATTERY_LOW
                if flags.crashed:
                    health |= HEALTH_CRASHED
                if flags.geofence_breached:
                    health |= HEALTH_FENCE_BREACH
                if flags.twist_command_stale:
                    health |= HEALTH_TWIST_STALE
                sender.publish_state(
                    StateSample(
                        stamp=t,
                        position=est_pos,
                        velocity=est_vel,
                        attitude=est.state.attitude,
                        mode=machine.mode,
                        health_bits=health,
                        battery_fraction=_battery_fraction(t),
                        position_sigma_m=est.position_sigma_m,
                    ),
                    t,
                )
                if i % COVERAGE_EVERY_STEPS == 0:
                    cov = coverage(grid, t)
                    sender.publish_coverage(
                        CoverageSample(
                            stamp=t,
                            unknown=cov.unknown_fraction,
                            free=cov.free_fraction,
                            occupied=cov.occupied_fraction,
                        ),
                        t,
                    )
                drain(t)

                if realtime:
                    lag = (wall_start + t) - time.monotonic()
                    if lag > 0:
                        time.sleep(lag)

            if i == n_steps:
                if logic.ends_at_cap:
                    complete = True
                break

            prev_state = state
            state = step(world, state, cmd, cfg)

            if (i + 1) % IMU_EVERY_STEPS == 0:
                est.handle_imu(imu.sample(prev_state, state, rng))

            if (i + 1) % LIDAR_EVERY_STEPS == 0 and not state.crashed:
                scan = lidar.sample(world, state, rng)
                if surface is not None and len(surface) > 0:
                    est.handle_scan(scan, surface)
                pose = SE3.from_quat_pos(est.state.attitude, est.state.position)
                deltas = grid.insert_scan(pose, scan)
                publisher.note_changes(deltas)
                if state.t - last_surface_t >= SURFACE_REBUILD_PERIOD_S:
                    surface = SurfaceModel.from_grid(grid)
                    last_surface_t = state.t

    except ControlFault as exc:
        end_reason = "control_fault"
        events(t, "fault", what="control", detail=str(exc))
    except SimulationFault as exc:
        end_reason = "simulation_fault"
        events(t, "fault", what="simulation", detail=str(exc))

    events(t, "mission_end", reason=end_reason, complete=complete)
    cov = coverage(grid, t)
    sender.publish_coverage(
        CoverageSample(
            stamp=t, unknown=cov.unknown_fraction,
            free=cov.free_fraction, occupied=cov.occupied_fraction,
        ),
        t,
    )

    # final map sync: one keyframe plus every pending delta, so a replay
    # consumer reconstructs the exact final grid
    publisher.request_keyframe()
    t_drain = t
    deadline = t + DRAIN_MAX_S
    while t_drain < deadline:
        t_drain += DRAIN_STEP_S
        drain(t_drain)
        if publisher.idle and not sender.backlog:
            drain(t_drain + DRAIN_STEP_S)
            break
    log.close()

    wall_s = time.monotonic() - wall_start
    report, artifacts = compute_report(
        log_dir, out_dir=out, render=render, scenario_name=scenario.name, wall_s=wall_s
    )
    report_path = out / "report.json"
    report_path.write_text(report.to_json())
    return MissionResult(
        report=report, out_dir=out, log_dir=log_dir,
        report_path=report_path, artifacts=artifacts,
    )
