"""Minimum-snap piecewise polynomial trajectories.

Each segment is an order-7 polynomial in normalized time tau = t/T (the
normalization keeps the constraint system well conditioned for any segment
duration). The integrated squared snap is minimized subject to waypoint
interpolation, C3 continuity at the knots, and boundary derivatives, solved
per axis as one KKT system.

Feasibility is reached by uniform time dilation: if the 1 kHz sampling comb
finds speed or acceleration over the limits, all segment durations are scaled
up by the analytically required factor and the system is re-solved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ORDER = 7
NCOEF = ORDER + 1
TRAJECTORY_SCHEMA_VERSION = 1


@dataclass
class ReferenceSample:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray
    yaw: float
    yaw_rate: float


@dataclass
class MotionLimits:
    v_max: float = 6.0
    a_max: float = 5.0

    def __post_init__(self):
        if self.v_max <= 0 or self.a_max <= 0:
            raise ValueError("limits must be positive")


class TrajectorySolveError(RuntimeError):
    """Constraint system singular or boundary conditions infeasible."""


def _dcoef(k: int, i: int) -> float:
    """i!/(i-k)! — factor of the k-th derivative of tau^i."""
    out = 1.0
    for m in range(k):
        out *= i - m
    return out if i >= k else 0.0


def _row(k: int, tau: float, T: float) -> np.ndarray:
    """Constraint row for the k-th time derivative at normalized position tau."""
    r = np.zeros(NCOEF)
    for i in range(k, NCOEF):
        r[i] = _dcoef(k, i) * tau ** (i - k)
    return r / T**k


def _snap_gram() -> np.ndarray:
    """Gram matrix of integrated squared snap over tau in [0, 1]."""
    q = np.zeros((NCOEF, NCOEF))
    for i in range(4, NCOEF):
        for j in range(4, NCOEF):
            q[i, j] = _dcoef(4, i) * _dcoef(4, j) / (i + j - 7)
    return q


_QSNAP = _snap_gram()


@dataclass
class PolyTrajectory:
    coeffs: np.ndarray           # (segments, NCOEF, 3), normalized time
    durations: np.ndarray        # (segments,) seconds
    v_max: float
    a_max: float
    yaw_policy: str = "velocity_aligned"   # or "fixed"
    fixed_yaw: float = 0.0
    yaw_rate_max: float = 1.5

    @property
    def total_time(self) -> float:
        return float(self.durations.sum())

    def _locate(self, t: float) -> tuple[int, float]:
        t = min(max(t, 0.0), self.total_time)
        acc = 0.0
        for s, T in enumerate(self.durations):
            if t <= acc + T or s == len(self.durations) - 1:
                return s, (t - acc) / T
            acc += T
        raise AssertionError("unreachable")

    def _eval(self, t: float, k: int) -> np.ndarray:
        s, tau = self._locate(t)
        tau = min(max(tau, 0.0), 1.0)
        row = _row(k, tau, float(self.durations[s]))
        return row @ self.coeffs[s]

    def sample(self, t: float) -> ReferenceSample:
        pos = self._eval(t, 0)
        vel = self._eval(t, 1)
        acc = self._eval(t, 2)
        jrk = self._eval(t, 3)
        yaw, yaw_rate = self._yaw_at(t, vel, acc)
        return ReferenceSample(t, pos, vel, acc, jrk, yaw, yaw_rate)

    def _yaw_at(self, t: float, vel: np.ndarray, acc: np.ndarray) -> tuple[float, float]:
        if self.yaw_policy == "fixed":
            return self.fixed_yaw, 0.0
        speed_sq = vel[0] ** 2 + vel[1] ** 2
        if speed_sq < 0.04:  # below 0.2 m/s horizontal: hold heading
            return self._slow_yaw(t), 0.0
        yaw = float(np.arctan2(vel[1], vel[0]))
        # d/dt atan2(vy, vx) = (vx*ay - vy*ax) / (vx^2 + vy^2)
        rate = float((vel[0] * acc[1] - vel[1] * acc[0]) / speed_sq)
        rate = float(np.clip(rate, -self.yaw_rate_max, self.yaw_rate_max))
        return yaw, rate

    def _slow_yaw(self, t: float) -> float:
        # nearest time with usable horizontal speed, searched coarsely
        for dt in np.arange(0.05, self.total_time, 0.05):
            for tt in (t - dt, t + dt):
                if 0.0 <= tt <= self.total_time:
                    v = self._eval(tt, 1)
                    if v[0] ** 2 + v[1] ** 2 >= 0.04:
                        return float(np.arctan2(v[1], v[0]))
        return self.fixed_yaw

    def scaled_in_time(self, k: float) -> "PolyTrajectory":
        """Pure time dilation: same geometric path, durations scaled by k.

        Sampled speed scales exactly by 1/k and acceleration by 1/k^2 because
        the normalized-time coefficients are reinterpreted, not re-solved.
        """
        out = PolyTrajectory(
            coeffs=self.coeffs.copy(),
            durations=self.durations * k,
            v_max=self.v_max,
            a_max=self.a_max,
            yaw_policy=self.yaw_policy,
            fixed_yaw=self.fixed_yaw,
            yaw_rate_max=self.yaw_rate_max,
        )
        return out

    def comb_extremes(self, rate_hz: float = 1000.0) -> tuple[float, float]:
        """Max sampled |v| and |a| on a fixed-rate comb plus the endpoints."""
        ts = np.arange(0.0, self.total_time, 1.0 / rate_hz)
        ts = np.append(ts, self.total_time)
        vmax = 0.0
        amax = 0.0
        for t in ts:
            v = float(np.linalg.norm(self._eval(t, 1)))
            a = float(np.linalg.norm(self._eval(t, 2)))
            vmax = max(vmax, v)
            amax = max(amax, a)
        return vmax, amax


@dataclass
class BoundaryState:
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    jerk: np.ndarray = field(default_factory=lambda: np.zeros(3))


def _collapse_duplicates(waypoints: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    keep = [0]
    for i in range(1, len(waypoints)):
        if np.linalg.norm(waypoints[i] - waypoints[keep[-1]]) > tol:
            keep.append(i)
    return waypoints[keep]


def trapezoidal_times(
    waypoints: np.ndarray, limits: MotionLimits, min_duration: float = 0.12
) -> np.ndarray:
    """Per-segment durations from a trapezoidal speed profile over each leg."""
    out = []
    for i in range(len(waypoints) - 1):
        d = float(np.linalg.norm(waypoints[i + 1] - waypoints[i]))
        v, a = limits.v_max, limits.a_max
        if d < v * v / a:
            t = 2.0 * np.sqrt(d / a)
        else:
            t = d / v + v / a
        out.append(max(t, min_duration))
    return np.asarray(out)


def _solve_axis(
    waypoints_1d: np.ndarray,
    durations: np.ndarray,
    b0: tuple[float, float, float],
    b1: tuple[float, float, float],
) -> np.ndarray:
    """Solve one axis: minimize snap subject to equality constraints."""
    S = len(durations)
    nvar = S * NCOEF

    rows = []
    rhs = []

    def add(seg: int, k: int, tau: float, value: float):
        r = np.zeros(nvar)
        r[seg * NCOEF : (seg + 1) * NCOEF] = _row(k, tau, float(durations[seg]))
        rows.append(r)
        rhs.append(value)

    for s in range(S):
        add(s, 0, 0.0, waypoints_1d[s])
        add(s, 0, 1.0, waypoints_1d[s + 1])
    for s in range(S - 1):
        for k in (1, 2, 3):
            r = np.zeros(nvar)
            r[s * NCOEF : (s + 1) * NCOEF] = _row(k, 1.0, float(durations[s]))
            r[(s + 1) * NCOEF : (s + 2) * NCOEF] = -_row(k, 0.0, float(durations[s + 1]))
            rows.append(r)
            rhs.append(0.0)
    for k, v in zip((1, 2, 3), b0):
        add(0, k, 0.0, v)
    for k, v in zip((1, 2, 3), b1):
        add(S - 1, k, 1.0, v)

    A = np.asarray(rows)
    b = np.asarray(rhs)
    m = len(rows)

    Q = np.zeros((nvar, nvar))
    for s in range(S):
        Q[s * NCOEF : (s + 1) * NCOEF, s * NCOEF : (s + 1) * NCOEF] = _QSNAP / float(
            durations[s]
        ) ** 7

    kkt = np.zeros((nvar + m, nvar + m))
    kkt[:nvar, :nvar] = 2.0 * Q
    kkt[:nvar, nvar:] = A.T
    kkt[nvar:, :nvar] = A
    full_rhs = np.concatenate([np.zeros(nvar), b])
    try:
        sol = np.linalg.solve(kkt, full_rhs)
    except np.linalg.LinAlgError as e:
        raise TrajectorySolveError(
            f"singular constraint system: {S} segments, {m} constraints ({e})"
        ) from e
    if not np.all(np.isfinite(sol)):
        raise TrajectorySolveError("non-finite trajectory solution")
    return sol[:nvar].reshape(S, NCOEF)


def generate_trajectory(
    waypoints: np.ndarray,
    limits: MotionLimits,
    start: BoundaryState | None = None,
    end: BoundaryState | None = None,
    durations: np.ndarray | None = None,
    yaw_policy: str = "velocity_aligned",
    fixed_yaw: float = 0.0,
    max_dilations: int = 12,
) -> PolyTrajectory:
    waypoints = _collapse_duplicates(np.asarray(waypoints, dtype=float))
    if len(waypoints) < 2:
        raise ValueError("need at least two distinct waypoints")
    start = start or BoundaryState()
    end = end or BoundaryState()
    if np.linalg.norm(start.velocity) > limits.v_max or np.linalg.norm(
        end.velocity
    ) > limits.v_max:
        raise TrajectorySolveError("boundary velocity already exceeds v_max")

    if durations is None:
        durations = trapezoidal_times(waypoints, limits)
    durations = np.asarray(durations, dtype=float)

    def solve(durs: np.ndarray) -> PolyTrajectory:
        coeffs = np.stack(
            [
                _solve_axis(
                    waypoints[:, ax],
                    durs,
                    (start.velocity[ax], start.acceleration[ax], start.jerk[ax]),
                    (end.velocity[ax], end.acceleration[ax], end.jerk[ax]),
                )
                for ax in range(3)
            ],
            axis=2,
        )
        return PolyTrajectory(
            coeffs=coeffs,
            durations=durs.copy(),
            v_max=limits.v_max,
            a_max=limits.a_max,
            yaw_policy=yaw_policy,
            fixed_yaw=fixed_yaw,
        )

    traj = solve(durations)
    for _ in range(max_dilations):
        vmax, amax = traj.comb_extremes()
        kv = vmax / limits.v_max
        ka = np.sqrt(amax / limits.a_max) if amax > 0 else 0.0
        k = max(kv, ka)
        if k <= 1.0 + 1e-4:
            return traj
        durations = durations * (k * 1.001)
        traj = solve(durations)
    raise TrajectorySolveError("time dilation failed to reach feasibility")


# ---------------------------------------------------------------------------


def check_trajectory(grid, traj: PolyTrajectory, trav=None, clearance_m: float = 0.35):
    """First time at which the sampled trajectory leaves free inflated space.

    Returns None when clear. Sampling spacing: voxel_size / (2 * v_max).
    """
    from .search import traversable_mask

    if trav is None:
        trav = traversable_mask(grid, clearance_m)
    dt = grid.params.voxel_size / (2.0 * traj.v_max)
    ts = np.arange(0.0, traj.total_time + dt, dt)
    for t in ts:
        tt = min(float(t), traj.total_time)
        idx = grid.world_to_index(traj._eval(tt, 0))[0]
        if not grid.in_grid(idx)[0] or not trav[tuple(idx)]:
            return tt
    return None


def save_trajectory(traj: PolyTrajectory, path: str | Path) -> None:
    doc = {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "v_max": traj.v_max,
        "a_max": traj.a_max,
        "yaw_policy": traj.yaw_policy,
        "fixed_yaw": traj.fixed_yaw,
        "yaw_rate_max": traj.yaw_rate_max,
        "durations": traj.durations.tolist(),
        "coefficients": traj.coeffs.tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1))


def load_trajectory(path: str | Path) -> PolyTrajectory:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != TRAJECTORY_SCHEMA_VERSION:
        raise ValueError(f"unsupported trajectory schema: {doc.get('schema_version')!r}")
    return PolyTrajectory(
        coeffs=np.asarray(doc["coefficients"], dtype=float),
        durations=np.asarray(doc["durations"], dtype=float),
        v_max=float(doc["v_max"]),
        a_max=float(doc["a_max"]),
        yaw_policy=doc["yaw_policy"],
        fixed_yaw=float(doc["fixed_yaw"]),
        yaw_rate_max=float(doc.get("yaw_rate_max", 1.5)),
    )
