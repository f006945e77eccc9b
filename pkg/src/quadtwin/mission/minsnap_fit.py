"""Fit a minimum-snap trajectory along an analytic path at a target peak speed."""

from __future__ import annotations

import numpy as np

from ..planning import MotionLimits, PolyTrajectory, generate_trajectory


def _speed_profile(points: np.ndarray, peak_mps: float, lat_accel: float, fwd_accel: float):
    """Arc length and cumulative time along a densely sampled path.

    Speed is capped by the peak, by sqrt(a_lat / curvature), and by
    accelerate/brake ramps from rest at both ends, so the knot timing
    already resembles a flyable profile; a raw uniform allocation makes
    the snap objective ring against the rest boundary conditions.
    """
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s_cum = np.concatenate([[0.0], np.cumsum(seg)])
    length = float(s_cum[-1])
    u = np.linspace(0.0, 1.0, len(points))
    d1 = np.gradient(points, u, axis=0)
    d2 = np.gradient(d1, u, axis=0)
    speed1 = np.linalg.norm(d1, axis=-1)
    kappa = np.linalg.norm(np.cross(d1, d2), axis=-1) / np.maximum(speed1**3, 1e-12)
    v = np.minimum(peak_mps, np.sqrt(lat_accel / np.maximum(kappa, 1e-9)))
    v = np.minimum(v, np.sqrt(2.0 * fwd_accel * np.maximum(s_cum, 1e-6)))
    v = np.minimum(v, np.sqrt(2.0 * fwd_accel * np.maximum(length - s_cum, 1e-6)))
    inv = 1.0 / np.maximum(v, 0.2)
    t_cum = np.concatenate([[0.0], np.cumsum(seg * 0.5 * (inv[1:] + inv[:-1]))])
    return s_cum, t_cum


def fit_path_trajectory(
    path_fn,
    n_waypoints: int,
    peak_speed_mps: float,
    lat_accel_mps2: float = 12.0,
    fwd_accel_mps2: float = 4.0,
    yaw_rate_max: float = 4.0,
    dense_samples: int = 40001,
) -> PolyTrajectory:
    """path_fn(u) -> (len(u), 3) positions for u in [0, 1], rest to rest.

    Waypoints are spaced evenly in arc length; the final uniform time
    dilation puts the sampled peak speed exactly on peak_speed_mps.
    """
    u_dense = np.linspace(0.0, 1.0, dense_samples)
    dense = path_fn(u_dense)
    s_cum, t_cum = _speed_profile(dense, peak_speed_mps, lat_accel_mps2, fwd_accel_mps2)
    s_wp = np.linspace(0.0, s_cum[-1], n_waypoints)
    u_wp = np.interp(s_wp, s_cum, u_dense)
    waypoints = path_fn(u_wp)
    durations = np.diff(np.interp(s_wp, s_cum, t_cum))
    # Fit limits stay loose: the profile already shapes the motion, and
    # the exact peak is pinned by the scaling step below.
    traj = generate_trajectory(
        waypoints,
        MotionLimits(v_max=1.4 * peak_speed_mps, a_max=40.0),
        durations=durations,
    )
    traj.yaw_rate_max = yaw_rate_max
    v_raw, _ = traj.comb_extremes()
    scaled = traj.scaled_in_time(v_raw / peak_speed_mps)
    scaled.yaw_rate_max = yaw_rate_max
    return scaled
