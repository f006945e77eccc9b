"""Stock reference trajectories: lemniscate and up-down spiral.

Both are built the same way: sample the analytic curve densely, allocate
time from a curvature-aware speed profile (lateral-acceleration bound
plus accelerate/brake ramps at the rest endpoints), fit a minimum-snap
polynomial through waypoints spaced evenly in arc length, then dilate
time uniformly so the sampled peak speed lands exactly on the requested
value. The curves allow 4 rad/s of heading rate because velocity-aligned
yaw on a 2 m circle at 6 m/s turns at about 3 rad/s; clipping the yaw
feedforward below that measurably degrades vertical tracking.
"""

from __future__ import annotations

import numpy as np

from .minsnap_fit import fit_path_trajectory

LEMNISCATE_HALF_WIDTH_M = 4.0
SPIRAL_RADIUS_M = 2.0
SPIRAL_Z_SPAN_M = 2.0
SPIRAL_TURNS_EACH_WAY = 2.0
DEFAULT_PEAK_SPEED_MPS = 6.0

# Arena-frame placement shared by both stock curves.
CURVE_CENTER_XY = (8.0, 6.0)
LEMNISCATE_ALTITUDE_M = 1.6
SPIRAL_BASE_ALTITUDE_M = 1.2


def lemniscate_points(u: np.ndarray, half_width_m: float = LEMNISCATE_HALF_WIDTH_M,
                      center_xy=CURVE_CENTER_XY, altitude_m: float = LEMNISCATE_ALTITUDE_M) -> np.ndarray:
    """Lemniscate of Bernoulli, (x^2+y^2)^2 = a^2 (x^2-y^2), u in [0, 1]."""
    th = 2.0 * np.pi * np.asarray(u, dtype=float)
    s, c = np.sin(th), np.cos(th)
    den = 1.0 + s * s
    x = half_width_m * c / den
    y = half_width_m * s * c / den
    out = np.stack([x + center_xy[0], y + center_xy[1], np.full_like(x, altitude_m)], axis=-1)
    return out


def spiral_points(u: np.ndarray, radius_m: float = SPIRAL_RADIUS_M,
                  z_span_m: float = SPIRAL_Z_SPAN_M, turns_each_way: float = SPIRAL_TURNS_EACH_WAY,
                  center_xy=CURVE_CENTER_XY, base_altitude_m: float = SPIRAL_BASE_ALTITUDE_M) -> np.ndarray:
    """Helix climbing z_span then descending back, u in [0, 1].

    The altitude profile sin^2(pi u) starts and ends at the base altitude
    with zero slope and peaks exactly at base + span at u = 0.5.
    """
    u = np.asarray(u, dtype=float)
    th = 2.0 * np.pi * (2.0 * turns_each_way) * u
    z = base_altitude_m + z_span_m * np.sin(np.pi * u) ** 2
    return np.stack(
        [radius_m * np.cos(th) + center_xy[0], radius_m * np.sin(th) + center_xy[1], z],
        axis=-1,
    )


def lemniscate_trajectory(peak_speed_mps: float = DEFAULT_PEAK_SPEED_MPS):
    return fit_path_trajectory(lemniscate_points, n_waypoints=64, peak_speed_mps=peak_speed_mps)


def spiral_trajectory(peak_speed_mps: float = DEFAULT_PEAK_SPEED_MPS):
    # Odd waypoint count pins a waypoint at the arc-length midpoint, which
    # by symmetry is the apex, so the altitude extreme is interpolated
    # exactly rather than approximated between knots.
    return fit_path_trajectory(spiral_points, n_waypoints=65, peak_speed_mps=peak_speed_mps)


def reference_trajectories(peak_speed_mps: float = DEFAULT_PEAK_SPEED_MPS) -> dict:
    """The stock tracking references, keyed by name."""
    return {
        "lemniscate": lemniscate_trajectory(peak_speed_mps),
        "spiral": spiral_trajectory(peak_speed_mps),
    }
