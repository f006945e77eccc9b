"""IMU and LiDAR measurement models.

The IMU reports body-frame specific force (acceleration minus gravity) and
body rates, each corrupted by a slowly walking bias and white noise whose
per-sample sigma is density * sqrt(rate). Both truth terms are interval
averages taken by differencing consecutive vehicle states, the output of an
integrating (delta-velocity, delta-angle) sensor: the sample describes
exactly what the vehicle did between the previous sample and this one.

The LiDAR fires a fixed azimuth/elevation lattice that rotates by the golden
angle each scan, so successive scans interleave instead of re-hitting the
same directions. Each ray is intersected with every obstacle box and the
world bounds; the nearest surface wins. Ranges beyond the configured maximum
are flagged invalid but keep their slot so a scan always has a fixed ray
count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import quat_conjugate, quat_log, quat_multiply, quat_rotate
from .config import SimConfig
from .dynamics import VehicleState
from .world import WorldModel

GOLDEN_ANGLE_RAD = np.pi * (3.0 - np.sqrt(5.0))


@dataclass
class ImuSample:
    stamp_sensor: float
    stamp_master: float
    accel: np.ndarray   # m/s^2, body frame, specific force
    gyro: np.ndarray    # rad/s, body frame


@dataclass
class LidarScan:
    stamp_sensor: float
    stamp_master: float
    points: np.ndarray        # (n, 3) sensor frame, meters
    valid: np.ndarray         # (n,) bool, False where range exceeded max
    ranges: np.ndarray        # (n,) meters as measured (pre-clamp for invalid)
    directions: np.ndarray    # (n, 3) unit rays in sensor frame


class ImuModel:
    """Stateful IMU: carries the bias random walk between samples."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.accel_bias = np.zeros(3)
        self.gyro_bias = np.zeros(3)
        self._last_stamp: float | None = None

    def sample(
        self,
        prev: VehicleState,
        curr: VehicleState,
        rng: np.random.Generator,
        stamp_sensor: float | None = None,
        stamp_master: float | None = None,
    ) -> ImuSample:
        dt = curr.t - prev.t
        if dt <= 0.0:
            raise ValueError("imu sampling needs strictly increasing state times")
        noise = self.cfg.imu_noise
        rate = self.cfg.imu_rate_hz

        accel_world = (curr.velocity - prev.velocity) / dt
        gravity = np.array([0.0, 0.0, -self.cfg.gravity_mps2])
        # accelerometers measure specific force: rotate (a - g) into the body
        f_body = quat_rotate(curr.attitude, accel_world - gravity, inverse=True)
        # mean rotation rate over the interval: the delta-angle between the
        # two attitudes divided by dt
        w_body = (
            quat_log(quat_multiply(quat_conjugate(prev.attitude), curr.attitude)) / dt
        )

        sample_dt = 1.0 / rate
        self.accel_bias = self.accel_bias + noise.accel_bias_walk * np.sqrt(
            sample_dt
        ) * rng.standard_normal(3)
        self.gyro_bias = self.gyro_bias + noise.gyro_bias_walk * np.sqrt(
            sample_dt
        ) * rng.standard_normal(3)

        accel = (
            f_body
            + self.accel_bias
            + noise.accel_density * np.sqrt(rate) * rng.standard_normal(3)
        )
        gyro = (
            w_body
            + self.gyro_bias
            + noise.gyro_density * np.sqrt(rate) * rng.standard_normal(3)
        )
        ss = curr.t if stamp_sensor is None else stamp_sensor
        sm = curr.t if stamp_master is None else stamp_master
        if self._last_stamp is not None and ss <= self._last_stamp:
            raise ValueError("imu stamps must be strictly increasing")
        self._last_stamp = ss
        return ImuSample(ss, sm, accel, gyro)


def _ray_grid(cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Base azimuth/elevation lattice covering the configured FOV."""
    n = cfg.lidar_rays_per_scan
    # pick ring count so the lattice is roughly square in angle
    span_az = np.deg2rad(cfg.lidar_fov_az_deg)
    span_el = np.deg2rad(cfg.lidar_fov_el_deg)
    n_el = max(1, int(round(np.sqrt(n * span_el / span_az))))
    n_az = max(1, n // n_el)
    els = (-0.5 * span_el) + (np.arange(n_el) + 0.5) * (span_el / n_el)
    azs = (np.arange(n_az) + 0.5) * (span_az / n_az) - 0.5 * span_az
    az_grid, el_grid = np.meshgrid(azs, els)
    # stagger alternate rings by half a step so columns do not align
    az_grid = az_grid + (np.arange(n_el)[:, None] % 2) * (0.5 * span_az / n_az)
    return az_grid.ravel(), el_grid.ravel()


class LidarModel:
    """Stateful LiDAR: scan counter drives the per-scan lattice rotation."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.scan_index = 0
        self._base_az, self._base_el = _ray_grid(cfg)
        self._last_stamp: float | None = None

    def ray_directions(self, scan_index: int) -> np.ndarray:
        az = self._base_az + scan_index * GOLDEN_ANGLE_RAD
        el = self._base_el
        ce = np.cos(el)
        return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=1)

    def sample(
        self,
        world: WorldModel,
        state: VehicleState,
        rng: np.random.Generator | None = None,
        stamp_sensor: float | None = None,
        stamp_master: float | None = None,
    ) -> LidarScan:
        if state.crashed:
            raise ValueError("lidar sampling on a crashed vehicle")
        cfg = self.cfg
        dirs_body = self.ray_directions(self.scan_index)
        self.scan_index += 1
        dirs_world = dirs_body @ np.asarray(
            _rot_matrix(state.attitude)
        ).T  # rotate rows into world
        origin = state.position

        ranges = cast_rays(world, origin, dirs_world)
        noisy = ranges.copy()
        if rng is not None and cfg.lidar_range_noise_m > 0.0:
            noisy = noisy + cfg.lidar_range_noise_m * rng.standard_normal(len(noisy))
        valid = noisy <= cfg.lidar_max_range_m
        points = dirs_body * noisy[:, None]

        ss = state.t if stamp_sensor is None else stamp_sensor
        sm = state.t if stamp_master is None else stamp_master
        if self._last_stamp is not None and ss <= self._last_stamp:
            raise ValueError("lidar stamps must be strictly increasing")
        self._last_stamp = ss
        return LidarScan(ss, sm, points, valid, noisy, dirs_body)


def _rot_matrix(q: np.ndarray) -> np.ndarray:
    from ..geometry import quat_to_matrix

    return quat_to_matrix(q)


def cast_rays(world: WorldModel, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Nearest-surface range for each world-frame ray direction.

    Surfaces are the interiors of the bounds walls and the exteriors of the
    obstacle boxes. Rays that hit nothing (origin outside bounds) return inf.
    """
    n = len(dirs)
    ranges = np.full(n, np.inf)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(dirs != 0.0, 1.0 / dirs, np.inf)

        lo, hi = world.bounds.lo, world.bounds.hi
        t1 = (lo[None, :] - origin[None, :]) * inv
        t2 = (hi[None, :] - origin[None, :]) * inv
        tmin = np.minimum(t1, t2)
        tmax = np.maximum(t1, t2)
        # parallel rays: slab test degenerates, substitute +-inf per component
        par = dirs == 0.0
        inside = (origin[None, :] >= lo[None, :]) & (origin[None, :] <= hi[None, :])
        tmin = np.where(par, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(par, np.where(inside, np.inf, -np.inf), tmax)
        t_enter = tmin.max(axis=1)
        t_exit = tmax.min(axis=1)
        hit_bounds = (t_exit >= np.maximum(t_enter, 0.0)) & (t_exit >= 0.0)
        ranges = np.where(hit_bounds, t_exit, np.inf)

        for box in world.obstacles:
            t1 = (box.lo[None, :] - origin[None, :]) * inv
            t2 = (box.hi[None, :] - origin[None, :]) * inv
            tmin = np.minimum(t1, t2)
            tmax = np.maximum(t1, t2)
            b_inside = (origin[None, :] >= box.lo[None, :]) & (
                origin[None, :] <= box.hi[None, :]
            )
            tmin = np.where(par, np.where(b_inside, -np.inf, np.inf), tmin)
            tmax = np.where(par, np.where(b_inside, np.inf, -np.inf), tmax)
            t_enter = tmin.max(axis=1)
            t_exit = tmax.min(axis=1)
            hit = (t_enter <= t_exit) & (t_exit >= 0.0) & (t_enter >= 0.0)
            ranges = np.where(hit & (t_enter < ranges), t_enter, ranges)

    return ranges
