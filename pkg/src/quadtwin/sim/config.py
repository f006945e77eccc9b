"""Simulation configuration.

Defaults follow the vehicle this twin mirrors: a sub-500 mm indoor quad with
a 3.5:1 static thrust-to-weight ratio and a 360 x 59 degree, 50 m LiDAR.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from ..geometry import GRAVITY


@dataclass
class ImuNoise:
    """White-noise densities (per sqrt(Hz)) and bias random-walk rates."""

    accel_density: float = 2.0e-3   # m/s^2 / sqrt(Hz)
    gyro_density: float = 1.7e-4    # rad/s / sqrt(Hz)
    accel_bias_walk: float = 1.0e-4  # m/s^3 / sqrt(Hz)
    gyro_bias_walk: float = 1.0e-5   # rad/s^2 / sqrt(Hz)

    @classmethod
    def zero(cls) -> "ImuNoise":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass
class SimConfig:
    timestep_s: float = 0.0025
    mass_kg: float = 1.0
    inertia_diag: tuple[float, float, float] = (0.01, 0.01, 0.017)
    # 3.5:1 thrust-to-weight at default mass
    max_thrust_n: float = 3.5 * GRAVITY
    gravity_mps2: float = GRAVITY
    drag_coeff: float = 0.0          # N per m/s, linear; 0 disables drag
    rate_loop_tau_s: float = 0.05    # first-order body-rate tracking constant
    collision_radius_m: float = 0.25

    imu_rate_hz: float = 200.0
    lidar_rate_hz: float = 10.0
    lidar_rays_per_scan: int = 1536
    lidar_fov_az_deg: float = 360.0
    lidar_fov_el_deg: float = 59.0
    lidar_max_range_m: float = 50.0
    lidar_range_noise_m: float = 0.01

    imu_noise: ImuNoise = field(default_factory=ImuNoise)
    # per-sensor clock drift, parts per million of master time
    clock_drift_ppm: dict[str, float] = field(
        default_factory=lambda: {"imu": 0.0, "lidar": 50.0}
    )
    clock_offset_s: dict[str, float] = field(
        default_factory=lambda: {"imu": 0.0, "lidar": 0.002}
    )
    pps_enabled: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.timestep_s <= 0.0:
            raise ValueError("timestep_s must be positive")
        if self.lidar_max_range_m <= 0.0:
            raise ValueError("lidar_max_range_m must be positive")
        twr = self.max_thrust_n / (self.mass_kg * self.gravity_mps2)
        if twr < 1.0:
            raise ValueError(f"vehicle cannot hover: thrust-to-weight {twr:.3f} < 1")

    @property
    def hover_thrust_n(self) -> float:
        return self.mass_kg * self.gravity_mps2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "imu_noise" in d and isinstance(d["imu_noise"], dict):
            d["imu_noise"] = ImuNoise(**d["imu_noise"])
        if "inertia_diag" in d:
            d["inertia_diag"] = tuple(d["inertia_diag"])
        return cls(**d)
