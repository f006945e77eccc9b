"""Error-state EKF over position, velocity, attitude, and IMU biases.

The nominal state carries the quaternion; the 15-dimensional error state
(position, velocity, attitude, accel bias, gyro bias errors, in that
order) carries the covariance. Attitude error is a body-frame rotation
vector applied on the right of the nominal quaternion.

Propagation consumes integrating-IMU samples: the gyro word is the mean
rotation rate and the accel word the mean specific force (expressed in
the frame at the sample stamp) over the sample interval, so with perfect
sensors the nominal propagation reproduces the simulator's attitude and
velocity exactly and position to trapezoid accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import GRAVITY, hat, quat_exp, quat_multiply, quat_normalize, quat_to_matrix

ERROR_DIM = 15
_POS = slice(0, 3)
_VEL = slice(3, 6)
_ATT = slice(6, 9)
_BA = slice(9, 12)
_BG = slice(12, 15)


@dataclass
class NavState:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    covariance: np.ndarray = field(default_factory=lambda: np.eye(ERROR_DIM) * 1e-6)

    def copy(self) -> "NavState":
        return NavState(
            self.t,
            self.position.copy(),
            self.velocity.copy(),
            self.attitude.copy(),
            self.accel_bias.copy(),
            self.gyro_bias.copy(),
            self.covariance.copy(),
        )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.position))
            and np.all(np.isfinite(self.velocity))
            and np.all(np.isfinite(self.attitude))
            and np.all(np.isfinite(self.covariance))
        )


@dataclass
class EstimatorConfig:
    gravity_mps2: float = GRAVITY
    # process noise (continuous densities, applied as sigma^2 * dt)
    accel_noise: float = 2.0e-3 * np.sqrt(200.0)
    gyro_noise: float = 1.7e-4 * np.sqrt(200.0)
    accel_bias_walk: float = 1.0e-4
    gyro_bias_walk: float = 1.0e-5
    # registration
    max_iterations: int = 10
    residual_tol_m: float = 1e-4
    plane_neighbor_radius_vox: float = 2.0
    min_plane_neighbors: int = 5
    degeneracy_ratio: float = 1e-3
    min_matches: int = 40
    max_match_dist_m: float = 0.6
    converged_residual_m: float = 0.10
    # robust loss: residuals beyond the Huber scale lose influence linearly;
    # the scale tracks the residual median so large consistent offsets are
    # still recovered in full steps
    huber_scale_factor: float = 3.0
    huber_scale_floor_m: float = 0.05
    # scans where most points find no correspondence look into unmapped
    # space; their matched minority is dominated by through-surface pairs,
    # so the pipeline coasts instead of updating
    min_match_fraction: float = 0.9
    # a correspondence must see its oriented plane from the observed side
    min_view_cos: float = 0.0
    # measurement update
    chi2_gate: float = 22.46  # 99.9th percentile, 6 degrees of freedom
    meas_trans_sigma_per_residual: float = 1.5
    meas_rot_sigma_per_residual: float = 1.0
    meas_residual_floor_m: float = 0.01
    degenerate_axis_variance: float = 1e6
    # health thresholds
    diverged_pos_sigma_m: float = 1.0


def symmetrized(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def propagate(state: NavState, imu, cfg: EstimatorConfig | None = None) -> NavState:
    """Strapdown propagation by one IMU sample.

    Raises ValueError on a non-monotonic stamp; callers count and drop.
    """
    cfg = cfg or EstimatorConfig()
    dt = imu.stamp_master - state.t
    if dt <= 0.0:
        raise ValueError("imu sample does not advance time")

    w = imu.gyro - state.gyro_bias
    f = imu.accel - state.accel_bias

    attitude = quat_normalize(quat_multiply(state.attitude, quat_exp(w * dt)))
    rot = quat_to_matrix(attitude)
    accel_world = rot @ f + np.array([0.0, 0.0, -cfg.gravity_mps2])
    velocity = state.velocity + accel_world * dt
    position = state.position + 0.5 * (state.velocity + velocity) * dt

    # first-order error-state transition
    fmat = np.eye(ERROR_DIM)
    fmat[_POS, _VEL] = np.eye(3) * dt
    fmat[_VEL, _ATT] = -rot @ hat(f) * dt
    fmat[_VEL, _BA] = -rot * dt
    fmat[_ATT, _ATT] = np.eye(3) - hat(w) * dt
    fmat[_ATT, _BG] = -np.eye(3) * dt

    q = np.zeros(ERROR_DIM)
    q[_VEL] = cfg.accel_noise**2 * dt
    q[_ATT] = cfg.gyro_noise**2 * dt
    q[_BA] = cfg.accel_bias_walk**2 * dt
    q[_BG] = cfg.gyro_bias_walk**2 * dt
    covariance = symmetrized(fmat @ state.covariance @ fmat.T + np.diag(q))

    return NavState(
        t=imu.stamp_master,
        position=position,
        velocity=velocity,
        attitude=attitude,
        accel_bias=state.accel_bias.copy(),
        gyro_bias=state.gyro_bias.copy(),
        covariance=covariance,
    )


@dataclass
class UpdateOutcome:
    state: NavState
    applied: bool
    mahalanobis: float


def update(state: NavState, reg, cfg: EstimatorConfig | None = None) -> UpdateOutcome:
    """EKF measurement update from a converged registration result.

    The measurement is the registration's pose correction: a world-frame
    translation plus a world-frame rotation about the vehicle position, so
    the rotation part never moves the position estimate. Measurement noise
    scales with the mean point-to-plane residual, and directions the
    registration flagged degenerate get near-infinite variance so they
    cannot tighten the covariance.
    """
    cfg = cfg or EstimatorConfig()
    rot = quat_to_matrix(state.attitude)

    z = np.concatenate([reg.translation, reg.rotation_world])
    hmat = np.zeros((6, ERROR_DIM))
    hmat[0:3, _POS] = np.eye(3)
    hmat[3:6, _ATT] = rot  # body-frame attitude error seen as a world rotation

    resid = max(float(reg.mean_residual_m), cfg.meas_residual_floor_m)
    sig_t = cfg.meas_trans_sigma_per_residual * resid
    sig_r = cfg.meas_rot_sigma_per_residual * resid
    if not (np.isfinite(sig_t) and np.isfinite(sig_r)):
        return UpdateOutcome(state.copy(), applied=False, mahalanobis=0.0)
    vmat = np.diag([sig_t**2] * 3 + [sig_r**2] * 3)
    for axis in reg.degenerate_axes:
        vmat += cfg.degenerate_axis_variance * np.outer(axis, axis)

    smat = hmat @ state.covariance @ hmat.T + vmat
    sinv = np.linalg.inv(smat)
    m2 = float(z @ sinv @ z)
    if m2 > cfg.chi2_gate:
        return UpdateOutcome(state.copy(), applied=False, mahalanobis=m2)

    kmat = state.covariance @ hmat.T @ sinv
    dx = kmat @ z
    ikh = np.eye(ERROR_DIM) - kmat @ hmat
    covariance = symmetrized(ikh @ state.covariance @ ikh.T + kmat @ vmat @ kmat.T)

    out = NavState(
        t=state.t,
        position=state.position + dx[_POS],
        velocity=state.velocity + dx[_VEL],
        attitude=quat_normalize(quat_multiply(state.attitude, quat_exp(dx[_ATT]))),
        accel_bias=state.accel_bias + dx[_BA],
        gyro_bias=state.gyro_bias + dx[_BG],
        covariance=covariance,
    )
    return UpdateOutcome(out, applied=True, mahalanobis=m2)
