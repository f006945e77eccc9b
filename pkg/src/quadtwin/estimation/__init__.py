"""LiDAR-inertial state estimation: error-state EKF plus scan-to-map registration."""

from .ekf import (
    ERROR_DIM,
    EstimatorConfig,
    NavState,
    UpdateOutcome,
    propagate,
    symmetrized,
    update,
)
from .pipeline import EstimatorDiagnostics, StateEstimator
from .registration import RegistrationResult, SurfaceModel, register_scan

__all__ = [
    "ERROR_DIM",
    "EstimatorConfig",
    "EstimatorDiagnostics",
    "NavState",
    "RegistrationResult",
    "StateEstimator",
    "SurfaceModel",
    "UpdateOutcome",
    "propagate",
    "register_scan",
    "symmetrized",
    "update",
]
