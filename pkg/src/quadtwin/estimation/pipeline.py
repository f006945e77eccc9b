"""Estimator front end: consumes sensor streams, owns the filter state.

Wraps the pure propagate/register/update operations with the bookkeeping
the rest of the stack wants: monotonicity rejection counts, gate counts,
degeneracy diagnostics, and a health verdict the mode supervisor can act
on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import SE3
from .ekf import EstimatorConfig, NavState, propagate, update
from .registration import RegistrationResult, SurfaceModel, register_scan


@dataclass
class EstimatorDiagnostics:
    rejected_imu_samples: int = 0
    skipped_registrations: int = 0
    gated_updates: int = 0
    applied_updates: int = 0
    last_degenerate_axis_count: int = 0
    last_mean_residual_m: float = 0.0

    def as_dict(self) -> dict:
        return {
            "rejected_imu_samples": self.rejected_imu_samples,
            "skipped_registrations": self.skipped_registrations,
            "gated_updates": self.gated_updates,
            "applied_updates": self.applied_updates,
            "last_degenerate_axis_count": self.last_degenerate_axis_count,
            "last_mean_residual_m": self.last_mean_residual_m,
        }


class StateEstimator:
    """Single-consumer estimation pipeline over time-ordered sensor queues."""

    def __init__(self, initial: NavState, cfg: EstimatorConfig | None = None):
        self.cfg = cfg or EstimatorConfig()
        self.state = initial.copy()
        self.diagnostics = EstimatorDiagnostics()

    def handle_imu(self, imu) -> NavState:
        """Propagate by one IMU sample; non-monotonic samples are dropped."""
        try:
            self.state = propagate(self.state, imu, self.cfg)
        except ValueError:
            self.diagnostics.rejected_imu_samples += 1
        return self.state

    def handle_scan(self, scan, surface: SurfaceModel) -> RegistrationResult:
        """Register a scan against the map and fold the correction in."""
        predicted = SE3.from_quat_pos(self.state.attitude, self.state.position)
        reg = register_scan(scan, predicted, surface, self.cfg)
        self.diagnostics.last_degenerate_axis_count = len(reg.degenerate_axes)
        self.diagnostics.last_mean_residual_m = float(reg.mean_residual_m)
        if not reg.converged or reg.match_fraction < self.cfg.min_match_fraction:
            # a mostly-unmatched scan is looking into unmapped space; its
            # matched minority skews toward wrong-surface pairs, so coast
            # on inertial prediction until the map catches up
            self.diagnostics.skipped_registrations += 1
            return reg
        outcome = update(self.state, reg, self.cfg)
        if outcome.applied:
            self.diagnostics.applied_updates += 1
            self.state = outcome.state
        else:
            self.diagnostics.gated_updates += 1
        return reg

    # ------------------------------------------------------------------
    @property
    def position_sigma_m(self) -> float:
        return float(np.sqrt(max(np.trace(self.state.covariance[0:3, 0:3]) / 3.0, 0.0)))

    @property
    def diverged(self) -> bool:
        return (not self.state.is_finite()) or (
            self.position_sigma_m > self.cfg.diverged_pos_sigma_m
        )

    @property
    def healthy(self) -> bool:
        return not self.diverged
