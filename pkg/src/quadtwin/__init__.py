"""Desk-scale quadrotor digital twin and autonomy stack.

Subpackages:
    sim         rigid-body simulation, sensors, clock models, world files
    estimation  error-state EKF with scan-to-map registration
    mapping     log-odds occupancy grid, frontiers, map metrics
    planning    frontier goal selection, A* path search, minimum-snap trajectories
    control     flight-mode supervisor and geometric trajectory tracking
    telemetry   framed low-bandwidth telemetry/command protocol
    flightlog   crash-tolerant segmented recording, replay, and transfer
    mission     scenario runner, metrics, reference trajectories, reports
"""

__version__ = "0.1.0"
