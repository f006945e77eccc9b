from .config import ImuNoise, SimConfig
from .world import Box, WorldModel, load_world, save_world
from .dynamics import (
    ActuatorCommand,
    SimulationFault,
    VehicleState,
    acceleration_world,
    hover_command,
    step,
)
from .sensors import ImuModel, ImuSample, LidarModel, LidarScan
from .clock import DriftingClock, PpsDiscipline

__all__ = [
    "ImuNoise",
    "SimConfig",
    "Box",
    "WorldModel",
    "load_world",
    "save_world",
    "ActuatorCommand",
    "SimulationFault",
    "VehicleState",
    "acceleration_world",
    "hover_command",
    "step",
    "ImuModel",
    "ImuSample",
    "LidarModel",
    "LidarScan",
    "DriftingClock",
    "PpsDiscipline",
]
