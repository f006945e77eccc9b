"""Flight-mode supervision, geometric trajectory tracking, motion bounds."""

from .bounds import (
    MotionBounds,
    TwistCommand,
    bound_reference,
    clamp_twist,
    project_goal,
    twist_reference,
)
from .modes import (
    ACTIVE_MODES,
    CommandSource,
    FlightMode,
    HealthFlags,
    ModeMachine,
    ModeRequest,
    ModeState,
    ModeTransitionRecord,
    TransitionResult,
    mode_transition,
)
from .tracker import (
    ControlFault,
    ControlGains,
    Setpoint,
    VehicleParams,
    hold_reference,
    reference_body_rates,
    track,
)

__all__ = [
    "ACTIVE_MODES",
    "CommandSource",
    "ControlFault",
    "ControlGains",
    "FlightMode",
    "HealthFlags",
    "ModeMachine",
    "ModeRequest",
    "ModeState",
    "ModeTransitionRecord",
    "MotionBounds",
    "Setpoint",
    "TransitionResult",
    "TwistCommand",
    "VehicleParams",
    "bound_reference",
    "clamp_twist",
    "hold_reference",
    "mode_transition",
    "project_goal",
    "reference_body_rates",
    "track",
    "twist_reference",
]
