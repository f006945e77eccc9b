"""Flight-mode supervision.

The vehicle is always in exactly one mode. Requests come from the operator
or from onboard autonomy; safety conditions preempt both. Every decision
goes through ``mode_transition``, which enforces the table below, and
``ModeMachine`` keeps the current mode plus a log of every change.

Transition table
----------------

Safety pass, evaluated before any request. Trigger conditions are the
crash flag, the estimator divergence flag, a geofence breach, and command
staleness over the limit while in TWIST:

  LAND  + any trigger        -> stays LAND (landing is terminal descent)
  HOLD  + any trigger        -> LAND if battery_low else stays HOLD
  other + any trigger        -> HOLD  (source safety, cause = trigger)

Battery pass, when no trigger fired:

  HOLD  + battery_low        -> LAND  (source safety)
  active mode + battery_low  -> HOLD  (source safety; lands on next pass)
  IDLE / LAND + battery_low  -> unchanged

Request pass, when neither safety pass acted (requests arriving together
with a safety condition are rejected). "active" means TWIST, GOAL,
NAVIGATION, or EXPLORATION:

  any    -> same mode        -> accepted, no-op (entry stamp kept)
  IDLE   -> active           -> requires estimator_healthy
  IDLE   -> LAND             -> accepted
  IDLE   -> HOLD             -> rejected (nothing to hold on the ground)
  active -> active           -> requires estimator_healthy
  active -> HOLD or LAND     -> accepted
  active -> IDLE             -> rejected (land first)
  HOLD   -> LAND             -> accepted
  HOLD   -> active           -> requires operator source and healthy
  HOLD   -> IDLE             -> rejected (land first)
  LAND   -> IDLE             -> requires operator source (disarm)
  LAND   -> anything else    -> rejected (landing is terminal)

Rejected requests keep the current mode and report a reason code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class FlightMode(enum.Enum):
    IDLE = "idle"
    TWIST = "twist"
    GOAL = "goal"
    NAVIGATION = "navigation"
    EXPLORATION = "exploration"
    HOLD = "hold"
    LAND = "land"


ACTIVE_MODES = frozenset(
    {FlightMode.TWIST, FlightMode.GOAL, FlightMode.NAVIGATION, FlightMode.EXPLORATION}
)


class CommandSource(enum.Enum):
    OPERATOR = "operator"
    AUTONOMY = "autonomy"
    SAFETY = "safety"


@dataclass(frozen=True)
class ModeState:
    """Current mode, when it was entered, and who commanded it."""

    mode: FlightMode = FlightMode.IDLE
    entered_at: float = 0.0
    source: CommandSource = CommandSource.OPERATOR


@dataclass(frozen=True)
class ModeRequest:
    target: FlightMode
    source: CommandSource = CommandSource.OPERATOR


@dataclass(frozen=True)
class HealthFlags:
    """Inputs to the safety and gating rules, sampled each decision."""

    estimator_healthy: bool = True
    estimator_diverged: bool = False
    geofence_breached: bool = False
    crashed: bool = False
    twist_command_stale: bool = False
    battery_low: bool = False


@dataclass(frozen=True)
class TransitionResult:
    state: ModeState
    changed: bool
    accepted: bool      # request honored: absent, or its target is the outcome
    reason: str         # cause of the change, or the rejection code


def _safety_trigger(mode: FlightMode, flags: HealthFlags) -> str | None:
    """First firing trigger in priority order, or None."""
    if flags.crashed:
        return "crash"
    if flags.estimator_diverged:
        return "estimator_divergence"
    if flags.geofence_breached:
        return "geofence_breach"
    if flags.twist_command_stale and mode is FlightMode.TWIST:
        return "twist_command_stale"
    return None


def mode_transition(
    current: ModeState,
    request: ModeRequest | None,
    flags: HealthFlags,
    now: float,
) -> TransitionResult:
    """Apply the transition table once. Pure function of its arguments."""

    def honored(outcome: FlightMode) -> bool:
        return request is None or request.target is outcome

    def enter(mode: FlightMode, source: CommandSource, reason: str) -> TransitionResult:
        return TransitionResult(
            ModeState(mode, now, source), changed=True, accepted=honored(mode), reason=reason
        )

    def keep(reason: str, accepted: bool | None = None) -> TransitionResult:
        acc = honored(current.mode) if accepted is None else accepted
        return TransitionResult(current, changed=False, accepted=acc, reason=reason)

    trigger = _safety_trigger(current.mode, flags)
    if trigger is not None:
        if current.mode is FlightMode.LAND:
            return keep("landing_continues")
        if current.mode is FlightMode.HOLD:
            if flags.battery_low:
                return enter(FlightMode.LAND, CommandSource.SAFETY, "battery_low")
            return keep("safety_hold_active")
        return enter(FlightMode.HOLD, CommandSource.SAFETY, trigger)

    if flags.battery_low:
        if current.mode is FlightMode.HOLD:
            return enter(FlightMode.LAND, CommandSource.SAFETY, "battery_low")
        if current.mode in ACTIVE_MODES:
            return enter(FlightMode.HOLD, CommandSource.SAFETY, "battery_low")
        # IDLE and LAND ride out a low battery where they are

    if request is None:
        return keep("no_request", accepted=True)
    if request.target is current.mode:
        return keep("already_in_mode", accepted=True)

    cur, tgt = current.mode, request.target

    if cur is FlightMode.IDLE:
        if tgt in ACTIVE_MODES:
            if not flags.estimator_healthy:
                return keep("estimator_not_ready", accepted=False)
            return enter(tgt, request.source, "commanded")
        if tgt is FlightMode.LAND:
            return enter(tgt, request.source, "commanded")
        return keep("not_flying", accepted=False)  # HOLD from the ground

    if cur in ACTIVE_MODES:
        if tgt in ACTIVE_MODES:
            if not flags.estimator_healthy:
                return keep("estimator_not_ready", accepted=False)
            return enter(tgt, request.source, "commanded")
        if tgt in (FlightMode.HOLD, FlightMode.LAND):
            return enter(tgt, request.source, "commanded")
        return keep("land_first", accepted=False)  # IDLE mid-air

    if cur is FlightMode.HOLD:
        if tgt is FlightMode.LAND:
            return enter(tgt, request.source, "commanded")
        if tgt in ACTIVE_MODES:
            if request.source is not CommandSource.OPERATOR:
                return keep("operator_required", accepted=False)
            if not flags.estimator_healthy:
                return keep("estimator_not_ready", accepted=False)
            return enter(tgt, request.source, "commanded")
        return keep("land_first", accepted=False)

    # cur is LAND
    if tgt is FlightMode.IDLE and request.source is CommandSource.OPERATOR:
        return enter(FlightMode.IDLE, request.source, "disarmed")
    if tgt is FlightMode.IDLE:
        return keep("operator_required", accepted=False)
    return keep("landing_terminal", accepted=False)


@dataclass
class ModeTransitionRecord:
    t: float
    previous: FlightMode
    mode: FlightMode
    source: CommandSource
    reason: str


@dataclass
class ModeMachine:
    """Holds the mode state and logs every change with its cause."""

    state: ModeState = field(default_factory=ModeState)
    log: list[ModeTransitionRecord] = field(default_factory=list)

    @property
    def mode(self) -> FlightMode:
        return self.state.mode

    def step(
        self, request: ModeRequest | None, flags: HealthFlags, now: float
    ) -> TransitionResult:
        result = mode_transition(self.state, request, flags, now)
        if result.changed:
            self.log.append(
                ModeTransitionRecord(
                    t=now,
                    previous=self.state.mode,
                    mode=result.state.mode,
                    source=result.state.source,
                    reason=result.reason,
                )
            )
            self.state = result.state
        return result

    def force(self, mode: FlightMode, now: float, reason: str) -> None:
        """Unconditional jump, for test and scenario setup only."""
        self.log.append(
            ModeTransitionRecord(now, self.state.mode, mode, CommandSource.SAFETY, reason)
        )
        self.state = replace(self.state, mode=mode, entered_at=now, source=CommandSource.SAFETY)
