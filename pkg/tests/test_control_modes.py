"""Flight-mode supervision rules."""

import itertools

from quadtwin.control import (
    ACTIVE_MODES,
    CommandSource,
    FlightMode,
    HealthFlags,
    ModeMachine,
    ModeRequest,
    ModeState,
    mode_transition,
)

OPERATOR = CommandSource.OPERATOR
AUTONOMY = CommandSource.AUTONOMY
SAFETY = CommandSource.SAFETY


def at(mode, source=OPERATOR):
    return ModeState(mode=mode, entered_at=0.0, source=source)


def test_idle_to_exploration_when_healthy():
    res = mode_transition(
        at(FlightMode.IDLE), ModeRequest(FlightMode.EXPLORATION), HealthFlags(), now=1.0
    )
    assert res.accepted and res.state.mode is FlightMode.EXPLORATION
    assert res.state.entered_at == 1.0
    assert res.state.source is OPERATOR


def test_idle_rejects_flight_when_estimator_not_ready():
    res = mode_transition(
        at(FlightMode.IDLE),
        ModeRequest(FlightMode.TWIST),
        HealthFlags(estimator_healthy=False),
        now=1.0,
    )
    assert not res.accepted
    assert res.state.mode is FlightMode.IDLE
    assert res.reason == "estimator_not_ready"


def test_stale_twist_commands_force_hold():
    res = mode_transition(
        at(FlightMode.TWIST), None, HealthFlags(twist_command_stale=True), now=2.0
    )
    assert res.state.mode is FlightMode.HOLD
    assert res.state.source is SAFETY
    assert res.reason == "twist_command_stale"


def test_staleness_only_matters_in_twist():
    res = mode_transition(
        at(FlightMode.NAVIGATION), None, HealthFlags(twist_command_stale=True), now=2.0
    )
    assert res.state.mode is FlightMode.NAVIGATION


def test_safety_wins_over_simultaneous_request():
    res = mode_transition(
        at(FlightMode.GOAL),
        ModeRequest(FlightMode.EXPLORATION),
        HealthFlags(geofence_breached=True),
        now=2.0,
    )
    assert res.state.mode is FlightMode.HOLD
    assert not res.accepted


def test_hold_with_low_battery_lands():
    res = mode_transition(at(FlightMode.HOLD), None, HealthFlags(battery_low=True), now=3.0)
    assert res.state.mode is FlightMode.LAND
    assert res.state.source is SAFETY


def test_low_battery_in_flight_reaches_land_via_hold():
    machine = ModeMachine(state=at(FlightMode.EXPLORATION))
    machine.step(None, HealthFlags(battery_low=True), now=1.0)
    assert machine.mode is FlightMode.HOLD
    machine.step(None, HealthFlags(battery_low=True), now=1.1)
    assert machine.mode is FlightMode.LAND
    assert [r.reason for r in machine.log] == ["battery_low", "battery_low"]


def test_land_reachable_from_every_mode():
    for mode in FlightMode:
        if mode is FlightMode.LAND:
            continue
        res = mode_transition(at(mode), ModeRequest(FlightMode.LAND), HealthFlags(), now=1.0)
        assert res.accepted and res.state.mode is FlightMode.LAND, mode


def test_leaving_hold_needs_operator():
    res = mode_transition(
        at(FlightMode.HOLD), ModeRequest(FlightMode.NAVIGATION, AUTONOMY), HealthFlags(), 1.0
    )
    assert not res.accepted and res.reason == "operator_required"
    res = mode_transition(
        at(FlightMode.HOLD), ModeRequest(FlightMode.NAVIGATION, OPERATOR), HealthFlags(), 1.0
    )
    assert res.accepted and res.state.mode is FlightMode.NAVIGATION


def test_machine_logs_every_change_with_cause():
    machine = ModeMachine()
    machine.step(ModeRequest(FlightMode.GOAL), HealthFlags(), now=1.0)
    machine.step(None, HealthFlags(estimator_diverged=True), now=2.0)
    machine.step(ModeRequest(FlightMode.LAND), HealthFlags(), now=3.0)
    assert [(r.previous, r.mode, r.reason) for r in machine.log] == [
        (FlightMode.IDLE, FlightMode.GOAL, "commanded"),
        (FlightMode.GOAL, FlightMode.HOLD, "estimator_divergence"),
        (FlightMode.HOLD, FlightMode.LAND, "commanded"),
    ]


def test_rejected_request_keeps_mode_and_stamp():
    state = ModeState(FlightMode.TWIST, entered_at=5.0, source=OPERATOR)
    res = mode_transition(state, ModeRequest(FlightMode.IDLE), HealthFlags(), now=9.0)
    assert not res.accepted
    assert res.state is state
    assert res.reason == "land_first"


# ---------------------------------------------------------------------------
# Exhaustive check of the whole decision space against a literal restatement
# of the documented table.


def expected_outcome(current, request, flags):
    """(new mode, source of change or None) per the documented table."""
    active = current in ACTIVE_MODES

    trigger = (
        flags.crashed
        or flags.estimator_diverged
        or flags.geofence_breached
        or (flags.twist_command_stale and current is FlightMode.TWIST)
    )
    if trigger:
        if current is FlightMode.LAND:
            return current, None
        if current is FlightMode.HOLD:
            if flags.battery_low:
                return FlightMode.LAND, SAFETY
            return current, None
        return FlightMode.HOLD, SAFETY

    if flags.battery_low and current is FlightMode.HOLD:
        return FlightMode.LAND, SAFETY
    if flags.battery_low and active:
        return FlightMode.HOLD, SAFETY

    if request is None or request.target is current:
        return current, None

    tgt = request.target
    healthy = flags.estimator_healthy
    if current is FlightMode.IDLE:
        if tgt in ACTIVE_MODES and healthy:
            return tgt, request.source
        if tgt is FlightMode.LAND:
            return tgt, request.source
        return current, None
    if active:
        if tgt in ACTIVE_MODES and healthy:
            return tgt, request.source
        if tgt in (FlightMode.HOLD, FlightMode.LAND):
            return tgt, request.source
        return current, None
    if current is FlightMode.HOLD:
        if tgt is FlightMode.LAND:
            return tgt, request.source
        if tgt in ACTIVE_MODES and request.source is OPERATOR and healthy:
            return tgt, request.source
        return current, None
    # LAND
    if tgt is FlightMode.IDLE and request.source is OPERATOR:
        return tgt, request.source
    return current, None


def test_exhaustive_product_matches_table():
    requests = [None] + [
        ModeRequest(m, s) for m in FlightMode for s in (OPERATOR, AUTONOMY)
    ]
    flag_names = (
        "estimator_healthy",
        "estimator_diverged",
        "geofence_breached",
        "crashed",
        "twist_command_stale",
        "battery_low",
    )
    checked = 0
    for mode in FlightMode:
        current = at(mode)
        for request in requests:
            for bits in itertools.product((False, True), repeat=len(flag_names)):
                flags = HealthFlags(**dict(zip(flag_names, bits)))
                res = mode_transition(current, request, flags, now=7.0)
                want_mode, want_source = expected_outcome(mode, request, flags)
                want_ok = request is None or request.target is want_mode
                assert res.state.mode is want_mode, (mode, request, flags)
                assert res.accepted == want_ok, (mode, request, flags)
                if want_source is None:
                    assert not res.changed
                    assert res.state is current
                else:
                    assert res.changed
                    assert res.state.source is want_source
                    assert res.state.entered_at == 7.0
                checked += 1
    assert checked == 7 * 15 * 64
