import numpy as np

from quadtwin.sim import DriftingClock, PpsDiscipline


def test_perfect_clock_reads_master():
    c = DriftingClock(ppm=0.0, offset_s=0.0)
    for t in (0.0, 1.5, 1e4):
        assert c.read(t) == t


def test_ppm_arithmetic():
    assert abs(DriftingClock(ppm=100.0).read(10.0) - 10.001) < 1e-12
    assert abs(DriftingClock(ppm=50.0, offset_s=0.005).read(60.0) - 60.008) < 1e-12


def test_pps_identity_for_perfect_clock():
    clock = DriftingClock()
    pps = PpsDiscipline()
    for epoch in (0.0, 1.0):
        pps.on_pulse(epoch, clock.read(epoch))
    for t in (0.2, 0.7, 1.0, 1.9):
        assert abs(pps.to_master(clock.read(t)) - t) < 1e-12


def test_pps_two_point_fit_kills_drift():
    clock = DriftingClock(ppm=100.0, offset_s=0.007)
    pps = PpsDiscipline()

    # no pulses yet: raw sensor stamps are used, error is offset + drift
    raw_err = abs(pps.to_master(clock.read(5.0)) - 5.0)
    assert raw_err > 1e-3

    pps.on_pulse(0.0, clock.read(0.0))
    after_one = abs(pps.to_master(clock.read(0.5)) - 0.5)

    pps.on_pulse(1.0, clock.read(1.0))
    after_two = max(
        abs(pps.to_master(clock.read(t)) - t) for t in (0.1, 0.25, 0.5, 0.9, 1.0)
    )
    # error strictly decreases after the second pulse and lands below 1 us
    assert after_one < raw_err
    assert after_two < after_one
    assert after_two < 1e-6


def test_pps_bound_for_any_drift_up_to_200ppm():
    rng = np.random.default_rng(3)
    for _ in range(50):
        ppm = rng.uniform(-200.0, 200.0)
        off = rng.uniform(-0.05, 0.05)
        clock = DriftingClock(ppm=ppm, offset_s=off)
        pps = PpsDiscipline()
        pps.on_pulse(0.0, clock.read(0.0))
        pps.on_pulse(1.0, clock.read(1.0))
        for t in np.linspace(0.0, 5.0, 21):
            assert abs(pps.to_master(clock.read(t)) - t) < 1e-3


def test_undisciplined_drift_grows_as_defined():
    clock = DriftingClock(ppm=100.0)
    for t in (1.0, 10.0, 100.0):
        assert abs((clock.read(t) - t) - 1e-4 * t) < 1e-12


def test_missing_pulses_hold_fit_and_count():
    clock = DriftingClock(ppm=120.0, offset_s=0.002)
    pps = PpsDiscipline()
    pps.on_pulse(0.0, clock.read(0.0))
    pps.on_pulse(1.0, clock.read(1.0))
    assert pps.staleness == 0
    # pulses at 2, 3, 4 never arrive; next seen at 5
    pps.on_pulse(5.0, clock.read(5.0))
    assert pps.staleness == 3
    # fit still linear and exact for a linear clock
    assert abs(pps.to_master(clock.read(5.5)) - 5.5) < 1e-6
    pps.miss_pulse()
    assert pps.staleness == 4
