"""Sensor clock drift and PPS synchronization.

Each sensor clock runs at a fixed rate error (ppm) with a constant offset:
sensor_time = master_time * (1 + ppm * 1e-6) + offset. A pulse-per-second
signal carries the master epoch; the receiving side records its local time at
each pulse and fits a line through the last two (pulse, local) pairs. For a
linear clock the two-point fit is exact, so converted stamps collapse to the
master timeline up to rounding after the second pulse.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class DriftingClock:
    ppm: float = 0.0
    offset_s: float = 0.0

    def read(self, master_time: float) -> float:
        return master_time * (1.0 + self.ppm * 1e-6) + self.offset_s


@dataclass
class PpsDiscipline:
    """Two-point linear fit from sensor stamps back to master time.

    Before any pulse the mapping is the identity. After one pulse only the
    offset is corrected (slope held at 1). From the second pulse on, slope
    and offset both come from the last two pulses.
    """

    pulse_period_s: float = 1.0
    pulses_seen: int = 0
    missed_pulses: int = 0
    _last: tuple[float, float] | None = None   # (master, sensor)
    _prev: tuple[float, float] | None = None

    def on_pulse(self, master_epoch: float, sensor_time: float) -> None:
        if self._last is not None:
            gap = master_epoch - self._last[0]
            expected = max(1, int(round(gap / self.pulse_period_s)))
            self.missed_pulses += expected - 1
        self._prev = self._last
        self._last = (master_epoch, sensor_time)
        self.pulses_seen += 1

    def miss_pulse(self) -> None:
        """Record a pulse that never arrived; the last fit is held."""
        self.missed_pulses += 1

    @property
    def staleness(self) -> int:
        return self.missed_pulses

    def to_master(self, sensor_stamp: float) -> float:
        if self._last is None:
            return sensor_stamp
        m1, s1 = self._last
        if self._prev is None:
            return m1 + (sensor_stamp - s1)
        m0, s0 = self._prev
        if s1 == s0:
            return m1 + (sensor_stamp - s1)
        slope = (m1 - m0) / (s1 - s0)
        return m1 + (sensor_stamp - s1) * slope
