"""Telemetry endpoints: rate-limited publishing and exactly-once commands.

The sender assigns per-topic sequence numbers at publish time, before rate
limiting. A deferred sample that gets superseded therefore leaves a hole in
the wire sequence, and the receiver's gap count reconciles exactly with the
sender's drop count: every loss is attributable. Commands and acks are
never rate limited and never dropped by the sender.

Exactly-once command execution sits on top of at-least-once delivery: the
client retransmits an unacknowledged command with the same id after a
timeout, and the server remembers every id it has executed and replays the
stored ack for duplicates instead of executing again.
"""

from __future__ import annotations

from dataclasses import dataclass
from struct import error as struct_error

from .framing import (
    FLAG_KEYFRAME,
    FRAME_OVERHEAD,
    TOPIC_COMMAND,
    TOPIC_COMMAND_ACK,
    TOPIC_COVERAGE,
    TOPIC_HEARTBEAT,
    TOPIC_LOG_EVENT,
    TOPIC_MAP_DELTA,
    TOPIC_STATE,
    Deframer,
    Frame,
    encode_frame,
)
from .mapsync import MapMirror, MapPublisher
from .payloads import (
    AckMessage,
    Command,
    CoverageSample,
    StateSample,
    decode_ack,
    decode_command,
    decode_coverage,
    decode_state,
    encode_ack,
    encode_command,
    encode_coverage,
    encode_state,
)


class TokenBucket:
    """Deterministic token bucket; time is passed in, never sampled."""

    def __init__(self, rate_per_s: float, capacity: float):
        self.rate = rate_per_s
        self.capacity = capacity
        self.tokens = capacity
        self._last = None

    def _refill(self, now: float) -> None:
        if self._last is not None and now > self._last:
            self.tokens = min(self.capacity, self.tokens + (now - self._last) * self.rate)
        self._last = now if self._last is None or now > self._last else self._last

    def available(self, now: float) -> float:
        self._refill(now)
        return self.tokens

    def spend(self, now: float, cost: float) -> bool:
        self._refill(now)
        if self.tokens >= cost:
            self.tokens -= cost
            return True
        return False


@dataclass
class _Deferred:
    seq: int
    payload: bytes


class TelemetrySender:
    """Vehicle-side publisher: telemetry out, rate limits enforced."""

    def __init__(
        self,
        map_publisher: MapPublisher | None = None,
        state_rate_hz: float = 10.0,
        coverage_rate_hz: float = 1.0,
        map_bytes_per_s: float = 32 * 1024,
        heartbeat_period_s: float = 1.0,
    ):
        self.map_publisher = map_publisher
        self._buckets = {
            TOPIC_STATE: TokenBucket(state_rate_hz, 1.0),
            TOPIC_COVERAGE: TokenBucket(coverage_rate_hz, 1.0),
            TOPIC_MAP_DELTA: TokenBucket(map_bytes_per_s, float(map_bytes_per_s)),
        }
        self._seq: dict[int, int] = {}
        self._deferred: dict[int, _Deferred] = {}
        self._out = bytearray()
        self._heartbeat_period = heartbeat_period_s
        self._last_heartbeat: float | None = None
        self.dropped: dict[int, int] = {TOPIC_STATE: 0, TOPIC_COVERAGE: 0}
        self.wire_bytes = 0
        self.frames_sent = 0

    def _alloc_seq(self, topic: int) -> int:
        seq = self._seq.get(topic, 0)
        self._seq[topic] = seq + 1
        return seq

    def _emit(self, topic: int, seq: int, payload: bytes, flags: int = 0) -> None:
        frame = encode_frame(topic, seq, payload, flags)
        self._out += frame
        self.wire_bytes += len(frame)
        self.frames_sent += 1

    def _publish_limited(self, topic: int, payload: bytes, now: float) -> bool:
        seq = self._alloc_seq(topic)
        if self._buckets[topic].spend(now, 1.0):
            self._emit(topic, seq, payload)
            return True
        if topic in self._deferred:
            self.dropped[topic] += 1  # superseded sample never reaches the wire
        self._deferred[topic] = _Deferred(seq, payload)
        return False

    def publish_state(self, sample: StateSample, now: float) -> bool:
        return self._publish_limited(TOPIC_STATE, encode_state(sample), now)

    def publish_coverage(self, sample: CoverageSample, now: float) -> bool:
        return self._publish_limited(TOPIC_COVERAGE, encode_coverage(sample), now)

    def publish_log_event(self, payload: bytes, now: float) -> None:
        self._emit(TOPIC_LOG_EVENT, self._alloc_seq(TOPIC_LOG_EVENT), payload)

    def send_command(self, cmd: Command) -> None:
        self._emit(TOPIC_COMMAND, self._alloc_seq(TOPIC_COMMAND), encode_command(cmd))

    def send_ack(self, ack: AckMessage) -> None:
        self._emit(TOPIC_COMMAND_ACK, self._alloc_seq(TOPIC_COMMAND_ACK), encode_ack(ack))

    def pump(self, now: float) -> None:
        """Flush deferred samples, due map traffic, and the heartbeat."""
        if self._last_heartbeat is None or now - self._last_heartbeat >= self._heartbeat_period:
            self._emit(TOPIC_HEARTBEAT, self._alloc_seq(TOPIC_HEARTBEAT), b"")
            self._last_heartbeat = now
        for topic in (TOPIC_STATE, TOPIC_COVERAGE):
            held = self._deferred.get(topic)
            if held is not None and self._buckets[topic].spend(now, 1.0):
                self._emit(topic, held.seq, held.payload)
                del self._deferred[topic]
        if self.map_publisher is not None:
            bucket = self._buckets[TOPIC_MAP_DELTA]
            while True:
                allowance = int(bucket.available(now)) - FRAME_OVERHEAD
                if allowance <= 0:
                    break
                item = self.map_publisher.next_payload(now, allowance)
                if item is None:
                    break
                payload, is_key = item
                bucket.spend(now, len(payload) + FRAME_OVERHEAD)
                self._emit(
                    TOPIC_MAP_DELTA,
                    self._alloc_seq(TOPIC_MAP_DELTA),
                    payload,
                    FLAG_KEYFRAME if is_key else 0,
                )

    @property
    def backlog(self) -> bool:
        """True while rate-limited samples are still waiting for tokens."""
        return bool(self._deferred)

    def take_output(self) -> bytes:
        out = bytes(self._out)
        self._out.clear()
        return out


class TelemetryReceiver:
    """Operator-side consumer: decodes topics, accounts for losses."""

    def __init__(self):
        self.deframer = Deframer()
        self.mirror = MapMirror()
        self.latest_state: StateSample | None = None
        self.coverage: list[CoverageSample] = []
        self.log_events: list[bytes] = []
        self.commands: list[Command] = []
        self.acks: list[AckMessage] = []
        self.last_heartbeat_seq: int | None = None
        self.heartbeats = 0
        self._last_seq: dict[int, int] = {}
        self.gaps: dict[int, int] = {}
        self.stale_frames = 0
        self.malformed_payloads = 0

    @property
    def established(self) -> bool:
        """Version handshake: a decoded heartbeat proves a compatible peer."""
        return self.heartbeats > 0

    def _account(self, frame: Frame) -> bool:
        last = self._last_seq.get(frame.topic_id)
        if last is not None and frame.seq <= last:
            self.stale_frames += 1
            return False
        if last is not None and frame.seq > last + 1:
            self.gaps[frame.topic_id] = self.gaps.get(frame.topic_id, 0) + (
                frame.seq - last - 1
            )
        elif last is None and frame.seq > 0:
            self.gaps[frame.topic_id] = self.gaps.get(frame.topic_id, 0) + frame.seq
        self._last_seq[frame.topic_id] = frame.seq
        return True

    def feed(self, data: bytes) -> list[Frame]:
        frames = self.deframer.feed(data)
        for frame in frames:
            if not self._account(frame):
                continue
            self._dispatch(frame)
        return frames

    def _dispatch(self, frame: Frame) -> None:
        try:
            if frame.topic_id == TOPIC_STATE:
                self.latest_state = decode_state(frame.payload)
            elif frame.topic_id == TOPIC_COVERAGE:
                self.coverage.append(decode_coverage(frame.payload))
            elif frame.topic_id == TOPIC_MAP_DELTA:
                if frame.flags & FLAG_KEYFRAME:
                    self.mirror.feed_keyframe_chunk(frame.payload)
                else:
                    self.mirror.feed_delta(frame.payload)
            elif frame.topic_id == TOPIC_COMMAND:
                self.commands.append(decode_command(frame.payload))
            elif frame.topic_id == TOPIC_COMMAND_ACK:
                self.acks.append(decode_ack(frame.payload))
            elif frame.topic_id == TOPIC_LOG_EVENT:
                self.log_events.append(frame.payload)
            elif frame.topic_id == TOPIC_HEARTBEAT:
                self.heartbeats += 1
                self.last_heartbeat_seq = frame.seq
            # unknown topics skip silently: length framing makes them safe
        except (ValueError, KeyError, IndexError, struct_error):
            self.malformed_payloads += 1


@dataclass
class _PendingCommand:
    command: Command
    deadline: float
    retries: int = 0


class CommandClient:
    """Operator side of the exactly-once command round trip."""

    def __init__(self, sender: TelemetrySender, timeout_s: float = 2.0):
        self.sender = sender
        self.timeout_s = timeout_s
        self._next_id = 1
        self.pending: dict[int, _PendingCommand] = {}
        self.resolved: dict[int, AckMessage] = {}
        self.retransmits = 0

    def allocate_id(self) -> int:
        cid = self._next_id
        self._next_id += 1
        return cid

    def send(self, cmd: Command, now: float) -> int:
        """Send a command (its command_id must already be allocated)."""
        self.pending[cmd.command_id] = _PendingCommand(cmd, now + self.timeout_s)
        self.sender.send_command(cmd)
        return cmd.command_id

    def on_ack(self, ack: AckMessage) -> None:
        if ack.command_id in self.resolved:
            return  # duplicate ack, already settled
        if ack.command_id in self.pending:
            del self.pending[ack.command_id]
            self.resolved[ack.command_id] = ack

    def poll(self, now: float) -> None:
        for entry in self.pending.values():
            if now >= entry.deadline:
                entry.deadline = now + self.timeout_s
                entry.retries += 1
                self.retransmits += 1
                self.sender.send_command(entry.command)

    @property
    def link_degraded(self) -> bool:
        return any(entry.retries > 0 for entry in self.pending.values())


class CommandServer:
    """Vehicle side: executes each command id once, re-acks duplicates."""

    def __init__(self, sender: TelemetrySender, handler):
        self.sender = sender
        self.handler = handler  # Command -> (accepted, reason)
        self._acked: dict[int, AckMessage] = {}
        self.executed_ids: list[int] = []
        self.duplicate_commands = 0

    def on_command(self, cmd: Command) -> AckMessage:
        stored = self._acked.get(cmd.command_id)
        if stored is not None:
            self.duplicate_commands += 1
            self.sender.send_ack(stored)
            return stored
        accepted, reason = self.handler(cmd)
        ack = AckMessage(cmd.command_id, bool(accepted), reason)
        self._acked[cmd.command_id] = ack
        self.executed_ids.append(cmd.command_id)
        self.sender.send_ack(ack)
        return ack
