from .channel import (
    CommandClient,
    CommandServer,
    TelemetryReceiver,
    TelemetrySender,
    TokenBucket,
)
from .framing import (
    FLAG_KEYFRAME,
    FRAME_OVERHEAD,
    MAX_PAYLOAD,
    TOPIC_CAMERA_POSE,
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
from .mapsync import MapMirror, MapPublisher, rle_encode
from .payloads import (
    AckMessage,
    BoundsCommand,
    Command,
    CoverageSample,
    GoalCommand,
    HEALTH_BATTERY_LOW,
    HEALTH_CRASHED,
    HEALTH_ESTIMATOR_OK,
    HEALTH_FENCE_BREACH,
    HEALTH_TWIST_STALE,
    MODE_FROM_WIRE,
    MODE_WIRE_IDS,
    ModeCommand,
    STATE_PAYLOAD_SIZE,
    StateSample,
    TwistWireCommand,
    decode_ack,
    decode_command,
    decode_coverage,
    decode_state,
    encode_ack,
    encode_command,
    encode_coverage,
    encode_state,
)

__all__ = [
    "AckMessage",
    "BoundsCommand",
    "Command",
    "CommandClient",
    "CommandServer",
    "CoverageSample",
    "Deframer",
    "FLAG_KEYFRAME",
    "FRAME_OVERHEAD",
    "Frame",
    "GoalCommand",
    "HEALTH_BATTERY_LOW",
    "HEALTH_CRASHED",
    "HEALTH_ESTIMATOR_OK",
    "HEALTH_FENCE_BREACH",
    "HEALTH_TWIST_STALE",
    "MapMirror",
    "MapPublisher",
    "MAX_PAYLOAD",
    "MODE_FROM_WIRE",
    "MODE_WIRE_IDS",
    "ModeCommand",
    "STATE_PAYLOAD_SIZE",
    "StateSample",
    "TelemetryReceiver",
    "TelemetrySender",
    "TOPIC_CAMERA_POSE",
    "TOPIC_COMMAND",
    "TOPIC_COMMAND_ACK",
    "TOPIC_COVERAGE",
    "TOPIC_HEARTBEAT",
    "TOPIC_LOG_EVENT",
    "TOPIC_MAP_DELTA",
    "TOPIC_STATE",
    "TokenBucket",
    "TwistWireCommand",
    "decode_ack",
    "decode_command",
    "decode_coverage",
    "decode_state",
    "encode_ack",
    "encode_command",
    "encode_coverage",
    "encode_state",
    "encode_frame",
    "rle_encode",
]
