"""Adaptive green-extension controller for pedestrians with mobility restrictions.

The state machine is driven by two calls, both pure:

* :func:`ingest_frame` feeds one camera frame's detections into per-group
  presence trackers (first in-zone sighting arms a tracker; N consecutive
  frames without a sighting confirm absence).
* :func:`tick` runs on every whole-second boundary of the green phase. When
  the green is due to end and a restricted group is still present, it grants
  one more second, up to the cap of the highest-priority present group.

:class:`SignalController` wraps both for stateful use and :func:`replay`
streams a recorded event file through it.
"""
import json
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType

from .detection import (
    RESTRICTED_GROUPS,
    BoundingBox,
    Detection,
    FrameDetections,
    MobilityGroup,
    ObjectClass,
    anchor_point,
    group_of,
    max_extension_seconds,
    parse_group,
)
from .errors import ConfigError, OrderingError
from .geometry import contains, validate_polygon

FRAME_INTERVAL_MS = 363.4
DEFAULT_MAX_EXT = MappingProxyType({g: max_extension_seconds(g) for g in RESTRICTED_GROUPS})


@dataclass(frozen=True)
class ControllerConfig:
    base_green_s: int = 10
    max_ext: MappingProxyType = DEFAULT_MAX_EXT
    validation_frames: float = 2  # int >= 1, or math.inf to never confirm absence
    confidence_threshold: float = 0.5
    zones: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    frame_interval_ms: float = FRAME_INTERVAL_MS

    def __post_init__(self):
        if int(self.base_green_s) != self.base_green_s or self.base_green_s < 1:
            raise ConfigError(f"base_green_s must be a whole number >= 1, got {self.base_green_s}")
        n = self.validation_frames
        if not (n == math.inf or (int(n) == n and n >= 1)):
            raise ConfigError(f"validation_frames must be an integer >= 1, got {n}")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must lie in [0, 1]")
        if self.frame_interval_ms <= 0:
            raise ConfigError("frame_interval_ms must be positive")
        caps = {parse_group(g): v for g, v in dict(self.max_ext).items()}
        if set(caps) != set(RESTRICTED_GROUPS):
            raise ConfigError("max_ext must give a cap for each restricted group")
        for g, v in caps.items():
            if int(v) != v or v < 0:
                raise ConfigError(f"cap for {g.value} must be a whole number >= 0, got {v}")
        object.__setattr__(self, "max_ext", MappingProxyType({g: int(v) for g, v in caps.items()}))
        object.__setattr__(self, "zones", MappingProxyType(dict(self.zones)))
        object.__setattr__(self, "base_green_s", int(self.base_green_s))


@dataclass(frozen=True)
class PresenceTracker:
    group: MobilityGroup
    first_seen: bool = False
    consecutive_misses: int = 0
    confirmed_absent: bool = False
    last_seen_ms: float = None

    @property
    def present(self):
        return self.first_seen and not self.confirmed_absent


def presence_update(tracker, detected, n, timestamp_ms=None):
    """Advance one frame. Confirmed absence is final for the green phase."""
    if tracker.confirmed_absent:
        return tracker
    if detected:
        return replace(tracker, first_seen=True, consecutive_misses=0, last_seen_ms=timestamp_ms)
    if not tracker.first_seen:
        return tracker
    misses = tracker.consecutive_misses + 1
    return replace(tracker, consecutive_misses=misses, confirmed_absent=misses >= n)


@dataclass(frozen=True)
class ControllerState:
    phase: str = "red"
    green_start_s: float = 0.0
    granted_extension_s: int = 0
    trackers: tuple = tuple(PresenceTracker(g) for g in RESTRICTED_GROUPS)
    audible_boost: bool = False
    last_timestamp_ms: float = -math.inf
    green_end_s: float = None

    def tracker(self, group):
        return self.trackers[RESTRICTED_GROUPS.index(group)]


@dataclass(frozen=True)
class SignalCommand:
    extend_green_by: int = 0
    audible_boost: bool = False
    active_group: MobilityGroup = None


def start_green(state, now_s):
    """Open a green phase at ``now_s`` with fresh trackers."""
    return replace(
        ControllerState(),
        phase="green",
        green_start_s=now_s,
        last_timestamp_ms=state.last_timestamp_ms,
    )


def active_group(state):
    """Highest-priority group currently present, or None."""
    for tr in state.trackers:  # stored in priority order
        if tr.present:
            return tr.group
    return None


def detected_groups(config, frame):
    """Restricted groups with a confident in-zone detection in ``frame``."""
    zone = config.zones.get(frame.camera_id)
    if zone is None:
        raise ConfigError(f"no zone configured for camera {frame.camera_id}")
    found = set()
    for det in frame.detections:
        g = group_of(det.object_class)
        if g is MobilityGroup.UNRESTRICTED or det.confidence < config.confidence_threshold:
            continue
        if contains(zone, anchor_point(det.bbox)):
            found.add(g)
    return found


def ingest_frame(state, config, frame):
    if frame.timestamp_ms < state.last_timestamp_ms:
        raise OrderingError(
            f"frame at {frame.timestamp_ms} ms arrived after {state.last_timestamp_ms} ms"
        )
    found = detected_groups(config, frame)
    state = replace(state, last_timestamp_ms=frame.timestamp_ms)
    if state.phase != "green":
        return state
    trackers = tuple(
        presence_update(tr, tr.group in found, config.validation_frames, frame.timestamp_ms)
        for tr in state.trackers
    )
    state = replace(state, trackers=trackers)
    return replace(state, audible_boost=active_group(state) is MobilityGroup.VISUAL_IMPAIRMENT)


def tick(state, config, now_s):
    """Whole-second boundary during green. Returns ``(state, command)``."""
    if state.phase != "green":
        return state, SignalCommand()
    group = active_group(state)
    boost = group is MobilityGroup.VISUAL_IMPAIRMENT
    elapsed = now_s - state.green_start_s
    extend = 0
    if elapsed >= config.base_green_s + state.granted_extension_s:
        if group is not None and state.granted_extension_s < config.max_ext[group]:
            extend = 1
            state = replace(state, granted_extension_s=state.granted_extension_s + 1)
        else:
            state = replace(state, phase="red", green_end_s=now_s)
    state = replace(state, audible_boost=boost)
    return state, SignalCommand(extend, boost, group)


class SignalController:
    """Stateful convenience wrapper around the pure transition functions."""

    def __init__(self, config):
        self.config = config
        self.state = ControllerState()

    def start_green(self, now_s=0):
        self.state = start_green(self.state, now_s)

    def ingest_frame(self, frame):
        self.state = ingest_frame(self.state, self.config, frame)

    def tick(self, now_s):
        self.state, cmd = tick(self.state, self.config, now_s)
        return cmd

    @property
    def green(self):
        return self.state.phase == "green"


# -- config and event files ---------------------------------------------------

_CONFIG_FIELDS = {
    "base_green_s", "max_extension_s", "validation_frames", "confidence_threshold",
    "zones", "frame_interval_ms", "green_start_s",
}


def controller_config_from_dict(doc):
    """Build a config from a parsed JSON document; unknown keys are errors.

    ``zones`` maps camera ids to vertex lists. ``validation_frames`` may be
    ``null`` for "never confirm absence". ``green_start_s`` is read by
    :func:`replay`, not stored on the config.
    """
    unknown = set(doc) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown controller config fields: {sorted(unknown)}")
    kwargs = {}
    for key in ("base_green_s", "confidence_threshold", "frame_interval_ms"):
        if key in doc:
            kwargs[key] = doc[key]
    if "validation_frames" in doc:
        n = doc["validation_frames"]
        kwargs["validation_frames"] = math.inf if n is None else n
    if "max_extension_s" in doc:
        caps = dict(DEFAULT_MAX_EXT)
        for name, v in doc["max_extension_s"].items():
            try:
                caps[parse_group(name)] = v
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        kwargs["max_ext"] = caps
    zones = {}
    for cam, verts in doc.get("zones", {}).items():
        try:
            zones[int(cam)] = validate_polygon(verts, zone_id=f"camera-{cam}")
        except ValueError as exc:
            raise ConfigError(f"zone for camera {cam}: {exc}") from None
    kwargs["zones"] = zones
    return ControllerConfig(**kwargs)


EVENT_FIELDS = ("ts_ms", "camera_id", "class_id", "x_min", "y_min", "x_max", "y_max", "confidence")


def parse_event_line(line, lineno=0):
    """Parse one JSON event record.

    Returns ``(ts_ms, camera_id, detection_or_None)``. A record whose
    ``class_id`` is null marks a processed frame with no detections; the box
    and confidence fields may then be omitted.
    """
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line {lineno}: invalid JSON ({exc})") from None
    if not isinstance(rec, dict):
        raise ValueError(f"line {lineno}: expected an object")
    unknown = set(rec) - set(EVENT_FIELDS)
    if unknown:
        raise ValueError(f"line {lineno}: unknown fields {sorted(unknown)}")
    try:
        ts = float(rec["ts_ms"])
        cam = int(rec["camera_id"])
        if rec.get("class_id") is None:
            return ts, cam, None
        det = Detection(
            ObjectClass(int(rec["class_id"])),
            BoundingBox(*(float(rec[k]) for k in ("x_min", "y_min", "x_max", "y_max"))),
            float(rec["confidence"]),
            cam,
            ts,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"line {lineno}: {exc!r}") from None
    return ts, cam, det


def frames_from_lines(lines):
    """Group consecutive records sharing (ts_ms, camera_id) into frames.

    Raises OrderingError naming the first line whose timestamp goes back.
    """
    frames = []
    last_ts = -math.inf
    cur_key, cur = None, []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        ts, cam, det = parse_event_line(line, lineno)
        if ts < last_ts:
            raise OrderingError(f"line {lineno}: timestamp {ts} ms precedes {last_ts} ms")
        last_ts = ts
        if (ts, cam) != cur_key:
            if cur_key is not None:
                frames.append(FrameDetections(cur_key[1], cur_key[0], cur))
            cur_key, cur = (ts, cam), []
        if det is not None:
            cur.append(det)
    if cur_key is not None:
        frames.append(FrameDetections(cur_key[1], cur_key[0], cur))
    return frames


def command_record(ts_s, cmd):
    return {
        "ts_s": ts_s,
        "extend_green_by": cmd.extend_green_by,
        "audible_boost": cmd.audible_boost,
        "active_group": None if cmd.active_group is None else cmd.active_group.value,
    }


def replay(frames, config, green_start_s=0):
    """Run one green phase over ``frames``; return the command records.

    Ticks fire at every whole second after ``green_start_s`` before any frame
    stamped at or after that second, and continue after the last frame until
    the green ends.
    """
    ctl = SignalController(config)
    ctl.start_green(green_start_s)
    records = []
    next_tick = green_start_s + 1
    for frame in frames:
        while ctl.green and next_tick * 1000.0 <= frame.timestamp_ms:
            records.append(command_record(next_tick, ctl.tick(next_tick)))
            next_tick += 1
        ctl.ingest_frame(frame)
    while ctl.green:
        records.append(command_record(next_tick, ctl.tick(next_tick)))
        next_tick += 1
    return records
