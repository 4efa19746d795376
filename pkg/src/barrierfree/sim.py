"""Crossing simulation under imperfect detection, and the miss-run oracle.

A scenario is a list of crossing events. Each event is one green phase in
which one or more restricted pedestrians walk a crosswalk of fixed length at
a constant speed. The stream serving the crosswalk delivers a frame every
``frame_interval_ms``; each in-zone pedestrian is reported in a frame unless
the miss channel drops it. Frames and whole-second ticks drive the real
controller.

Per event the simulator records:

* ``green_end`` -- when the controller actually ended the green;
* ``nominal_end`` -- when the green would have ended had extension stopped
  at the first frame without a sighting (the start of the validation
  window), clipped to ``[base_green_s, green_end]``;
* ``latency = green_end - nominal_end`` -- validation window plus the
  wait for the next whole-second tick;
* success if every pedestrian exits by ``nominal_end``, real success if by
  ``green_end``.
"""
import json
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np

from ._accel import njit, numba_enabled
from .controller import (
    ControllerConfig,
    FRAME_INTERVAL_MS,
    SignalController,
    command_record,
)
from .detection import (
    RESTRICTED_GROUPS,
    BoundingBox,
    Detection,
    FrameDetections,
    MobilityGroup,
    ObjectClass,
    max_extension_seconds,
    parse_group,
    priority_rank,
)
from .errors import ConfigError
from .geometry import validate_polygon

# Class emitted for each group's simulated pedestrian.
_GROUP_CLASS = {
    MobilityGroup.WALKING_IMPAIRMENT: ObjectClass.PERSON_WITH_WHEELCHAIR,
    MobilityGroup.VISUAL_IMPAIRMENT: ObjectClass.PERSON_WITH_BLINDSTICK,
    MobilityGroup.MOBILITY_BURDEN: ObjectClass.PERSON_WITH_STROLLER,
}

ZONE_WIDTH_M = 2.0


@dataclass(frozen=True)
class SpeedModel:
    """Normal walking speed in m/s, redrawn until above ``minimum``."""

    mean: float
    std: float
    minimum: float = 0.05

    def draw(self, rng):
        while True:
            v = rng.normal(self.mean, self.std)
            if v > self.minimum:
                return v


# 12 m crossing with a 10 s base green. Means put the 95th percentile of
# extra crossing time (12/v - 10) at about 5.8 s, 7.9 s and 2.7 s.
DEFAULT_SPEEDS = MappingProxyType({
    MobilityGroup.WALKING_IMPAIRMENT: SpeedModel(1.006, 0.15),
    MobilityGroup.VISUAL_IMPAIRMENT: SpeedModel(0.917, 0.15),
    MobilityGroup.MOBILITY_BURDEN: SpeedModel(1.192, 0.15),
})


@dataclass(frozen=True)
class Arrival:
    group: MobilityGroup
    entry_time_s: float = 0.0
    event: int = None  # arrivals sharing an event id cross in the same green

    def __post_init__(self):
        object.__setattr__(self, "group", parse_group(self.group))
        if self.group is MobilityGroup.UNRESTRICTED:
            raise ConfigError("simulated arrivals must belong to a restricted group")
        if self.entry_time_s < 0:
            raise ConfigError("entry_time_s must be non-negative")


DEFAULT_ARRIVALS = tuple(Arrival(g, 0.0) for g in RESTRICTED_GROUPS)


@dataclass(frozen=True)
class BurstMiss:
    """Two-state miss channel: occluded frames always miss."""

    p_start: float  # P(clear -> occluded) per frame
    p_end: float  # P(occluded -> clear) per frame


@dataclass(frozen=True)
class ScenarioConfig:
    crossing_length_m: float = 12.0
    speeds: MappingProxyType = DEFAULT_SPEEDS
    arrivals: tuple = DEFAULT_ARRIVALS
    miss_probability: float = 0.08  # not a measured value; puts N=1 vs N=2 in a realistic regime
    frame_interval_ms: float = FRAME_INTERVAL_MS
    inference_ms: float = 40.4
    num_cameras: int = 8
    base_green_s: int = 10
    validation_frames: float = 2
    rng_seed: int = 0
    burst_miss: BurstMiss = None

    def __post_init__(self):
        if self.crossing_length_m <= 0:
            raise ConfigError("crossing_length_m must be positive")
        if not 0.0 <= self.miss_probability <= 1.0:
            raise ConfigError("miss_probability must lie in [0, 1]")
        if self.frame_interval_ms <= 0 or self.inference_ms <= 0:
            raise ConfigError("frame_interval_ms and inference_ms must be positive")
        if self.num_cameras < 1:
            raise ConfigError("num_cameras must be >= 1")
        speeds = {parse_group(g): s for g, s in dict(self.speeds).items()}
        for g, s in speeds.items():
            if s.mean <= 0 or s.std < 0:
                raise ConfigError(f"speed model for {g.value} must have mean > 0, std >= 0")
        object.__setattr__(self, "speeds", MappingProxyType(speeds))
        object.__setattr__(self, "arrivals", tuple(self.arrivals))
        for a in self.arrivals:
            if a.group not in speeds:
                raise ConfigError(f"no speed model for group {a.group.value}")
        if self.burst_miss is not None:
            b = self.burst_miss
            if not (0 <= b.p_start <= 1 and 0 <= b.p_end <= 1):
                raise ConfigError("burst_miss probabilities must lie in [0, 1]")
        # delegate the remaining checks
        self.controller_config()

    def controller_config(self):
        zone = validate_polygon(
            [(0.0, 0.0), (self.crossing_length_m, 0.0),
             (self.crossing_length_m, ZONE_WIDTH_M), (0.0, ZONE_WIDTH_M)],
            zone_id="crosswalk",
        )
        return ControllerConfig(
            base_green_s=self.base_green_s,
            validation_frames=self.validation_frames,
            zones={cam: zone for cam in range(self.num_cameras)},
            frame_interval_ms=self.frame_interval_ms,
        )

    def events(self):
        """Arrivals grouped into crossing events, in order of first appearance."""
        groups = {}
        for i, a in enumerate(self.arrivals):
            key = ("event", a.event) if a.event is not None else ("solo", i)
            groups.setdefault(key, []).append(a)
        return list(groups.values())


@dataclass(frozen=True)
class EventOutcome:
    groups: tuple
    exit_times_s: tuple
    green_end_s: float
    nominal_end_s: float
    granted_s: int
    success: bool
    real_success: bool

    @property
    def latency_s(self):
        return self.green_end_s - self.nominal_end_s

    @property
    def top_group(self):
        return min(self.groups, key=priority_rank)


@dataclass(frozen=True)
class SimMetrics:
    success_rate: float
    latency_s: float
    real_success_rate: float
    avg_extended_green_s: MappingProxyType
    n_events: int = 0

    @classmethod
    def from_outcomes(cls, outcomes):
        outcomes = list(outcomes)
        if not outcomes:
            return cls(100.0, 0.0, 100.0, MappingProxyType({g: 0.0 for g in RESTRICTED_GROUPS}), 0)
        n = len(outcomes)
        extended = [o.latency_s for o in outcomes if o.granted_s > 0]
        avg_ext = {}
        for g in RESTRICTED_GROUPS:
            grants = [o.granted_s for o in outcomes if o.top_group is g]
            avg_ext[g] = float(np.mean(grants)) if grants else 0.0
        return cls(
            success_rate=100.0 * sum(o.success for o in outcomes) / n,
            latency_s=float(np.mean(extended)) if extended else 0.0,
            real_success_rate=100.0 * sum(o.real_success for o in outcomes) / n,
            avg_extended_green_s=MappingProxyType(avg_ext),
            n_events=n,
        )


def _miss_flags(rng, n_frames, cfg):
    """Per-frame miss indicators for one pedestrian, drawn independently of N."""
    u = rng.random(n_frames)
    if cfg.burst_miss is None:
        return u < cfg.miss_probability
    v = rng.random(n_frames)
    flags = np.empty(n_frames, dtype=bool)
    occluded = False
    for k in range(n_frames):
        occluded = v[k] >= cfg.burst_miss.p_end if occluded else v[k] < cfg.burst_miss.p_start
        flags[k] = occluded or u[k] < cfg.miss_probability
    return flags


def _pedestrian_box(position_m):
    # ground-plane footprint whose bottom-centre anchor sits on the walking line
    return BoundingBox(position_m - 0.3, 0.2, position_m + 0.3, 1.0)


def _simulate_event(arrivals, cfg, ctl_cfg, rng, record):
    dt = cfg.frame_interval_ms / 1000.0
    horizon = cfg.base_green_s + max(max_extension_seconds(g) for g in RESTRICTED_GROUPS) + 2.0
    camera = int(rng.integers(cfg.num_cameras))
    offset = rng.uniform(0.0, dt)
    n_frames = int(math.ceil((horizon - offset) / dt)) + 1
    frame_times = offset + dt * np.arange(n_frames)
    speeds = [cfg.speeds[a.group].draw(rng) for a in arrivals]
    exits = [a.entry_time_s + cfg.crossing_length_m / v for a, v in zip(arrivals, speeds)]
    misses = [_miss_flags(rng, n_frames, cfg) for _ in arrivals]

    frames = []
    for k, t in enumerate(frame_times):
        ts_ms = round(t * 1000.0, 3)
        dets = []
        for a, v, x, miss in zip(arrivals, speeds, exits, misses):
            if a.entry_time_s <= t <= x and not miss[k]:
                pos = min((t - a.entry_time_s) * v, cfg.crossing_length_m)
                dets.append(Detection(_GROUP_CLASS[a.group], _pedestrian_box(pos), 1.0, camera, ts_ms))
        frames.append(FrameDetections(camera, ts_ms, dets))

    ctl = SignalController(ctl_cfg)
    ctl.start_green(0)
    commands = []
    next_tick = 1
    for frame in frames:
        while ctl.green and next_tick * 1000.0 <= frame.timestamp_ms:
            cmd = ctl.tick(next_tick)
            if record:
                commands.append(command_record(next_tick, cmd))
            next_tick += 1
        if not ctl.green:
            break
        ctl.ingest_frame(frame)
    while ctl.green:
        cmd = ctl.tick(next_tick)
        if record:
            commands.append(command_record(next_tick, cmd))
        next_tick += 1

    state = ctl.state
    green_end = float(state.green_end_s)
    base = float(cfg.base_green_s)
    sightings = [tr.last_seen_ms for tr in state.trackers if tr.first_seen]
    if sightings:
        nominal = min(max(max(sightings) / 1000.0 + dt, base), green_end)
    else:
        nominal = green_end
    outcome = EventOutcome(
        groups=tuple(a.group for a in arrivals),
        exit_times_s=tuple(exits),
        green_end_s=green_end,
        nominal_end_s=nominal,
        granted_s=state.granted_extension_s,
        success=all(x <= nominal for x in exits),
        real_success=all(x <= green_end for x in exits),
    )
    return outcome, frames, commands


def run_scenario(cfg, record=True):
    """Simulate every event of ``cfg``; return ``(SimMetrics, log)``.

    ``log`` is a list with one dict per event holding the outcome, the
    frames (as controller input records) and the issued commands; it is
    empty when ``record`` is false. Results depend only on ``cfg``.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    ctl_cfg = cfg.controller_config()
    outcomes, log = [], []
    for arrivals in cfg.events():
        outcome, frames, commands = _simulate_event(arrivals, cfg, ctl_cfg, rng, record)
        outcomes.append(outcome)
        if record:
            log.append({"outcome": outcome, "frames": frames, "commands": commands})
    return SimMetrics.from_outcomes(outcomes), log


def ablate_n(cfg, n_values, seeds=range(500)):
    """Pooled metrics for each N over a paired seed ensemble.

    Every N sees identical speeds, frame phases and miss draws for a given
    seed, so differences between rows come from N alone.
    """
    n_values = list(n_values)
    if not n_values:
        raise ValueError("n_values must not be empty")
    seeds = list(seeds)
    table = {}
    for n in n_values:
        outcomes = []
        for s in seeds:
            outcomes += scenario_outcomes(replace(cfg, validation_frames=n, rng_seed=int(s)))
        table[n] = SimMetrics.from_outcomes(outcomes)
    return table


def scenario_outcomes(cfg):
    """Per-event outcomes of one run, without building the event log."""
    rng = np.random.default_rng(cfg.rng_seed)
    ctl_cfg = cfg.controller_config()
    return [_simulate_event(a, cfg, ctl_cfg, rng, False)[0] for a in cfg.events()]


# -- validation-window oracle ------------------------------------------------

def absence_false_alarm_prob(p, n, m):
    """P(m independent Bernoulli(p) misses contain a run of >= n misses).

    Dynamic program over the length of the current trailing miss run.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    if n > m:
        return 0.0
    run = np.zeros(n)  # run[r] = P(no run yet, trailing run length r)
    run[0] = 1.0
    hit = 0.0
    for _ in range(m):
        nxt = np.zeros(n)
        nxt[0] = (1.0 - p) * run.sum()
        nxt[1:] = p * run[:-1]
        hit += p * run[-1]
        run = nxt
    return hit


@njit
def _confirm_frames_loops(misses, n):
    rows, cols = misses.shape
    out = np.full(rows, -1, dtype=np.int64)
    for i in range(rows):
        run = 0
        for k in range(cols):
            if misses[i, k]:
                run += 1
                if run >= n:
                    out[i] = k
                    break
            else:
                run = 0
    return out


def _confirm_frames_numpy(misses, n):
    rows, cols = misses.shape
    out = np.full(rows, -1, dtype=np.int64)
    run = np.zeros(rows, dtype=np.int64)
    for k in range(cols):
        run = np.where(misses[:, k], run + 1, 0)
        newly = (run >= n) & (out < 0)
        out[newly] = k
    return out


def confirm_frames(misses, n):
    """Index of the frame confirming absence in each row, or -1.

    Each row is the miss sequence that follows a tracker's first sighting;
    confirmation happens on the n-th consecutive miss.
    """
    misses = np.ascontiguousarray(misses, dtype=np.bool_)
    if misses.ndim != 2:
        raise ValueError("misses must be 2-D (windows, frames)")
    if numba_enabled():
        return _confirm_frames_loops(misses, int(n))
    return _confirm_frames_numpy(misses, int(n))


def simulate_premature_absence(p, n, m, n_windows, rng=None):
    """Fraction of simulated in-zone windows in which absence gets confirmed.

    Each window is ``m`` frames after the first sighting with the pedestrian
    still in the zone, so any confirmation is premature.
    """
    rng = np.random.default_rng(rng)
    misses = rng.random((n_windows, m)) < p
    return float(np.mean(confirm_frames(misses, n) >= 0))


# -- scenario files -------------------------------------------------------------

_SCENARIO_FIELDS = {
    "crossing_length_m", "speeds", "arrivals", "miss_probability", "frame_interval_ms",
    "inference_ms", "num_cameras", "base_green_s", "validation_frames", "rng_seed",
    "burst_miss",
}


def scenario_from_dict(doc):
    """Build a ScenarioConfig from a parsed JSON document; unknown keys are errors."""
    unknown = set(doc) - _SCENARIO_FIELDS
    if unknown:
        raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
    kwargs = dict(doc)
    try:
        if "speeds" in doc:
            speeds = dict(DEFAULT_SPEEDS)
            for g, model in doc["speeds"].items():
                speeds[parse_group(g)] = SpeedModel(**model)
            kwargs["speeds"] = speeds
        if "arrivals" in doc:
            kwargs["arrivals"] = tuple(Arrival(**a) for a in doc["arrivals"])
        if "burst_miss" in doc and doc["burst_miss"] is not None:
            kwargs["burst_miss"] = BurstMiss(**doc["burst_miss"])
        if doc.get("validation_frames", 0) is None:
            kwargs["validation_frames"] = math.inf
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def scenario_to_dict(cfg):
    return {
        "crossing_length_m": cfg.crossing_length_m,
        "speeds": {g.value: {"mean": s.mean, "std": s.std, "minimum": s.minimum}
                   for g, s in cfg.speeds.items()},
        "arrivals": [{"group": a.group.value, "entry_time_s": a.entry_time_s, "event": a.event}
                     for a in cfg.arrivals],
        "miss_probability": cfg.miss_probability,
        "frame_interval_ms": cfg.frame_interval_ms,
        "inference_ms": cfg.inference_ms,
        "num_cameras": cfg.num_cameras,
        "base_green_s": cfg.base_green_s,
        "validation_frames": None if cfg.validation_frames == math.inf else cfg.validation_frames,
        "rng_seed": cfg.rng_seed,
        "burst_miss": None if cfg.burst_miss is None
        else {"p_start": cfg.burst_miss.p_start, "p_end": cfg.burst_miss.p_end},
    }


def frame_records(frame):
    """Controller input records for one frame (a null-class marker if empty)."""
    if not frame.detections:
        return [{"ts_ms": frame.timestamp_ms, "camera_id": frame.camera_id, "class_id": None}]
    return [
        {
            "ts_ms": d.timestamp_ms, "camera_id": d.camera_id, "class_id": int(d.object_class),
            "x_min": d.bbox.x_min, "y_min": d.bbox.y_min, "x_max": d.bbox.x_max,
            "y_max": d.bbox.y_max, "confidence": d.confidence,
        }
        for d in frame.detections
    ]


def dumps_frames(frames):
    return "".join(json.dumps(r) + "\n" for f in frames for r in frame_records(f))
