"""Class vocabulary, mobility groups, boxes and detections."""
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

from .errors import DomainError
from .geometry import Point


class ObjectClass(IntEnum):
    PERSON_WITHOUT_MOBILITY_RESTRICTIONS = 0
    PERSON_WITH_WHEELCHAIR = 1
    PERSON_WITH_ROLLATOR = 2
    PERSON_WITH_CRUTCHES = 3
    PERSON_WITH_BLINDSTICK = 4
    PERSON_WITH_LUGGAGE = 5
    PERSON_WITH_STROLLER = 6
    PERSON_WITH_BICYCLE = 7
    PERSON_WITH_LUGGAGE_TROLLEY = 8
    PERSON_WITH_DOG = 9
    PERSON_WITH_WALKING_STICK = 10
    CAR = 11

    @property
    def label(self):
        return self.name.lower()


CLASS_NAMES = tuple(c.label for c in ObjectClass)


class MobilityGroup(Enum):
    WALKING_IMPAIRMENT = "walking"
    VISUAL_IMPAIRMENT = "visual"
    MOBILITY_BURDEN = "burden"
    UNRESTRICTED = "unrestricted"


RESTRICTED_GROUPS = (
    MobilityGroup.VISUAL_IMPAIRMENT,
    MobilityGroup.WALKING_IMPAIRMENT,
    MobilityGroup.MOBILITY_BURDEN,
)  # priority order, highest first

_GROUP_OF = {
    ObjectClass.PERSON_WITHOUT_MOBILITY_RESTRICTIONS: MobilityGroup.UNRESTRICTED,
    ObjectClass.PERSON_WITH_WHEELCHAIR: MobilityGroup.WALKING_IMPAIRMENT,
    ObjectClass.PERSON_WITH_ROLLATOR: MobilityGroup.WALKING_IMPAIRMENT,
    ObjectClass.PERSON_WITH_CRUTCHES: MobilityGroup.WALKING_IMPAIRMENT,
    ObjectClass.PERSON_WITH_BLINDSTICK: MobilityGroup.VISUAL_IMPAIRMENT,
    ObjectClass.PERSON_WITH_LUGGAGE: MobilityGroup.MOBILITY_BURDEN,
    ObjectClass.PERSON_WITH_STROLLER: MobilityGroup.MOBILITY_BURDEN,
    ObjectClass.PERSON_WITH_BICYCLE: MobilityGroup.MOBILITY_BURDEN,
    ObjectClass.PERSON_WITH_LUGGAGE_TROLLEY: MobilityGroup.MOBILITY_BURDEN,
    ObjectClass.PERSON_WITH_DOG: MobilityGroup.MOBILITY_BURDEN,
    ObjectClass.PERSON_WITH_WALKING_STICK: MobilityGroup.WALKING_IMPAIRMENT,
    ObjectClass.CAR: MobilityGroup.UNRESTRICTED,
}

_MAX_EXTENSION_S = {
    MobilityGroup.WALKING_IMPAIRMENT: 6,
    MobilityGroup.VISUAL_IMPAIRMENT: 8,
    MobilityGroup.MOBILITY_BURDEN: 3,
}


def group_of(c):
    return _GROUP_OF[ObjectClass(c)]


def max_extension_seconds(g):
    """Green-time extension cap in whole seconds for a restricted group."""
    if g not in _MAX_EXTENSION_S:
        raise DomainError(f"no extension strategy for {g}")
    return _MAX_EXTENSION_S[g]


def priority_rank(g):
    """0 is the highest priority."""
    if g not in RESTRICTED_GROUPS:
        raise DomainError(f"no priority for {g}")
    return RESTRICTED_GROUPS.index(g)


def parse_group(value):
    """Accept a MobilityGroup, its value (``"walking"``) or its name."""
    if isinstance(value, MobilityGroup):
        return value
    try:
        return MobilityGroup(value)
    except ValueError:
        try:
            return MobilityGroup[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown mobility group {value!r}") from None


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self}")

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def height(self):
        return self.y_max - self.y_min

    @property
    def area(self):
        return self.width * self.height

    def shifted(self, dx, dy):
        return BoundingBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)


def anchor_point(b):
    """Middle of the bottom edge: the pedestrian's ground contact."""
    return Point((b.x_min + b.x_max) / 2.0, b.y_max)


def iou(a, b):
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class Detection:
    object_class: ObjectClass
    bbox: BoundingBox
    confidence: float
    camera_id: int = 0
    timestamp_ms: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "object_class", ObjectClass(self.object_class))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.timestamp_ms < 0:
            raise ValueError("timestamp must be non-negative")

    @property
    def group(self):
        return group_of(self.object_class)


@dataclass(frozen=True)
class FrameDetections:
    camera_id: int
    timestamp_ms: float
    detections: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        for d in self.detections:
            if d.camera_id != self.camera_id or d.timestamp_ms != self.timestamp_ms:
                raise ValueError("detection camera/timestamp differs from its frame")


def write_names_file(path):
    Path(path).write_text("\n".join(CLASS_NAMES) + "\n")


def read_names_file(path):
    """Read a 12-line names file and check it matches the class order."""
    names = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(names) != len(CLASS_NAMES):
        raise ValueError(f"{path}: expected {len(CLASS_NAMES)} class names, got {len(names)}")
    for i, (got, want) in enumerate(zip(names, CLASS_NAMES)):
        if got.lower().replace(" ", "_") != want:
            raise ValueError(f"{path}:{i + 1}: expected class {want!r}, got {got!r}")
    return names
