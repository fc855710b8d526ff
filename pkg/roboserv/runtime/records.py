"""Service, lane and stage definitions plus the per-task trace record"""

from dataclasses import dataclass
from enum import Enum


class ServiceId(str, Enum):
    SLAM = "slam"
    VISION = "vision"
    SPEECH = "speech"


SERVICE_ORDER = (ServiceId.SLAM, ServiceId.VISION, ServiceId.SPEECH)


class LaneKind(str, Enum):
    CPU = "cpu"
    GPU = "gpu"
    NETWORK = "network"  # in-flight offload calls; never a compute slot


class DropPolicy(str, Enum):
    QUEUE = "queue"
    LATEST_ONLY = "latest-only"


@dataclass(frozen=True)
class StageSpec:
    """One pipeline stage: where it runs and how long one item takes"""
    name: str
    lane: LaneKind = LaneKind.CPU
    cost_ms: float = 1.0
    drop_policy: DropPolicy = DropPolicy.QUEUE  # only consulted for the first stage of a chain
    priority: int = 10  # lower runs first on a contended lane

    def __post_init__(self):
        """Validate and coerce enum fields"""
        object.__setattr__(self, "lane", LaneKind(self.lane))
        object.__setattr__(self, "drop_policy", DropPolicy(self.drop_policy))
        if not self.name:
            raise ValueError("stage name must not be empty")
        if not self.cost_ms > 0:
            raise ValueError(f"stage {self.name!r}: cost_ms must be positive, got {self.cost_ms}")

    @property
    def cost_ns(self) -> int:
        return int(round(self.cost_ms * 1e6))

    def to_dict(self) -> dict:
        return {"name": self.name, "lane": self.lane.value, "cost_ms": self.cost_ms,
                "drop_policy": self.drop_policy.value, "priority": self.priority}


TRACE_COLUMNS = ("service", "stage", "seq", "lane", "enqueue_ns", "start_ns", "end_ns", "final")


@dataclass(frozen=True)
class TaskRecord:
    """One stage execution of one item, in virtual nanoseconds"""
    service: str  # service or stream name ("slam", "pose", "vision", "speech")
    stage: str
    seq: int
    enqueue_ns: int
    start_ns: int
    end_ns: int
    lane: str
    final: bool = False  # last stage of the item's chain

    def __post_init__(self):
        if not self.enqueue_ns <= self.start_ns <= self.end_ns:
            raise ValueError(f"task {self.service}/{self.stage}#{self.seq}: times out of order "
                             f"({self.enqueue_ns}, {self.start_ns}, {self.end_ns})")

    @property
    def wait_ns(self) -> int:
        return self.start_ns - self.enqueue_ns

    @property
    def run_ns(self) -> int:
        return self.end_ns - self.start_ns

    def as_row(self) -> tuple:
        return (self.service, self.stage, self.seq, self.lane, self.enqueue_ns, self.start_ns,
                self.end_ns, int(self.final))
