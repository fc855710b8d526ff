"""Compute lanes and stage inboxes on a simpy virtual-time environment

Time is integer nanoseconds. A lane is a priority resource with a fixed slot
count; a started task holds its slot until it finishes.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import simpy

from .records import DropPolicy, LaneKind

NETWORK_SLOTS = 64


@dataclass(frozen=True)
class LaneConfig:
    cpu_slots: int = 4
    gpu_slots: int = 1

    def __post_init__(self):
        if self.cpu_slots < 1 or self.gpu_slots < 1:
            raise ValueError(f"lanes need at least one slot, got cpu={self.cpu_slots} gpu={self.gpu_slots}")

    def to_dict(self) -> dict:
        return {"cpu_slots": self.cpu_slots, "gpu_slots": self.gpu_slots}


class Lane:
    """Slots of one resource kind with busy-time and occupancy accounting"""

    def __init__(self, env: simpy.Environment, kind: LaneKind, slots: int):
        self.env = env
        self.kind = LaneKind(kind)
        self.slots = slots
        self.resource = simpy.PriorityResource(env, capacity=slots)
        self.busy_ns = 0
        self.peak_occupancy = 0

    def execute(self, cost_ns: int, priority: int = 10):
        """Process generator: wait for a slot, hold it for cost_ns; returns (start, end)"""
        with self.resource.request(priority=priority) as request:
            yield request
            start = self.env.now
            self.peak_occupancy = max(self.peak_occupancy, self.resource.count)
            yield self.env.timeout(cost_ns)
            self.busy_ns += cost_ns
        return start, self.env.now

    def utilization(self, elapsed_ns: int) -> float:
        """Busy fraction per slot over the elapsed window"""
        if elapsed_ns <= 0:
            return 0.0
        return min(self.busy_ns / (elapsed_ns * self.slots), 1.0)


def make_lanes(env: simpy.Environment, config: LaneConfig = LaneConfig()) -> dict:
    return {
        LaneKind.CPU: Lane(env, LaneKind.CPU, config.cpu_slots),
        LaneKind.GPU: Lane(env, LaneKind.GPU, config.gpu_slots),
        LaneKind.NETWORK: Lane(env, LaneKind.NETWORK, NETWORK_SLOTS),
    }


class LatestSlot:
    """
    Single-item inbox keeping only the newest offer

    An offer that finds an unclaimed item replaces it; the replaced item is
    returned to the caller as dropped.
    """

    def __init__(self, env: simpy.Environment):
        self.env = env
        self._item: Optional[Tuple[int, Any]] = None
        self._waiter: Optional[simpy.Event] = None

    def offer(self, item: Any) -> Optional[Any]:
        entry = (self.env.now, item)
        if self._waiter is not None and not self._waiter.triggered:
            waiter, self._waiter = self._waiter, None
            waiter.succeed(entry)
            return None
        dropped = self._item[1] if self._item is not None else None
        self._item = entry
        return dropped

    def get(self) -> simpy.Event:
        event = self.env.event()
        if self._item is not None:
            entry, self._item = self._item, None
            event.succeed(entry)
        else:
            self._waiter = event
        return event

    def pending(self) -> List[Any]:
        return [self._item[1]] if self._item is not None else []


class QueueInbox:
    """Unbounded FIFO inbox (nothing dropped on arrival)"""

    def __init__(self, env: simpy.Environment, capacity: float = float("inf")):
        self.env = env
        self.store = simpy.Store(env, capacity=capacity)

    def offer(self, item: Any) -> Optional[Any]:
        self.store.put((self.env.now, item))
        return None

    def put(self, item: Any) -> simpy.Event:
        """Blocking hand-off used between stages"""
        return self.store.put((self.env.now, item))

    def get(self) -> simpy.Event:
        return self.store.get()

    def pending(self) -> List[Any]:
        return [item for _, item in self.store.items]


def make_inbox(env: simpy.Environment, policy: DropPolicy):
    if DropPolicy(policy) is DropPolicy.LATEST_ONLY:
        return LatestSlot(env)
    return QueueInbox(env)
