"""Utilization and power models for the robot compute module"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence, Tuple

from .records import SERVICE_ORDER, ServiceId

DEFAULT_IDLE_W = 2.0
DEFAULT_BATTERY_WH = 24.0
STABLE_LOCALIZATION_FPS = 15.0


@dataclass(frozen=True)
class ResourceProfile:
    """Footprint of one service: utilization percentages and its power increment"""
    cpu_pct: float = 0.0
    gpu_pct: float = 0.0
    mem_pct: float = 0.0
    power_w: float = 0.0

    def __post_init__(self):
        for name in ("cpu_pct", "gpu_pct", "mem_pct"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{name} must be within [0, 100], got {value}")
        if not (self.power_w >= 0 and math.isfinite(self.power_w)):
            raise ValueError(f"power_w must be a finite non-negative number, got {self.power_w}")

    def to_dict(self) -> dict:
        return {"cpu_pct": self.cpu_pct, "gpu_pct": self.gpu_pct, "mem_pct": self.mem_pct,
                "power_w": self.power_w}


@dataclass(frozen=True)
class Contention:
    """Discount applied to summed utilization when two or more services share the module"""
    cpu: float = 60.0 / 74.0
    gpu: float = 1.0
    mem: float = 1.0

    def __post_init__(self):
        for name in ("cpu", "gpu", "mem"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"contention factor {name} must be in (0, 1], got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {"cpu": self.cpu, "gpu": self.gpu, "mem": self.mem}


def _fixture_local() -> Dict[ServiceId, ResourceProfile]:
    return {
        ServiceId.SLAM: ResourceProfile(28.0, 2.0, 4.0, 3.0),
        ServiceId.VISION: ResourceProfile(24.0, 70.0, 22.0, 4.5),
        ServiceId.SPEECH: ResourceProfile(22.0, 0.0, 2.0, 1.5),
    }


def _fixture_offloaded() -> Dict[ServiceId, ResourceProfile]:
    return {
        ServiceId.VISION: ResourceProfile(12.0, 0.0, 2.0, 0.0),
        ServiceId.SPEECH: ResourceProfile(5.0, 0.0, 1.0, 0.0),
    }


@dataclass
class ProfileTable:
    """Local and offloaded (client-side) profiles per service, plus the idle draw"""
    local: Dict[ServiceId, ResourceProfile] = field(default_factory=_fixture_local)
    offloaded: Dict[ServiceId, ResourceProfile] = field(default_factory=_fixture_offloaded)
    idle_w: float = DEFAULT_IDLE_W
    contention: Contention = field(default_factory=Contention)

    def __post_init__(self):
        self.local = {ServiceId(k): v for k, v in self.local.items()}
        self.offloaded = {ServiceId(k): v for k, v in self.offloaded.items()}
        if not self.idle_w >= 0:
            raise ValueError(f"idle_w must be >= 0, got {self.idle_w}")

    def profile(self, service: ServiceId, offloaded: bool = False) -> ResourceProfile:
        table = self.offloaded if offloaded else self.local
        try:
            return table[ServiceId(service)]
        except (KeyError, ValueError):
            where = "offloaded" if offloaded else "local"
            raise ValueError(f"no {where} profile for service {service!r}") from None

    def to_dict(self) -> dict:
        return {"local": {s.value: p.to_dict() for s, p in self.local.items()},
                "offloaded": {s.value: p.to_dict() for s, p in self.offloaded.items()},
                "idle_w": self.idle_w, "contention": self.contention.to_dict()}


def combined_utilization(profiles: Sequence[ResourceProfile],
                         contention: Contention = Contention()) -> Tuple[float, float, float]:
    """
    Combined (cpu, gpu, mem) percentages of concurrently active services

    Sums per-service percentages, discounts by the contention factor when two
    or more services run, and clamps to 100.
    """
    profiles = list(profiles)
    cpu = sum(p.cpu_pct for p in profiles)
    gpu = sum(p.gpu_pct for p in profiles)
    mem = sum(p.mem_pct for p in profiles)
    if len(profiles) >= 2:
        cpu, gpu, mem = cpu * contention.cpu, gpu * contention.gpu, mem * contention.mem
    return min(cpu, 100.0), min(gpu, 100.0), min(mem, 100.0)


def active_profiles(services: Iterable[ServiceId], offloaded: Iterable[ServiceId],
                    table: ProfileTable) -> Dict[ServiceId, ResourceProfile]:
    """Profile in effect for every active service, in canonical service order"""
    active = {ServiceId(s) for s in services}
    remote = {ServiceId(s) for s in offloaded}
    return {s: table.profile(s, s in remote and s in table.offloaded) for s in SERVICE_ORDER if s in active}


def power_draw(services: Iterable[ServiceId], offloaded: Iterable[ServiceId] = (),
               table: ProfileTable = None) -> float:
    """P_idle plus the power increment of every active service under its placement"""
    table = table or ProfileTable()
    profiles = active_profiles(services, offloaded, table)
    return table.idle_w + sum(p.power_w for p in profiles.values())


def battery_life_hours(power_w: float, battery_wh: float = DEFAULT_BATTERY_WH) -> float:
    if not power_w > 0:
        raise ValueError(f"power must be positive, got {power_w}")
    if not battery_wh > 0:
        raise ValueError(f"battery capacity must be positive, got {battery_wh}")
    return battery_wh / power_w
