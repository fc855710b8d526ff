"""Utilization and energy estimate of a placement plan"""

from dataclasses import dataclass
from typing import Iterable, Optional

from ..runtime.records import SERVICE_ORDER, ServiceId
from ..runtime.resources import (
    DEFAULT_BATTERY_WH,
    ProfileTable,
    active_profiles,
    battery_life_hours,
    combined_utilization,
    power_draw,
)
from .placement import PlacementPlan


@dataclass(frozen=True)
class PolicyEstimate:
    power_w: float
    cpu_pct: float
    gpu_pct: float
    mem_pct: float
    battery_hours: float

    def to_dict(self) -> dict:
        return {"power_w": self.power_w, "cpu_pct": self.cpu_pct, "gpu_pct": self.gpu_pct,
                "mem_pct": self.mem_pct, "battery_hours": self.battery_hours}


def _estimate(services, offloaded, profiles: ProfileTable, battery_wh: float) -> PolicyEstimate:
    active = active_profiles(services, offloaded, profiles)
    cpu, gpu, mem = combined_utilization(list(active.values()), profiles.contention)
    power = power_draw(services, offloaded, profiles)
    return PolicyEstimate(power, cpu, gpu, mem, battery_life_hours(power, battery_wh))


def estimate_policy(plan: PlacementPlan, profiles: Optional[ProfileTable] = None,
                    battery_wh: float = DEFAULT_BATTERY_WH,
                    services: Optional[Iterable[ServiceId]] = None) -> PolicyEstimate:
    """Offloaded services contribute their client-side footprint instead of the local one"""
    profiles = profiles or ProfileTable()
    services = list(plan.placements) if services is None else [ServiceId(s) for s in services]
    return _estimate(services, plan.offloaded_services, profiles, battery_wh)


def all_local_estimate(profiles: Optional[ProfileTable] = None, battery_wh: float = DEFAULT_BATTERY_WH,
                       services: Iterable[ServiceId] = SERVICE_ORDER) -> PolicyEstimate:
    return _estimate([ServiceId(s) for s in services], (), profiles or ProfileTable(), battery_wh)
