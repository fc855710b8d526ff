"""Per-service choice of execution endpoint"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

from ..runtime.records import SERVICE_ORDER, ServiceId
from ..runtime.resources import ProfileTable
from .endpoints import LOCAL_ENDPOINT, Endpoint, ToleranceTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Placement:
    service: ServiceId
    endpoint: Endpoint
    worst_case_ms: float
    tolerance_ms: float
    rationale: str

    @property
    def offloaded(self) -> bool:
        return not self.endpoint.is_local


@dataclass
class PlacementPlan:
    placements: Dict[ServiceId, Placement]

    def endpoint_of(self, service: ServiceId) -> Endpoint:
        return self.placements[ServiceId(service)].endpoint

    @property
    def offloaded_services(self) -> List[ServiceId]:
        return [s for s in SERVICE_ORDER if s in self.placements and self.placements[s].offloaded]

    def summary(self) -> Dict[str, str]:
        """service -> endpoint name"""
        return {s.value: p.endpoint.name for s, p in self.placements.items()}


def _energy(service: ServiceId, endpoint: Endpoint, profiles: ProfileTable) -> float:
    # no client-side profile: offloading saves nothing
    if endpoint.is_local or service not in profiles.offloaded:
        return profiles.profile(service).power_w
    return profiles.profile(service, offloaded=True).power_w


def place_service(service: ServiceId, tolerance_ms: float, endpoints: Sequence[Endpoint],
                  profiles: ProfileTable) -> Placement:
    """
    Lowest-energy endpoint meeting the tolerance

    Local always qualifies. Energy ties go to the lower worst-case latency,
    then to the earlier endpoint in the list.
    """
    local = next((e for e in endpoints if e.is_local), LOCAL_ENDPOINT)
    candidates = [local] + [e for e in endpoints if not e.is_local and e.hosts(service)]
    rejected = []
    ranked = []
    for order, endpoint in enumerate(candidates):
        worst = endpoint.worst_case_ms(service)
        if worst > tolerance_ms:
            rejected.append(f"{endpoint.name} {worst:g} ms > {tolerance_ms:g} ms")
            continue
        ranked.append((_energy(service, endpoint, profiles), worst, order, endpoint))
    energy, worst, _, chosen = min(ranked, key=lambda r: r[:3])
    reason = f"{chosen.name}: {worst:g} ms <= {tolerance_ms:g} ms at {energy:g} W"
    if rejected:
        reason += "; rejected " + ", ".join(rejected)
    return Placement(ServiceId(service), chosen, worst, tolerance_ms, reason)


def decide_placement(tolerances: ToleranceTable, endpoints: Sequence[Endpoint],
                     profiles: Optional[ProfileTable] = None,
                     services: Iterable[ServiceId] = SERVICE_ORDER) -> PlacementPlan:
    """Place every service independently"""
    profiles = profiles or ProfileTable()
    plan = {}
    for service in services:
        service = ServiceId(service)
        plan[service] = place_service(service, tolerances.for_service(service), endpoints, profiles)
        logger.debug("placed %s: %s", service.value, plan[service].rationale)
    return PlacementPlan(plan)
