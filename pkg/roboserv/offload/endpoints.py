"""Execution endpoints and their modeled per-service latency"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from ..runtime.records import ServiceId
from ..sensors.prng import Xorshift64Star, derive_seed

DEFAULT_PORT = 7070


class EndpointKind(str, Enum):
    LOCAL = "local"
    LAN_CLOUD = "lan-cloud"
    WAN_CLOUD = "wan-cloud"


_SERVICE_SALT = {ServiceId.SLAM: 1, ServiceId.VISION: 2, ServiceId.SPEECH: 3}


@dataclass(frozen=True)
class LatencyModel:
    """fixed round trip + server processing + uniform jitter in [-jitter, +jitter], all ms"""
    fixed_ms: float = 0.0
    processing_ms: float = 0.0
    jitter_ms: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("fixed_ms", "processing_ms", "jitter_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.jitter_ms > self.fixed_ms + self.processing_ms:
            raise ValueError("jitter_ms must not exceed fixed_ms + processing_ms")

    @property
    def worst_case_ms(self) -> float:
        return self.fixed_ms + self.processing_ms + self.jitter_ms

    @property
    def best_case_ms(self) -> float:
        return self.fixed_ms + self.processing_ms - self.jitter_ms

    def sample_ms(self, service: ServiceId, index: int) -> float:
        """Deterministic latency of the index-th call for a service"""
        base = self.fixed_ms + self.processing_ms
        if self.jitter_ms == 0:
            return base
        stream = Xorshift64Star(derive_seed(self.seed, _SERVICE_SALT[ServiceId(service)], index))
        return base + stream.uniform_range(-self.jitter_ms, self.jitter_ms)

    def to_dict(self) -> dict:
        return {"fixed_ms": self.fixed_ms, "processing_ms": self.processing_ms,
                "jitter_ms": self.jitter_ms, "seed": self.seed}


_ADDRESS = re.compile(r"^\[?([A-Za-z0-9.\-:]*?)\]?:(\d{1,5})$")


def parse_address(address: str) -> Tuple[str, int]:
    """'host:port' -> (host, port)"""
    match = _ADDRESS.match(address or "")
    if not match or not match.group(1):
        raise ValueError(f"address must look like host:port, got {address!r}")
    port = int(match.group(2))
    if not 0 < port < 65536:
        raise ValueError(f"port out of range in {address!r}")
    return match.group(1), port


@dataclass
class Endpoint:
    """Somewhere a service can run; cloud endpoints list the services they host"""
    name: str
    kind: EndpointKind = EndpointKind.LOCAL
    address: Optional[str] = None
    services: Dict[ServiceId, LatencyModel] = field(default_factory=dict)

    def __post_init__(self):
        self.kind = EndpointKind(self.kind)
        self.services = {ServiceId(k): v for k, v in self.services.items()}
        if self.kind is EndpointKind.LOCAL:
            if self.address is not None:
                raise ValueError(f"endpoint {self.name!r}: local endpoint takes no address")
        elif self.address is None:
            raise ValueError(f"endpoint {self.name!r}: {self.kind.value} endpoint needs an address")
        else:
            parse_address(self.address)

    @property
    def is_local(self) -> bool:
        return self.kind is EndpointKind.LOCAL

    def hosts(self, service: ServiceId) -> bool:
        return self.is_local or ServiceId(service) in self.services

    def worst_case_ms(self, service: ServiceId) -> float:
        """Local execution counts as zero added latency"""
        if self.is_local:
            return 0.0
        return self.services[ServiceId(service)].worst_case_ms

    def to_dict(self) -> dict:
        doc = {"name": self.name, "kind": self.kind.value,
               "services": {s.value: m.to_dict() for s, m in self.services.items()}}
        if self.address is not None:
            doc["address"] = self.address
        return doc


LOCAL_ENDPOINT = Endpoint("local")


@dataclass(frozen=True)
class ToleranceTable:
    """Maximum tolerable end-to-end latency per service, ms"""
    slam: float = 5.0
    vision: float = 100.0
    speech: float = 500.0

    def __post_init__(self):
        for service in ServiceId:
            if not getattr(self, service.value) > 0:
                raise ValueError(f"tolerance for {service.value} must be positive, got {getattr(self, service.value)}")

    def for_service(self, service: ServiceId) -> float:
        return getattr(self, ServiceId(service).value)

    def to_dict(self) -> dict:
        return {s.value: self.for_service(s) for s in ServiceId}


def lan_fixture(address: str = f"127.0.0.1:{DEFAULT_PORT}") -> Endpoint:
    """Local-area cloud: vision answers in 100 ms, speech in 200 ms"""
    return Endpoint("lan", EndpointKind.LAN_CLOUD, address, {
        ServiceId.SLAM: LatencyModel(20.0, 80.0),
        ServiceId.VISION: LatencyModel(20.0, 80.0),
        ServiceId.SPEECH: LatencyModel(20.0, 180.0),
    })


def wan_fixture(address: str = f"cloud.example.net:{DEFAULT_PORT}", seed: int = 9) -> Endpoint:
    """Wide-area cloud: 2 to 5 s per request"""
    model = LatencyModel(2000.0, 1500.0, 1500.0, seed)
    return Endpoint("wan", EndpointKind.WAN_CLOUD, address, {s: model for s in ServiceId})
