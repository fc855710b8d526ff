"""Scenario configuration: one JSON document aggregating every section a run needs

Sections are the dataclasses of the modules they configure; this module only
maps JSON onto them. Unknown keys are errors. Keys starting with "_" are notes
and are skipped.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

from ..offload.endpoints import Endpoint, EndpointKind, LatencyModel, ToleranceTable
from ..runtime.deadlines import DeadlineSpec
from ..runtime.lanes import LaneConfig
from ..runtime.records import SERVICE_ORDER, ServiceId, StageSpec
from ..runtime.resources import DEFAULT_BATTERY_WH, Contention, ProfileTable, ResourceProfile
from ..runtime.scheduler import (
    SceneObject,
    SensorConfig,
    ServiceConfig,
    Utterance,
    default_services,
    slam_cost_table,
)
from ..runtime.units import EndpointerParams, NavigationConfig, NavigationParams, ReactionRule
from ..sensors.imu import ImuErrorModel
from ..sensors.trajectory import TrajectorySpec
from ..slam.state import SlamParams

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid scenario document; the message starts with the dotted field path"""

    def __init__(self, path: str, problem: str):
        super().__init__(f"{path}: {problem}")
        self.path = path
        self.problem = problem


def _fields(doc: Any, path: str, allowed) -> Dict[str, Any]:
    if not isinstance(doc, Mapping):
        raise ConfigError(path or "scenario", f"expected an object, got {type(doc).__name__}")
    out = {}
    for key, value in doc.items():
        if key.startswith("_"):
            continue
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")
        out[key] = value
    return out


def _list(doc: Any, path: str) -> list:
    if not isinstance(doc, list):
        raise ConfigError(path, f"expected a list, got {type(doc).__name__}")
    return doc


def _build(cls: Callable, doc: Any, path: str, **converters: Callable[[Any, str], Any]):
    """Construct a dataclass section from an object, converting the listed fields"""
    names = {f.name for f in dataclasses.fields(cls)}
    values = _fields(doc, path, names)
    for key, convert in converters.items():
        if key in values:
            values[key] = convert(values[key], f"{path}.{key}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


def _service(key: str, path: str) -> ServiceId:
    try:
        return ServiceId(key)
    except ValueError:
        raise ConfigError(path, f"unknown service {key!r}") from None


def _pairs(value: Any, path: str) -> list:
    points = _list(value, path)
    for index, p in enumerate(points):
        if not (isinstance(p, (list, tuple)) and len(p) == 2):
            raise ConfigError(f"{path}[{index}]", "expected [x, y]")
    return [tuple(p) for p in points]


def _stages(value: Any, path: str) -> List[StageSpec]:
    return [_build(StageSpec, s, f"{path}[{i}]") for i, s in enumerate(_list(value, path))]


def _parse_service(doc: Any, path: str, default: ServiceConfig) -> ServiceConfig:
    names = {f.name for f in dataclasses.fields(ServiceConfig)} | {"cost_table"}
    values = _fields(doc, path, names)
    if "cost_table" in values:
        if "stages" in values:
            raise ConfigError(f"{path}.cost_table", "give either stages or cost_table")
        try:
            values["stages"] = slam_cost_table(values.pop("cost_table"))
        except ValueError as exc:
            raise ConfigError(f"{path}.cost_table", str(exc)) from None
    elif "stages" in values:
        values["stages"] = _stages(values["stages"], f"{path}.stages")
    merged = {**dataclasses.asdict(default), "stages": list(default.stages), **values}
    try:
        return ServiceConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_services(doc: Any, path: str) -> Dict[ServiceId, ServiceConfig]:
    services = default_services()
    for key, value in _fields(doc, path, {s.value for s in SERVICE_ORDER}).items():
        service = ServiceId(key)
        services[service] = _parse_service(value, f"{path}.{key}", services[service])
    return services


def _profile_map(doc: Any, path: str) -> Dict[ServiceId, ResourceProfile]:
    values = _fields(doc, path, {s.value for s in SERVICE_ORDER})
    return {_service(k, path): _build(ResourceProfile, v, f"{path}.{k}") for k, v in values.items()}


def _parse_profiles(doc: Any, path: str) -> ProfileTable:
    return _build(ProfileTable, doc, path, local=_profile_map, offloaded=_profile_map,
                  contention=lambda v, p: _build(Contention, v, p))


def _latency_map(doc: Any, path: str) -> Dict[ServiceId, LatencyModel]:
    values = _fields(doc, path, {s.value for s in SERVICE_ORDER})
    return {_service(k, path): _build(LatencyModel, v, f"{path}.{k}") for k, v in values.items()}


def _parse_endpoint(doc: Any, path: str) -> Endpoint:
    def kind(value, where):
        try:
            return EndpointKind(value)
        except ValueError:
            raise ConfigError(where, f"must be one of {[k.value for k in EndpointKind]}") from None

    return _build(Endpoint, doc, path, kind=kind, services=_latency_map)


def _parse_navigation(doc: Any, path: str) -> NavigationConfig:
    return _build(NavigationConfig, doc, path,
                  params=lambda v, p: _build(NavigationParams, v, p),
                  goals=_pairs,
                  rules=lambda v, p: [_build(ReactionRule, r, f"{p}[{i}]") for i, r in enumerate(_list(v, p))])


@dataclass
class OutputPaths:
    """Default output locations; command-line flags take precedence"""
    report: Optional[str] = None
    trace: Optional[str] = None
    ntuple: Optional[str] = None
    chassis: Optional[str] = None  # file path or host:port

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


@dataclass
class ScenarioConfig:
    """Everything one run needs"""
    name: str = "scenario"
    seed: int = 1
    duration_s: float = 10.0
    battery_wh: float = DEFAULT_BATTERY_WH
    trajectory: TrajectorySpec = None
    imu: ImuErrorModel = field(default_factory=ImuErrorModel)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    slam: SlamParams = field(default_factory=SlamParams)
    services: Dict[ServiceId, ServiceConfig] = field(default_factory=default_services)
    lanes: LaneConfig = field(default_factory=LaneConfig)
    profiles: ProfileTable = field(default_factory=ProfileTable)
    tolerances: ToleranceTable = field(default_factory=ToleranceTable)
    endpoints: List[Endpoint] = field(default_factory=list)
    deadlines: List[DeadlineSpec] = field(default_factory=list)
    navigation: NavigationConfig = field(default_factory=NavigationConfig)
    endpointing: EndpointerParams = field(default_factory=EndpointerParams)
    utterances: List[Utterance] = field(default_factory=list)
    scene: List[SceneObject] = field(default_factory=list)
    outputs: OutputPaths = field(default_factory=OutputPaths)

    def __post_init__(self):
        """Validate run-level values and cross-section references"""
        if not self.name:
            raise ValueError("name must not be empty")
        if not 0 <= self.seed <= 0xFFFFFFFFFFFFFFFF:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        if not self.battery_wh > 0:
            raise ValueError(f"battery_wh must be positive, got {self.battery_wh}")
        if self.trajectory is None:
            self.trajectory = TrajectorySpec(duration_s=self.duration_s, seed=self.seed)
        if self.trajectory.duration_s != self.duration_s:
            raise ValueError(f"trajectory.duration_s {self.trajectory.duration_s} differs from "
                             f"duration_s {self.duration_s}")
        names = [e.name for e in self.endpoints]
        if len(set(names)) != len(names):
            raise ValueError(f"endpoint names must be unique, got {names}")
        for service, spec in self.services.items():
            if spec.placement not in ("auto", "local") and spec.placement not in names:
                raise ValueError(f"services.{service.value}.placement: no endpoint named {spec.placement!r}")

    @property
    def enabled_services(self) -> List[ServiceId]:
        return [s for s in SERVICE_ORDER if self.services[s].enabled]

    def with_seed(self, seed: int) -> "ScenarioConfig":
        """Same scenario with another seed (the trajectory seed follows)"""
        return dataclasses.replace(self, seed=seed, trajectory=dataclasses.replace(self.trajectory, seed=seed))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ScenarioConfig":
        """Parse and validate a scenario document"""
        values = _fields(doc, "", {f.name for f in dataclasses.fields(cls)} | {"schema"})
        schema = values.pop("schema", None)
        if schema != SCHEMA_VERSION:
            raise ConfigError("schema", f"expected {SCHEMA_VERSION}, got {schema!r}")
        duration = values.get("duration_s", 10.0)
        seed = values.get("seed", 1)
        parsers = {
            "trajectory": lambda v, p: _build(TrajectorySpec, {"duration_s": duration, "seed": seed, **v}, p,
                                              waypoints=_pairs),
            "imu": lambda v, p: _build(ImuErrorModel, v, p, accel_bias=lambda b, q: tuple(_pairs([b], q)[0])),
            "sensors": lambda v, p: _build(SensorConfig, v, p),
            "slam": lambda v, p: _build(SlamParams, v, p),
            "services": _parse_services,
            "lanes": lambda v, p: _build(LaneConfig, v, p),
            "profiles": _parse_profiles,
            "tolerances": lambda v, p: _build(ToleranceTable, v, p),
            "endpoints": lambda v, p: [_parse_endpoint(e, f"{p}[{i}]") for i, e in enumerate(_list(v, p))],
            "deadlines": lambda v, p: [_build(DeadlineSpec, d, f"{p}[{i}]") for i, d in enumerate(_list(v, p))],
            "navigation": _parse_navigation,
            "endpointing": lambda v, p: _build(EndpointerParams, v, p),
            "utterances": lambda v, p: [_build(Utterance, u, f"{p}[{i}]") for i, u in enumerate(_list(v, p))],
            "scene": lambda v, p: [_build(SceneObject, s, f"{p}[{i}]") for i, s in enumerate(_list(v, p))],
            "outputs": lambda v, p: _build(OutputPaths, v, p),
        }
        for key, parse in parsers.items():
            if key in values:
                values[key] = parse(values[key], key)
        try:
            return cls(**values)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("scenario", str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "battery_wh": self.battery_wh,
            "trajectory": {**dataclasses.asdict(self.trajectory),
                           "waypoints": [list(p) for p in self.trajectory.waypoints]},
            "imu": {**dataclasses.asdict(self.imu), "accel_bias": list(self.imu.accel_bias)},
            "sensors": self.sensors.to_dict(),
            "slam": dataclasses.asdict(self.slam),
            "services": {s.value: self.services[s].to_dict() for s in SERVICE_ORDER},
            "lanes": self.lanes.to_dict(),
            "profiles": self.profiles.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "endpoints": [e.to_dict() for e in self.endpoints],
            "deadlines": [d.to_dict() for d in self.deadlines],
            "navigation": self.navigation.to_dict(),
            "endpointing": self.endpointing.to_dict(),
            "utterances": [u.to_dict() for u in self.utterances],
            "scene": [o.to_dict() for o in self.scene],
            "outputs": self.outputs.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """Read and validate a scenario file"""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(path.name, f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return ScenarioConfig.from_dict(doc)
