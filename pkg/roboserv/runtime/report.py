"""Run report: everything a scenario run measured, as a stable JSON document"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .deadlines import DeadlineViolation
from .records import TaskRecord
from .units import ActionRecord, ChassisCommand

REPORT_SCHEMA = 1


@dataclass
class StreamStats:
    """Counters and latency of one item stream"""
    placement: str
    emitted: int
    processed: int
    dropped: int
    missed: int
    achieved_rate_hz: float
    latency_ms: Dict[str, Optional[float]]

    def to_dict(self) -> dict:
        return {"placement": self.placement, "emitted": self.emitted, "processed": self.processed,
                "dropped": self.dropped, "missed": self.missed, "achieved_rate_hz": self.achieved_rate_hz,
                "latency_ms": dict(self.latency_ms)}


@dataclass
class RunReport:
    scenario: str
    seed: int
    duration_s: float
    streams: Dict[str, StreamStats] = field(default_factory=dict)
    placements: Dict[str, str] = field(default_factory=dict)
    lanes: Dict[str, Dict[str, float]] = field(default_factory=dict)
    utilization: Dict[str, float] = field(default_factory=dict)
    power_w: float = 0.0
    battery_wh: float = 0.0
    battery_hours: float = 0.0
    stable_localization: bool = False
    slam_rmse_m: Optional[float] = None
    violations: List[DeadlineViolation] = field(default_factory=list)
    labels: List[Dict[str, Any]] = field(default_factory=list)
    transcripts: List[Dict[str, Any]] = field(default_factory=list)
    actions: List[ActionRecord] = field(default_factory=list)
    # not serialized
    records: List[TaskRecord] = field(default_factory=list, repr=False)
    chassis: List[ChassisCommand] = field(default_factory=list, repr=False)
    poses: list = field(default_factory=list, repr=False)

    def rate(self, stream: str) -> float:
        stats = self.streams.get(stream)
        return stats.achieved_rate_hz if stats else 0.0

    @property
    def violation_count(self) -> int:
        return len(self.violations)

    def to_dict(self) -> dict:
        by_kind: Dict[str, int] = {}
        for v in self.violations:
            key = f"{v.service}/{v.kind}"
            by_kind[key] = by_kind.get(key, 0) + 1
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "streams": {name: s.to_dict() for name, s in self.streams.items()},
            "placements": dict(self.placements),
            "lanes": {name: dict(lane) for name, lane in self.lanes.items()},
            "utilization": dict(self.utilization),
            "power_w": self.power_w,
            "battery_wh": self.battery_wh,
            "battery_hours": self.battery_hours,
            "stable_localization": self.stable_localization,
            "slam_rmse_m": self.slam_rmse_m,
            "violations": {"count": len(self.violations), "by_kind": by_kind,
                           "items": [v.to_dict() for v in self.violations]},
            "labels": list(self.labels),
            "transcripts": list(self.transcripts),
            "actions": [a.to_dict() for a in self.actions],
        }

    def to_json(self) -> str:
        return json.dumps(_finite(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


def _finite(value):
    """JSON has no inf/nan; they become null"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite(v) for v in value]
    return value
