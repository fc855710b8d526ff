"""Latency and throughput requirements checked against a task trace"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .records import TaskRecord


@dataclass(frozen=True)
class DeadlineSpec:
    """End-to-end latency bound and minimum completion rate of one stream"""
    service: str
    max_latency_ms: Optional[float] = None
    min_rate_hz: Optional[float] = None

    def __post_init__(self):
        if self.max_latency_ms is not None and not self.max_latency_ms > 0:
            raise ValueError(f"{self.service}: max_latency_ms must be positive, got {self.max_latency_ms}")
        if self.min_rate_hz is not None and not self.min_rate_hz > 0:
            raise ValueError(f"{self.service}: min_rate_hz must be positive, got {self.min_rate_hz}")

    def to_dict(self) -> dict:
        return {"service": self.service, "max_latency_ms": self.max_latency_ms, "min_rate_hz": self.min_rate_hz}


@dataclass(frozen=True)
class DeadlineViolation:
    service: str
    kind: str  # "latency" or "throughput"
    seq: Optional[int]
    value: float  # ms for latency, Hz for throughput
    limit: float

    def to_dict(self) -> dict:
        return {"service": self.service, "kind": self.kind, "seq": self.seq, "value": self.value, "limit": self.limit}


def item_latencies(records: Iterable[TaskRecord]) -> Dict[str, Dict[int, int]]:
    """
    End-to-end latency of every completed item, keyed by service then seq

    An item's latency runs from its first enqueue to the end of its final stage.
    """
    first: Dict[tuple, int] = {}
    done: Dict[tuple, int] = {}
    for rec in records:
        key = (rec.service, rec.seq)
        first[key] = min(first.get(key, rec.enqueue_ns), rec.enqueue_ns)
        if rec.final:
            done[key] = rec.end_ns
    out: Dict[str, Dict[int, int]] = defaultdict(dict)
    for (service, seq), end in sorted(done.items()):
        out[service][seq] = end - first[(service, seq)]
    return dict(out)


def latency_percentiles(latencies_ns: Sequence[int]) -> Dict[str, Optional[float]]:
    if len(latencies_ns) == 0:
        return {"p50": None, "p95": None, "max": None}
    ms = np.asarray(latencies_ns, dtype=np.float64) / 1e6
    return {"p50": float(np.percentile(ms, 50)), "p95": float(np.percentile(ms, 95)), "max": float(ms.max())}


def check_deadlines(records: Sequence[TaskRecord], specs: Sequence[DeadlineSpec],
                    duration_s: Optional[float] = None) -> List[DeadlineViolation]:
    """
    One violation per late item plus one per stream below its required rate

    Args:
        records: task trace
        specs: requirements; streams without records count as zero throughput
        duration_s: observation window for rates (default: span of the trace)

    Returns:
        Violations ordered by spec, then seq
    """
    latencies = item_latencies(records)
    if duration_s is None:
        duration_s = max((r.end_ns for r in records), default=0) * 1e-9
    violations = []
    for spec in specs:
        per_item = latencies.get(spec.service, {})
        if spec.max_latency_ms is not None:
            limit_ns = spec.max_latency_ms * 1e6
            for seq, latency in per_item.items():
                if latency > limit_ns:
                    violations.append(DeadlineViolation(spec.service, "latency", seq, latency / 1e6,
                                                        spec.max_latency_ms))
        if spec.min_rate_hz is not None:
            rate = len(per_item) / duration_s if duration_s > 0 else 0.0
            if rate < spec.min_rate_hz:
                violations.append(DeadlineViolation(spec.service, "throughput", None, rate, spec.min_rate_hz))
    return violations
