"""Task trace CSV and ROOT ntuple exports of a run"""

import csv
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import uproot

from ..runtime.records import TRACE_COLUMNS, TaskRecord
from ..runtime.report import RunReport
from ..slam.update import CORRECTED

LANE_CODES = {"cpu": 0, "gpu": 1, "network": 2}


def write_trace_csv(records: Sequence[TaskRecord], path: Union[str, Path]) -> Path:
    """One row per stage execution, columns in TRACE_COLUMNS order, sorted by end time"""
    path = Path(path)
    ordered = sorted(records, key=lambda r: (r.end_ns, r.start_ns, r.service, r.seq, r.stage))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in ordered:
            writer.writerow(rec.as_row())
    return path


def read_trace_csv(path: Union[str, Path]) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return [TaskRecord(row["service"], row["stage"], int(row["seq"]), int(row["enqueue_ns"]),
                           int(row["start_ns"]), int(row["end_ns"]), row["lane"], row["final"] == "1")
                for row in reader]


def name_tables(records: Sequence[TaskRecord]) -> Tuple[List[str], List[str]]:
    return sorted({r.service for r in records}), sorted({r.stage for r in records})


def trace_branches(records: Sequence[TaskRecord]) -> Dict[str, np.ndarray]:
    """Columnar trace; stream and stage names become indices into the sorted name tables"""
    streams, stages = name_tables(records)
    return {
        "stream": np.array([streams.index(r.service) for r in records], dtype=np.int32),
        "stage": np.array([stages.index(r.stage) for r in records], dtype=np.int32),
        "seq": np.array([r.seq for r in records], dtype=np.int64),
        "lane": np.array([LANE_CODES.get(r.lane, -1) for r in records], dtype=np.int32),
        "enqueue_ns": np.array([r.enqueue_ns for r in records], dtype=np.int64),
        "start_ns": np.array([r.start_ns for r in records], dtype=np.int64),
        "end_ns": np.array([r.end_ns for r in records], dtype=np.int64),
        "final": np.array([r.final for r in records], dtype=np.bool_),
    }


def write_ntuple(report: RunReport, output_file: Union[str, Path]) -> Path:
    """
    Write the run as a ROOT file

    Trees: `trace` (one entry per stage execution), `poses` (SLAM estimate
    per IMU sample) and `chassis` (navigation output). The stream and stage
    name tables the trace indices refer to are stored as comma-separated
    strings `trace_streams` and `trace_stages`.
    """
    output_file = Path(output_file)
    poses = [p.state for p in report.poses]
    with uproot.recreate(output_file) as root_file:
        if report.records:
            root_file["trace"] = trace_branches(report.records)
            streams, stages = name_tables(report.records)
            root_file["trace_streams"] = ",".join(streams)
            root_file["trace_stages"] = ",".join(stages)
        if poses:
            root_file["poses"] = {
                "t_ns": np.array([s.t_ns for s in poses], dtype=np.int64),
                "x": np.array([s.x for s in poses], dtype=np.float64),
                "y": np.array([s.y for s in poses], dtype=np.float64),
                "heading": np.array([s.heading for s in poses], dtype=np.float64),
                "corrected": np.array([p.flag == CORRECTED for p in report.poses], dtype=np.bool_),
            }
        if report.chassis:
            root_file["chassis"] = {
                "t_ns": np.array([c.t_ns for c in report.chassis], dtype=np.int64),
                "linear": np.array([c.linear for c in report.chassis], dtype=np.float64),
                "angular": np.array([c.angular for c in report.chassis], dtype=np.float64),
            }
    return output_file
