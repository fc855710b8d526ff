import numpy as np
import pytest
import uproot
from scipy.io import wavfile

from roboserv.io.sensor_dump import GROUND_TRUTH_COLUMNS, IMU_COLUMNS, dump_audio_wav, dump_ground_truth_csv, \
    dump_imu_csv
from roboserv.io.trace_writer import LANE_CODES, name_tables, read_trace_csv, trace_branches, write_ntuple, \
    write_trace_csv
from roboserv.runtime.records import TaskRecord
from roboserv.runtime.report import RunReport
from roboserv.runtime.units import ChassisCommand
from roboserv.sensors.audio import concatenate_chunks, synthesize_audio
from roboserv.speech.vocabulary import SAMPLE_RATE


def _records():
    return [
        TaskRecord("vision", "cnn", 0, 0, 1_000, 34_000_000, "gpu"),
        TaskRecord("pose", "propagate", 0, 0, 0, 200_000, "cpu", final=True),
        TaskRecord("vision", "rules", 0, 34_000_000, 34_000_000, 36_000_000, "cpu", final=True),
        TaskRecord("speech", "network:lan", 3, 5_000, 6_000, 200_006_000, "network", final=True),
    ]


def test_trace_csv_is_sorted_by_end_time(tmp_path):
    path = write_trace_csv(_records(), tmp_path / "trace.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "service,stage,seq,lane,enqueue_ns,start_ns,end_ns,final"
    assert lines[1] == "pose,propagate,0,cpu,0,0,200000,1"
    records = read_trace_csv(path)
    assert [r.end_ns for r in records] == [200_000, 34_000_000, 36_000_000, 200_006_000]
    assert sorted(records, key=lambda r: r.end_ns) == sorted(_records(), key=lambda r: r.end_ns)


def test_empty_trace_has_header_only(tmp_path):
    path = write_trace_csv([], tmp_path / "empty.csv")
    assert path.read_text(encoding="utf-8") == "service,stage,seq,lane,enqueue_ns,start_ns,end_ns,final\n"
    assert read_trace_csv(path) == []


def test_trace_branches_index_name_tables():
    records = _records()
    streams, stages = name_tables(records)
    assert streams == ["pose", "speech", "vision"]
    branches = trace_branches(records)
    assert [streams[i] for i in branches["stream"]] == [r.service for r in records]
    assert [stages[i] for i in branches["stage"]] == [r.stage for r in records]
    assert list(branches["lane"]) == [LANE_CODES[r.lane] for r in records]
    assert branches["final"].dtype == np.bool_


def test_ntuple_trees(tmp_path):
    report = RunReport("io", 1, 1.0)
    report.records = _records()
    report.chassis = [ChassisCommand(0, 0.5, 0.0), ChassisCommand(50_000_000, 0.0, 0.0)]
    path = write_ntuple(report, tmp_path / "run.root")
    with uproot.open(path) as f:
        keys = set(f.keys(cycle=False))
        assert {"trace", "chassis", "trace_streams", "trace_stages"} <= keys
        assert "poses" not in keys
        trace = f["trace"].arrays(library="np")
        assert list(trace["end_ns"]) == [r.end_ns for r in report.records]
        assert str(f["trace_streams"]).split(",") == ["pose", "speech", "vision"]
        chassis = f["chassis"].arrays(library="np")
        assert list(chassis["linear"]) == [0.5, 0.0]


def test_imu_and_ground_truth_dumps(tmp_path, circle_gt, clean_imu):
    imu_path = dump_imu_csv(clean_imu, tmp_path / "imu.csv")
    lines = imu_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(IMU_COLUMNS)
    assert len(lines) == len(clean_imu) + 1
    assert int(lines[1].split(",")[0]) == clean_imu[0].t_ns

    gt_path = dump_ground_truth_csv(circle_gt, tmp_path / "gt.csv", stride=10)
    lines = gt_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(GROUND_TRUTH_COLUMNS)
    assert len(lines) - 1 == -(-len(circle_gt.t_ns) // 10)
    with pytest.raises(ValueError):
        dump_ground_truth_csv(circle_gt, tmp_path / "bad.csv", stride=0)


def test_audio_wav_reads_back(tmp_path):
    chunks = synthesize_audio(["go", "stop"], seed=6, noise_std=50.0)
    rate, data = wavfile.read(dump_audio_wav(chunks, tmp_path / "mic.wav"))
    assert rate == SAMPLE_RATE
    assert data.dtype == np.int16
    assert np.array_equal(data, concatenate_chunks(chunks).astype(np.int16))
