import dataclasses
import math

import numpy as np
import pytest

from roboserv.config.fixtures import command_path_scenario, reaction_scenario, slam_only_scenario
from roboserv.config.scenario_config import ScenarioConfig, load_scenario
from roboserv.runtime.deadlines import DeadlineSpec, check_deadlines, item_latencies, latency_percentiles
from roboserv.runtime.lanes import LaneConfig
from roboserv.runtime.records import DropPolicy, LaneKind, ServiceId, StageSpec, TaskRecord
from roboserv.runtime.resources import (
    Contention,
    ProfileTable,
    ResourceProfile,
    battery_life_hours,
    combined_utilization,
    power_draw,
)
from roboserv.runtime.scheduler import SensorConfig, ServiceConfig, run_scenario, simulate_chain, slam_cost_table
from roboserv.runtime.units import (
    ChassisCommand,
    ChassisLink,
    Endpointer,
    Navigator,
    ReactionRule,
    navigation_step,
    react_to_labels,
)
from roboserv.sensors.audio import synthesize_audio
from roboserv.sensors.stereo import frame_times
from roboserv.speech.commands import Command
from roboserv.speech.decoder import recognize
from roboserv.utils.file_utils import find_scenario
from roboserv.vision.network import Label

TEN_S = 10_000_000_000


def _slam_rate(table, duration_ns=TEN_S):
    chain, _ = simulate_chain(frame_times(duration_ns), slam_cost_table(table), duration_ns)
    return chain.completed / (duration_ns * 1e-9)


def test_cpu_only_slam_runs_at_10_fps():
    assert _slam_rate("cpu-only") == pytest.approx(10.0, abs=0.5)


def test_gpu_frontend_slam_runs_at_18_fps():
    assert _slam_rate("gpu-frontend") == pytest.approx(18.0, abs=0.9)


def test_desktop_slam_runs_at_15_fps():
    assert _slam_rate("cpu-desktop") == pytest.approx(15.0, abs=0.5)


def test_stable_localization_only_with_gpu_frontend():
    reports = {table: run_scenario(slam_only_scenario(table), execute=False) for table in ("cpu-only", "gpu-frontend")}
    assert not reports["cpu-only"].stable_localization
    assert reports["gpu-frontend"].stable_localization
    assert reports["gpu-frontend"].placements == {"slam": "local"}


def test_rate_never_rises_with_stage_cost():
    rng = np.random.default_rng(50)
    duration = 2_000_000_000
    times = frame_times(duration)
    for _ in range(60):
        a, b = np.sort(rng.uniform(1.0, 200.0, 2))
        fast, _ = simulate_chain(times, [StageSpec("s", LaneKind.CPU, float(a), DropPolicy.LATEST_ONLY)], duration)
        slow, _ = simulate_chain(times, [StageSpec("s", LaneKind.CPU, float(b), DropPolicy.LATEST_ONLY)], duration)
        assert slow.completed <= fast.completed


def test_chain_conservation_and_lane_accounting():
    chain, records = simulate_chain(frame_times(TEN_S), slam_cost_table("cpu-only"), TEN_S)
    assert chain.emitted == 600
    # the rest is either waiting in the latest-only slot or still running
    assert chain.emitted - chain.completed - chain.dropped in (0, 1, 2)
    stats = chain.stats("local", TEN_S)
    assert stats.emitted == stats.processed + stats.dropped
    assert stats.latency_ms["max"] <= 100.0 + 1000.0 / 60.0
    assert all(r.lane == "cpu" and r.final for r in records)
    assert all(r.run_ns == 100_000_000 for r in records)
    starts = [r.start_ns for r in records]
    ends = [r.end_ns for r in records]
    assert all(s >= e for s, e in zip(starts[1:], ends))


def test_queue_policy_keeps_every_item():
    times = [i * 10_000_000 for i in range(50)]
    chain, records = simulate_chain(times, [StageSpec("work", LaneKind.CPU, 5.0)], TEN_S)
    assert chain.completed == 50
    assert chain.dropped == 0
    assert [r.seq for r in records] == list(range(50))


def test_single_worker_serializes_a_burst():
    times = [0] * 10
    stage = StageSpec("burst", LaneKind.CPU, 10.0)
    _, records = simulate_chain(times, [stage], TEN_S, LaneConfig(cpu_slots=4))
    # a single queue-fed stage has one worker, whatever the lane size
    assert sorted(r.end_ns for r in records) == [(k + 1) * 10_000_000 for k in range(10)]
    with pytest.raises(ValueError):
        LaneConfig(cpu_slots=0)


def test_gpu_and_cpu_stages_pipeline():
    chain, records = simulate_chain(frame_times(TEN_S), slam_cost_table("gpu-frontend"), TEN_S)
    lanes = {r.stage: r.lane for r in records}
    assert lanes == {"frontend": "gpu", "backend": "cpu"}
    finals = [r for r in records if r.final]
    assert len(finals) == chain.completed
    for seq, latency in item_latencies(records)["chain"].items():
        assert latency >= 30_000_000 + 55_555_556


def _record(seq, enqueue_ms, end_ms, service="vision", final=True):
    return TaskRecord(service, "cnn", seq, int(enqueue_ms * 1e6), int(enqueue_ms * 1e6), int(end_ms * 1e6),
                      "gpu", final)


def test_late_item_is_one_violation():
    records = [_record(0, 0, 50), _record(1, 100, 220), _record(2, 200, 290)]
    violations = check_deadlines(records, [DeadlineSpec("vision", 100.0)])
    assert len(violations) == 1
    v = violations[0]
    assert (v.service, v.kind, v.seq) == ("vision", "latency", 1)
    assert v.value == pytest.approx(120.0)
    assert check_deadlines(records, [DeadlineSpec("vision", 150.0)]) == []


def test_fast_source_on_slow_stage_misses_throughput():
    times = [k * 1_000_000 for k in range(1000)]
    _, records = simulate_chain(times, [StageSpec("work", LaneKind.CPU, 2.0)], 1_000_000_000, name="sensor")
    violations = check_deadlines(records, [DeadlineSpec("sensor", None, 1000.0)], 1.0)
    assert [v.kind for v in violations] == ["throughput"]
    assert violations[0].value < 1000.0


def test_missing_stream_counts_as_zero_rate():
    violations = check_deadlines([], [DeadlineSpec("speech", 500.0, 1.0)], 10.0)
    assert len(violations) == 1 and violations[0].value == 0.0


def test_item_latency_spans_all_stages():
    records = [
        TaskRecord("slam", "frontend", 3, 0, 10, 40, "gpu"),
        TaskRecord("slam", "backend", 3, 40, 50, 90, "cpu", final=True),
        TaskRecord("slam", "frontend", 4, 20, 40, 70, "gpu"),
    ]
    assert item_latencies(records) == {"slam": {3: 90}}
    with pytest.raises(ValueError):
        TaskRecord("slam", "x", 0, 10, 5, 20, "cpu")


def test_latency_percentiles():
    assert latency_percentiles([]) == {"p50": None, "p95": None, "max": None}
    stats = latency_percentiles([k * 1_000_000 for k in range(1, 101)])
    assert stats["p50"] == pytest.approx(50.5)
    assert stats["max"] == 100.0
    with pytest.raises(ValueError):
        DeadlineSpec("vision", 0.0)


def test_combined_utilization_of_all_local_services():
    table = ProfileTable()
    profiles = [table.profile(s) for s in ServiceId]
    cpu, gpu, mem = combined_utilization(profiles, table.contention)
    assert cpu == pytest.approx(60.0)
    assert gpu == pytest.approx(72.0)
    assert mem == pytest.approx(28.0)
    # one service alone is not discounted
    assert combined_utilization([table.profile(ServiceId.SLAM)], table.contention) == (28.0, 2.0, 4.0)
    heavy = [ResourceProfile(90.0, 90.0, 90.0)] * 3
    assert combined_utilization(heavy, Contention(1.0)) == (100.0, 100.0, 100.0)


def test_power_and_battery():
    assert power_draw(list(ServiceId)) == pytest.approx(11.0)
    assert power_draw(list(ServiceId), [ServiceId.VISION, ServiceId.SPEECH]) == pytest.approx(5.0)
    assert power_draw([ServiceId.SLAM]) == pytest.approx(5.0)
    assert power_draw([]) == pytest.approx(2.0)
    assert battery_life_hours(11.0, 24.0) == pytest.approx(24.0 / 11.0)
    with pytest.raises(ValueError):
        battery_life_hours(0.0)
    with pytest.raises(ValueError):
        Contention(cpu=1.2)
    with pytest.raises(ValueError):
        ResourceProfile(cpu_pct=120.0)
    with pytest.raises(ValueError):
        ProfileTable(local={}).profile(ServiceId.SLAM)


class _Pose:
    def __init__(self, x, y, heading, t_ns=0):
        self.x, self.y, self.heading, self.t_ns = x, y, heading, t_ns


def test_navigation_step():
    assert navigation_step(_Pose(1.0, 1.0, 0.0), (1.02, 1.0)).is_zero
    ahead = navigation_step(_Pose(0.0, 0.0, 0.0), (3.0, 0.0))
    assert ahead.linear == pytest.approx(1.0)
    assert ahead.angular == pytest.approx(0.0)
    near = navigation_step(_Pose(0.0, 0.0, 0.0), (0.5, 0.0))
    assert near.linear == pytest.approx(0.4)
    behind = navigation_step(_Pose(0.0, 0.0, 0.0), (-2.0, 0.1))
    assert behind.linear == 0.0
    assert behind.angular == pytest.approx(1.0)


def test_navigator_stop_go_and_turns():
    nav = Navigator([(5.0, 0.0)])
    pose = _Pose(0.0, 0.0, 0.0)
    assert not nav.step(pose, 0).is_zero
    nav.handle_command(Command.STOP, 100)
    assert nav.step(pose, 200).is_zero
    nav.handle_command(Command.GO, 300)
    assert not nav.step(pose, 400).is_zero
    nav.handle_command(Command.LEFT, 500)
    turn_ns = int(round(math.pi / 2 * 1e9))
    assert nav.step(pose, 600) == ChassisCommand(600, 0.0, 1.0)
    assert nav.step(pose, 600 + turn_ns - 1).angular == 1.0
    assert nav.step(pose, 600 + turn_ns).angular == 0.0
    assert [a.action for a in nav.actions] == ["stop", "go", "left"]


def test_navigator_pops_reached_goals():
    nav = Navigator([(0.0, 0.0), (3.0, 0.0)])
    command = nav.step(_Pose(0.0, 0.0, 0.0), 10)
    assert command.linear > 0
    assert nav.goal == (3.0, 0.0)
    assert nav.actions[0].action == "goal-reached"


def test_react_to_labels():
    rules = [ReactionRule("disk", "greet", 0.6), ReactionRule("cross", "stop", 0.6)]
    assert react_to_labels([Label("cross", 0.9), Label("disk", 0.1)], rules) == "stop"
    assert react_to_labels([Label("cross", 0.5), Label("disk", 0.4)], rules) is None
    assert react_to_labels([Label("square", 0.99)], rules) is None
    assert react_to_labels([], rules) is None
    with pytest.raises(ValueError):
        ReactionRule("disk", "greet", 1.5)


def test_endpointer_cuts_one_utterance(models):
    chunks = synthesize_audio(["go"], seed=8) + synthesize_audio([], seed=8)
    endpointer = Endpointer()
    utterances = [u for u in (endpointer.push(c) for c in chunks) if u is not None]
    assert len(utterances) == 1
    assert recognize(models.speech, utterances[0]).word_list == ["go"]


def test_chassis_link_writes_lines(tmp_path):
    path = tmp_path / "chassis.log"
    with ChassisLink(path) as link:
        link.send(ChassisCommand(0, 0.5, 0.0))
        link.send(ChassisCommand(50_000_000, 0.25, -1.0))
    assert path.read_text().splitlines() == ["0,0.500000,0.000000", "50000000,0.250000,-1.000000"]


@pytest.mark.parametrize("name", ["all-local", "lan-offload", "wan-only"])
def test_bundled_scenarios_are_deterministic(name):
    config = load_scenario(find_scenario(name))
    first = run_scenario(config, execute=False)
    second = run_scenario(config, execute=False)
    assert first.to_json() == second.to_json()
    assert first.records == second.records
    assert first.chassis == second.chassis


def test_all_local_fixture_numbers():
    report = run_scenario(load_scenario(find_scenario("all-local")), execute=False)
    assert report.placements == {"slam": "local", "vision": "local", "speech": "local"}
    assert report.utilization["cpu_pct"] == pytest.approx(60.0)
    assert report.utilization["gpu_pct"] == pytest.approx(72.0)
    assert report.utilization["mem_pct"] == pytest.approx(28.0)
    assert report.power_w == pytest.approx(11.0)
    assert report.battery_hours == pytest.approx(24.0 / 11.0)
    assert report.stable_localization
    assert report.streams["pose"].processed == 2000
    assert report.streams["vision"].emitted == 100
    assert report.violation_count == 0
    for stats in report.streams.values():
        assert stats.emitted == stats.processed + stats.dropped


def test_lan_offload_fixture_numbers():
    report = run_scenario(load_scenario(find_scenario("lan-offload")), execute=False)
    assert report.placements == {"slam": "local", "vision": "lan", "speech": "lan"}
    assert report.power_w == pytest.approx(5.0)
    assert report.battery_hours == pytest.approx(4.8)
    assert report.streams["vision"].latency_ms["max"] <= 110.0
    assert report.lanes["network"]["busy_ns"] > 0
    assert report.violation_count == 0


def test_wan_only_keeps_everything_local():
    report = run_scenario(load_scenario(find_scenario("wan-only")), execute=False)
    assert set(report.placements.values()) == {"local"}
    assert report.power_w == pytest.approx(11.0)


def test_spoken_stop_halts_the_chassis(models):
    config = dataclasses.replace(command_path_scenario(stop_at_s=1.0, duration_s=3.0),
                                 sensors=SensorConfig(camera=False))
    report = run_scenario(config, models=models)
    stops = [a for a in report.actions if a.action == "stop"]
    assert len(stops) == 1
    assert report.transcripts[0]["text"] == "stop"
    stop_ns = stops[0].t_ns
    assert 1_000_000_000 < stop_ns < 2_000_000_000
    before = [c for c in report.chassis if c.t_ns < stop_ns]
    after = [c for c in report.chassis if c.t_ns > stop_ns]
    assert any(not c.is_zero for c in before)
    assert after and all(c.is_zero for c in after)


def test_vision_reacts_once_per_shape(models):
    report = run_scenario(reaction_scenario(), models=models)
    assert [(a.source, a.action) for a in report.actions] == [("vision", "greet"), ("vision", "stop")]
    assert {entry["label"] for entry in report.labels} == {"disk", "cross"}


def test_timing_only_run_records_no_decisions():
    report = run_scenario(reaction_scenario(), execute=False)
    assert report.labels == [] and report.actions == []
    assert report.streams["vision"].processed > 0


def test_empty_scenario_reports_idle_power():
    services = {s: ServiceConfig(enabled=False) for s in ServiceId}
    report = run_scenario(ScenarioConfig(name="empty", duration_s=1.0, services=services))
    assert report.streams == {}
    assert report.placements == {}
    assert report.power_w == pytest.approx(2.0)
    assert report.battery_hours == pytest.approx(12.0)
    assert not report.stable_localization
    assert report.violations == []
    assert report.rate("slam") == 0.0


@pytest.mark.slow
def test_full_execution_is_deterministic(models):
    config = load_scenario(find_scenario("all-local"))
    first = run_scenario(config, models=models)
    second = run_scenario(config, models=models)
    assert first.to_json() == second.to_json()
    assert first.slam_rmse_m is not None and first.slam_rmse_m < 1.0
    assert [t["text"] for t in first.transcripts] == ["go", "left", "stop"]
