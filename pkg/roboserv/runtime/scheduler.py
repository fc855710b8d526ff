"""Virtual-time integration of the sensor sources, the three services and the decision units

Every sensor item travels through its service's stage chain on the modeled
lanes. The first stage of a chain takes items from its source through the
stage's drop policy; later stages receive them through a one-item blocking
hand-off, so a chain's throughput is set by its slowest stage. With
`execute=True` the stages also run the real SLAM, CNN and speech code at
their completion instants.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import simpy
import simpy.rt
from tqdm import tqdm

from ..offload.client import SIM, OffloadTransportError, offload_call
from ..offload.endpoints import LOCAL_ENDPOINT
from ..offload.placement import Placement, PlacementPlan, decide_placement
from ..offload.protocol import AsrRequest, AsrResponse, ObjectRequest, ObjectResponse
from ..offload.server import ServiceModels, fixture_models
from ..sensors.audio import CHUNK_NS, compose_audio_track, concatenate_chunks
from ..sensors.camera import StereoRig
from ..sensors.imu import sample_imu
from ..sensors.stereo import StereoFrameSequence, frame_times
from ..sensors.trajectory import GroundTruth, generate_trajectory
from ..slam.pipeline import SlamPipeline, initial_state, position_errors
from ..slam.state import AgentState
from ..speech.commands import match_command
from ..speech.decoder import Transcript, WordSpan, recognize
from ..speech.vocabulary import SAMPLE_RATE
from ..vision.network import Label, infer
from ..vision.shapes import IMAGE_SIZE, SHAPE_LABELS, fixture_image
from .deadlines import check_deadlines, item_latencies, latency_percentiles
from .lanes import NETWORK_SLOTS, Lane, LaneConfig, QueueInbox, make_inbox, make_lanes
from .records import SERVICE_ORDER, DropPolicy, LaneKind, ServiceId, StageSpec, TaskRecord
from .report import RunReport, StreamStats
from .resources import STABLE_LOCALIZATION_FPS, active_profiles, battery_life_hours, combined_utilization, power_draw
from .units import ChassisCommand, ChassisLink, Endpointer, Navigator, react_to_labels

logger = logging.getLogger(__name__)

POSE_STREAM = "pose"
PROGRESS_STEP_NS = 100_000_000


@dataclass(frozen=True)
class SensorConfig:
    camera: bool = True
    imu: bool = True
    microphone: bool = True
    pixel_noise_std: float = 0.0
    audio_noise_std: float = 0.0

    def __post_init__(self):
        if self.pixel_noise_std < 0 or self.audio_noise_std < 0:
            raise ValueError("sensor noise levels must be >= 0")

    def to_dict(self) -> dict:
        return {"camera": self.camera, "imu": self.imu, "microphone": self.microphone,
                "pixel_noise_std": self.pixel_noise_std, "audio_noise_std": self.audio_noise_std}


@dataclass(frozen=True)
class Utterance:
    """Words played into the microphone starting at t_s"""
    t_s: float
    words: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if self.t_s < 0:
            raise ValueError(f"utterance time must be >= 0, got {self.t_s}")

    def to_dict(self) -> dict:
        return {"t_s": self.t_s, "words": list(self.words)}


@dataclass(frozen=True)
class SceneObject:
    """From t_s on, the object camera sees this shape (until the next entry)"""
    t_s: float
    shape: str

    def __post_init__(self):
        if self.shape not in SHAPE_LABELS:
            raise ValueError(f"shape must be one of {SHAPE_LABELS}, got {self.shape!r}")
        if self.t_s < 0:
            raise ValueError(f"scene time must be >= 0, got {self.t_s}")

    def to_dict(self) -> dict:
        return {"t_s": self.t_s, "shape": self.shape}


@dataclass
class ServiceConfig:
    """Stage chain and placement request of one service"""
    enabled: bool = True
    stages: List[StageSpec] = field(default_factory=list)
    placement: str = "auto"  # "auto", "local" or an endpoint name
    camera_divisor: int = 1  # camera-fed services take every n-th frame
    client_cost_ms: float = 1.0  # CPU bookkeeping per offloaded call
    imu_cost_ms: float = 0.2  # slam: per-sample propagation

    def __post_init__(self):
        if self.enabled and not self.stages:
            raise ValueError("an enabled service needs at least one stage")
        if self.camera_divisor < 1:
            raise ValueError(f"camera_divisor must be >= 1, got {self.camera_divisor}")
        if not self.client_cost_ms > 0 or not self.imu_cost_ms > 0:
            raise ValueError("client_cost_ms and imu_cost_ms must be positive")

    def to_dict(self) -> dict:
        return {"enabled": self.enabled, "stages": [s.to_dict() for s in self.stages],
                "placement": self.placement, "camera_divisor": self.camera_divisor,
                "client_cost_ms": self.client_cost_ms, "imu_cost_ms": self.imu_cost_ms}


def slam_cost_table(name: str) -> List[StageSpec]:
    """
    Calibrated SLAM stage tables

    cpu-only: one 100 ms CPU stage (10 FPS). gpu-frontend: feature
    extraction on the GPU, backend on the CPU with the 55.5 ms bottleneck
    (18 FPS). cpu-desktop: desktop reference, 15 FPS.
    """
    latest = DropPolicy.LATEST_ONLY
    tables = {
        "cpu-only": [StageSpec("frontend+backend", LaneKind.CPU, 100.0, latest)],
        "gpu-frontend": [StageSpec("frontend", LaneKind.GPU, 30.0, latest),
                         StageSpec("backend", LaneKind.CPU, 1000.0 / 18.0)],
        "cpu-desktop": [StageSpec("frontend+backend", LaneKind.CPU, 1000.0 / 15.0, latest)],
    }
    if name not in tables:
        raise ValueError(f"unknown SLAM cost table {name!r}; choose from {sorted(tables)}")
    return tables[name]


def default_services() -> Dict[ServiceId, ServiceConfig]:
    return {
        ServiceId.SLAM: ServiceConfig(stages=slam_cost_table("gpu-frontend")),
        ServiceId.VISION: ServiceConfig(stages=[
            StageSpec("cnn", LaneKind.GPU, 1000.0 / 30.0, DropPolicy.LATEST_ONLY),
            StageSpec("rules", LaneKind.CPU, 2.0),
        ], camera_divisor=6),
        ServiceId.SPEECH: ServiceConfig(stages=[StageSpec("decode", LaneKind.CPU, 100.0)]),
    }


@dataclass
class WorkItem:
    seq: int
    origin_ns: int
    payload: Any = None


@dataclass
class Stage:
    """A stage spec bound to its lane, with the item-dependent cost and completion hook"""
    spec: StageSpec
    lane: Lane
    cost: Optional[Callable[[WorkItem], int]] = None
    finish: Optional[Callable[[WorkItem], Any]] = None
    workers: int = 1  # concurrent items in flight

    def cost_ns(self, item: WorkItem) -> int:
        return self.cost(item) if self.cost is not None else self.spec.cost_ns


class StageChain:
    """One item stream flowing through an ordered list of stages"""

    def __init__(self, env: simpy.Environment, name: str, stages: Sequence[Stage],
                 records: List[TaskRecord], on_complete: Optional[Callable[[WorkItem, Any], None]] = None):
        self.env = env
        self.name = name
        self.stages = list(stages)
        self.records = records
        self.on_complete = on_complete
        self.inboxes = [make_inbox(env, self.stages[0].spec.drop_policy)]
        self.inboxes += [QueueInbox(env, capacity=1) for _ in self.stages[1:]]
        self.emitted = 0
        self.dropped = 0  # replaced in a latest-only inbox
        self.missed = 0  # failed offload calls
        self.completed = 0
        for index, stage in enumerate(self.stages):
            for _ in range(stage.workers):
                env.process(self._run(index))

    def offer(self, item: WorkItem) -> None:
        self.emitted += 1
        if self.inboxes[0].offer(item) is not None:
            self.dropped += 1

    def _run(self, index: int):
        stage = self.stages[index]
        last = index == len(self.stages) - 1
        while True:
            enqueue_ns, item = yield self.inboxes[index].get()
            try:
                cost = stage.cost_ns(item)
            except OffloadTransportError as exc:
                logger.warning("%s #%d missed: %s", self.name, item.seq, exc)
                self.missed += 1
                continue
            start, end = yield from stage.lane.execute(cost, stage.spec.priority)
            output = stage.finish(item) if stage.finish is not None else item.payload
            self.records.append(TaskRecord(self.name, stage.spec.name, item.seq, enqueue_ns, start, end,
                                           stage.lane.kind.value, last))
            if last:
                self.completed += 1
                if self.on_complete is not None:
                    self.on_complete(item, output)
            else:
                item.payload = output
                yield self.inboxes[index + 1].put(item)

    def stats(self, placement: str, duration_ns: int) -> StreamStats:
        """dropped covers replaced, missed and still-queued items, so emitted = processed + dropped"""
        latencies = list(item_latencies(r for r in self.records if r.service == self.name).get(self.name, {}).values())
        return StreamStats(placement, self.emitted, self.completed, self.emitted - self.completed, self.missed,
                           self.completed / (duration_ns * 1e-9) if duration_ns > 0 else 0.0,
                           latency_percentiles(latencies))


def scene_shape_at(scene: Sequence[SceneObject], t_ns: int) -> Optional[str]:
    current = None
    for obj in sorted(scene, key=lambda o: o.t_s):
        if obj.t_s * 1e9 <= t_ns:
            current = obj.shape
    return current


def scene_image(scene: Sequence[SceneObject], t_ns: int) -> np.ndarray:
    shape = scene_shape_at(scene, t_ns)
    return fixture_image(shape) if shape is not None else np.zeros((IMAGE_SIZE, IMAGE_SIZE))


def _truth_pose(gt: GroundTruth, t_ns: int) -> AgentState:
    k = gt.kinematics_at([t_ns])
    return AgentState(t_ns, float(k["x"][0]), float(k["y"][0]), float(k["vx"][0]), float(k["vy"][0]),
                      float(k["heading"][0]))


def resolve_placement(config) -> PlacementPlan:
    """Automatic placement for "auto" services, explicit endpoints otherwise"""
    auto = decide_placement(config.tolerances, config.endpoints, config.profiles)
    by_name = {e.name: e for e in config.endpoints}
    placements: Dict[ServiceId, Placement] = {}
    for service in SERVICE_ORDER:
        choice = config.services[service].placement
        if choice == "auto":
            placements[service] = auto.placements[service]
            continue
        endpoint = LOCAL_ENDPOINT if choice == "local" else by_name.get(choice)
        if endpoint is None or not endpoint.hosts(service):
            raise ValueError(f"services.{service.value}.placement: no endpoint {choice!r} hosting {service.value}")
        worst = endpoint.worst_case_ms(service)
        tolerance = config.tolerances.for_service(service)
        if worst > tolerance:
            logger.warning("%s pinned to %s although %g ms > %g ms", service.value, endpoint.name, worst, tolerance)
        placements[service] = Placement(service, endpoint, worst, tolerance, f"{endpoint.name}: configured")
    return PlacementPlan(placements)


class ScenarioRun:
    """Mutable state of one run; build with the config, then call run()"""

    def __init__(self, config, execute: bool = True, wall_clock: bool = False, offload_mode: str = SIM,
                 models: Optional[ServiceModels] = None, chassis_target=None):
        self.config = config
        self.execute = execute
        self.offload_mode = offload_mode
        self.duration_ns = int(round(config.duration_s * 1e9))
        self.env = simpy.rt.RealtimeEnvironment(factor=1e-9, strict=False) if wall_clock else simpy.Environment()
        self.lanes = make_lanes(self.env, config.lanes)
        self.records: List[TaskRecord] = []
        self.plan = resolve_placement(config)
        self.enabled = [s for s in SERVICE_ORDER if config.services[s].enabled]
        self.models = models
        self.gt = generate_trajectory(config.trajectory)
        self.rig = StereoRig()
        self.navigator = Navigator(self._goals(), config.navigation.params)
        self.chassis: List[ChassisCommand] = []
        self.link = ChassisLink(chassis_target) if chassis_target is not None else None
        self.labels: List[dict] = []
        self.transcripts: List[dict] = []
        self.poses = []
        self.pipeline: Optional[SlamPipeline] = None
        self.chains: Dict[str, StageChain] = {}
        self._last_reaction: Optional[str] = None
        self._build()

    # -- setup ---------------------------------------------------------------

    def _goals(self) -> List[Tuple[float, float]]:
        nav = self.config.navigation
        if nav.goals:
            return list(nav.goals)
        if self.config.trajectory.kind == "waypoint-path":
            return list(self.config.trajectory.waypoints)
        return []

    def _service_models(self) -> ServiceModels:
        if self.models is None:
            self.models = fixture_models()
        return self.models

    def _offloaded_stages(self, service: ServiceId, spec: "ServiceConfig", build_request, decode) -> List[Stage]:
        endpoint = self.plan.endpoint_of(service)
        model = endpoint.services[service]
        calls: Dict[int, Any] = {}

        def network_cost(item: WorkItem) -> int:
            if self.execute:
                result = offload_call(endpoint, build_request(item), self.offload_mode, item.seq,
                                      self._service_models())
                calls[item.seq] = decode(result.response)
            return int(round(model.sample_ms(service, item.seq) * 1e6))

        def network_finish(item: WorkItem):
            return calls.pop(item.seq, None)

        client = StageSpec("client", LaneKind.CPU, spec.client_cost_ms,
                           spec.stages[0].drop_policy, spec.stages[0].priority)
        network = StageSpec(f"network:{endpoint.name}", LaneKind.NETWORK, max(model.worst_case_ms, 1e-6))
        return [Stage(client, self.lanes[LaneKind.CPU]),
                Stage(network, self.lanes[LaneKind.NETWORK], network_cost, network_finish, NETWORK_SLOTS)]

    def _build(self) -> None:
        cfg = self.config
        sensors = cfg.sensors
        if ServiceId.SLAM in self.enabled:
            self._build_slam()
        if ServiceId.VISION in self.enabled and sensors.camera:
            self._build_vision()
        if ServiceId.SPEECH in self.enabled and sensors.microphone:
            self._build_speech()
        if sensors.imu and ServiceId.SLAM in self.enabled:
            self.env.process(self._imu_source())
        if "slam" in self.chains or "vision" in self.chains:
            self.env.process(self._camera_source())
        if "speech" in self.chains:
            self.env.process(self._microphone_source())
        self.env.process(self._navigation_loop())

    def _build_slam(self) -> None:
        cfg = self.config
        spec = cfg.services[ServiceId.SLAM]
        if self.execute:
            self.pipeline = SlamPipeline(initial_state(self.gt), cfg.slam, self.rig)
        self.imu = sample_imu(self.gt, cfg.imu, cfg.seed)
        pose_stage = Stage(StageSpec("propagate", LaneKind.CPU, spec.imu_cost_ms, DropPolicy.QUEUE, 0),
                           self.lanes[LaneKind.CPU], finish=self._propagate)
        self.chains[POSE_STREAM] = StageChain(self.env, POSE_STREAM, [pose_stage], self.records)
        if not self.config.sensors.camera:
            return
        self.frames = StereoFrameSequence(self.gt, cfg.seed, self.rig, cfg.sensors.pixel_noise_std)
        stages = [Stage(s, self.lanes[s.lane]) for s in spec.stages]
        if self.execute:
            if len(stages) == 1:
                stages[0].finish = lambda item: self._slam_backend(item, self._slam_frontend(item))
            else:
                stages[0].finish = self._slam_frontend
                stages[-1].finish = lambda item: self._slam_backend(item, item.payload)
        self.chains["slam"] = StageChain(self.env, "slam", stages, self.records)

    def _build_vision(self) -> None:
        spec = self.config.services[ServiceId.VISION]
        if self.plan.placements[ServiceId.VISION].offloaded:
            stages = self._offloaded_stages(
                ServiceId.VISION, spec,
                lambda item: ObjectRequest.from_image(scene_image(self.config.scene, item.origin_ns)),
                lambda response: ([Label(n, s) for n, s in response.labels]
                                  if isinstance(response, ObjectResponse) else None))
        else:
            stages = [Stage(s, self.lanes[s.lane]) for s in spec.stages]
            if self.execute:
                stages[0].finish = lambda item: infer(self._service_models().network,
                                                      scene_image(self.config.scene, item.origin_ns))
        self.chains["vision"] = StageChain(self.env, "vision", stages, self.records,
                                          self._on_labels if self.execute else None)

    def _build_speech(self) -> None:
        cfg = self.config
        spec = cfg.services[ServiceId.SPEECH]
        self.audio = compose_audio_track([(u.t_s, u.words) for u in cfg.utterances], cfg.duration_s,
                                         cfg.sensors.audio_noise_std, cfg.seed)
        self.endpointer = Endpointer(cfg.endpointing)
        if self.plan.placements[ServiceId.SPEECH].offloaded:
            stages = self._offloaded_stages(
                ServiceId.SPEECH, spec,
                lambda item: AsrRequest(SAMPLE_RATE, concatenate_chunks(item.payload)),
                lambda response: (Transcript([WordSpan(w, 0, 0, 0.0) for w in response.text.split()])
                                  if isinstance(response, AsrResponse) else None))
        else:
            stages = [Stage(s, self.lanes[s.lane]) for s in spec.stages]
            if self.execute:
                stages[-1].finish = lambda item: recognize(self._service_models().speech, item.payload)
        self.chains["speech"] = StageChain(self.env, "speech", stages, self.records,
                                          self._on_transcript if self.execute else None)

    # -- stage hooks ---------------------------------------------------------

    def _propagate(self, item: WorkItem):
        if self.pipeline is not None:
            self.poses.append(self.pipeline.on_imu(item.payload))
        return None

    def _slam_frontend(self, item: WorkItem):
        return self.pipeline.frontend(self.frames.render(item.payload))

    def _slam_backend(self, item: WorkItem, observations):
        return self.pipeline.backend(observations, item.origin_ns)

    def _on_labels(self, item: WorkItem, labels) -> None:
        if not labels:
            return
        top = labels[0]
        self.labels.append({"t_ns": self.env.now, "seq": item.seq, "label": top.name, "score": top.score})
        action = react_to_labels(labels, self.config.navigation.rules)
        if action is not None and top.name != self._last_reaction:
            self.navigator.react(action, self.env.now, f"{top.name} {top.score:.3f}")
        self._last_reaction = top.name if action is not None else None

    def _on_transcript(self, item: WorkItem, transcript) -> None:
        if transcript is None:
            return
        self.transcripts.append({"t_ns": self.env.now, "seq": item.seq, "text": transcript.text})
        command = match_command(transcript)
        if command is not None:
            self.navigator.handle_command(command, self.env.now)

    # -- sources -------------------------------------------------------------

    def _wait_until(self, t_ns: int):
        if t_ns > self.env.now:
            yield self.env.timeout(t_ns - self.env.now)

    def _imu_source(self):
        chain = self.chains[POSE_STREAM]
        for k, sample in enumerate(self.imu):
            yield from self._wait_until(sample.t_ns)
            chain.offer(WorkItem(k, sample.t_ns, sample))

    def _camera_source(self):
        slam = self.chains.get("slam")
        vision = self.chains.get("vision")
        divisor = self.config.services[ServiceId.VISION].camera_divisor
        for n, t_ns in enumerate(frame_times(self.duration_ns)):
            t_ns = int(t_ns)
            yield from self._wait_until(t_ns)
            if slam is not None:
                slam.offer(WorkItem(n, t_ns, n))
            if vision is not None and n % divisor == 0:
                vision.offer(WorkItem(n // divisor, t_ns, n))

    def _microphone_source(self):
        chain = self.chains["speech"]
        seq = 0
        for chunk in self.audio:
            available = chunk.t_ns + CHUNK_NS
            if available >= self.duration_ns:
                break
            yield from self._wait_until(available)
            utterance = self.endpointer.push(chunk)
            if utterance is not None:
                chain.offer(WorkItem(seq, self.env.now, utterance))
                seq += 1

    def _navigation_loop(self):
        period = int(round(1e9 / self.config.navigation.params.rate_hz))
        t_ns = 0
        while t_ns < self.duration_ns:
            yield from self._wait_until(t_ns)
            if self.pipeline is not None and self.poses:
                pose = self.pipeline.state
            else:
                pose = _truth_pose(self.gt, t_ns)
            command = self.navigator.step(pose, t_ns)
            self.chassis.append(command)
            if self.link is not None:
                self.link.send(command)
            t_ns += period

    # -- run -----------------------------------------------------------------

    def run(self, progress: bool = False) -> RunReport:
        try:
            with tqdm(total=self.duration_ns // 1_000_000, desc=self.config.name, unit="ms",
                      disable=not progress) as bar:
                t = 0
                while t < self.duration_ns:
                    step = min(t + PROGRESS_STEP_NS, self.duration_ns)
                    self.env.run(until=step)
                    bar.update((step - t) // 1_000_000)
                    t = step
        finally:
            if self.link is not None:
                self.link.close()
        return self._report()

    def _report(self) -> RunReport:
        cfg = self.config
        report = RunReport(cfg.name, cfg.seed, cfg.duration_s)
        placements = {s: self.plan.placements[s] for s in self.enabled}
        for name, chain in self.chains.items():
            service = ServiceId.SLAM if name == POSE_STREAM else ServiceId(name)
            report.streams[name] = chain.stats(self.plan.endpoint_of(service).name, self.duration_ns)
        report.placements = {s.value: p.endpoint.name for s, p in placements.items()}
        report.lanes = {kind.value: {"slots": lane.slots, "busy_ns": lane.busy_ns,
                                     "utilization": lane.utilization(self.duration_ns),
                                     "peak_occupancy": lane.peak_occupancy}
                        for kind, lane in self.lanes.items()}
        offloaded = [s for s, p in placements.items() if p.offloaded]
        active = active_profiles(self.enabled, offloaded, cfg.profiles)
        cpu, gpu, mem = combined_utilization(list(active.values()), cfg.profiles.contention)
        report.utilization = {"cpu_pct": cpu, "gpu_pct": gpu, "mem_pct": mem}
        report.power_w = power_draw(self.enabled, offloaded, cfg.profiles)
        report.battery_wh = cfg.battery_wh
        report.battery_hours = battery_life_hours(report.power_w, cfg.battery_wh)
        report.stable_localization = report.rate("slam") >= STABLE_LOCALIZATION_FPS
        if self.pipeline is not None and self.poses:
            errors = position_errors(self.poses, self.gt)
            report.slam_rmse_m = float(np.sqrt(np.mean(errors ** 2)))
        report.violations = check_deadlines(self.records, cfg.deadlines, cfg.duration_s)
        report.labels = self.labels
        report.transcripts = self.transcripts
        report.actions = list(self.navigator.actions)
        report.records = self.records
        report.chassis = self.chassis
        report.poses = self.poses
        return report


def run_scenario(config, execute: bool = True, progress: bool = False, wall_clock: bool = False,
                 offload_mode: str = SIM, models: Optional[ServiceModels] = None,
                 chassis_target=None) -> RunReport:
    """
    Run one scenario in virtual time

    Args:
        config: ScenarioConfig
        execute: also run the real SLAM / CNN / speech code (timing is
            modeled either way)
        progress: tqdm bar over virtual time
        wall_clock: pace virtual time against the wall clock (demo mode)
        offload_mode: "sim" or "socket" for offloaded calls
        models: vision and speech models (fixture models by default)
        chassis_target: file path or host:port for the chassis command log

    Returns:
        RunReport (records, chassis commands and poses attached)
    """
    run = ScenarioRun(config, execute, wall_clock, offload_mode, models, chassis_target)
    report = run.run(progress)
    logger.info("scenario %s: %s", config.name,
                ", ".join(f"{name} {s.achieved_rate_hz:.1f}/s" for name, s in report.streams.items()))
    return report


def simulate_chain(emit_times_ns: Sequence[int], stages: Sequence[StageSpec], duration_ns: int,
                   lanes: Optional[LaneConfig] = None, name: str = "chain") -> Tuple[StageChain, List[TaskRecord]]:
    """Timing-only run of one stage chain fed at the given instants"""
    env = simpy.Environment()
    bound = make_lanes(env, lanes or LaneConfig())
    records: List[TaskRecord] = []
    chain = StageChain(env, name, [Stage(s, bound[s.lane]) for s in stages], records)

    def source():
        for seq, t_ns in enumerate(emit_times_ns):
            if t_ns >= duration_ns:
                break
            if t_ns > env.now:
                yield env.timeout(t_ns - env.now)
            chain.offer(WorkItem(seq, int(t_ns)))

    env.process(source())
    env.run(until=duration_ns)
    return chain, records
