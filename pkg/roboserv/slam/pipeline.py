"""SLAM pipeline: IMU propagation with delayed stereo corrections"""

import logging
from collections import deque
from dataclasses import dataclass, replace
from typing import Deque, List, Optional, Sequence, Tuple

import numpy as np

from ..sensors.camera import StereoRig
from ..sensors.imu import ImuSample
from ..sensors.stereo import StereoFrame
from ..sensors.trajectory import GroundTruth
from .features import extract_features
from .matching import match_features
from .propagation import propagate_to
from .state import AgentState, SlamParams
from .triangulation import Observation, triangulate_frame
from .update import PROPAGATION_ONLY, PoseCorrection, extend_map, update_pose
from .world_map import WorldMap

logger = logging.getLogger(__name__)

HISTORY_SAMPLES = 800  # 4 s at 200 Hz


@dataclass(frozen=True)
class PoseRecord:
    state: AgentState
    flag: str  # flag of the latest correction applied since the previous record


def initial_state(gt: GroundTruth) -> AgentState:
    k = gt.kinematics_at([0])
    return AgentState(0, float(k["x"][0]), float(k["y"][0]), float(k["vx"][0]), float(k["vy"][0]),
                      float(k["heading"][0]))


class SlamPipeline:
    """
    Owns the SLAM state and the world map

    on_imu() emits one state per IMU sample. on_frame() (or frontend() then
    backend()) corrects the pose at the frame timestamp and re-propagates the
    buffered IMU samples up to the newest state, so a frame may be applied
    after later IMU samples have already been consumed.
    """

    def __init__(self, start: AgentState, params: Optional[SlamParams] = None,
                 rig: Optional[StereoRig] = None, world_map: Optional[WorldMap] = None,
                 updates_enabled: bool = True):
        self.params = params or SlamParams()
        self.rig = rig or StereoRig()
        self.world_map = world_map if world_map is not None else WorldMap(self.params.merge_radius)
        self.updates_enabled = updates_enabled
        self.state = start
        self._last_imu: Optional[ImuSample] = None
        self._history: Deque[Tuple[AgentState, ImuSample]] = deque(maxlen=HISTORY_SAMPLES)
        self._last_correction: Optional[AgentState] = None
        self._pending_flag = PROPAGATION_ONLY
        self.corrections: List[PoseCorrection] = []

    def on_imu(self, sample: ImuSample) -> PoseRecord:
        if self._last_imu is not None:
            self.state = propagate_to(self.state, self._last_imu, sample.t_ns)
        elif sample.t_ns != self.state.t_ns:
            self.state = replace(self.state, t_ns=sample.t_ns)
        self._last_imu = sample
        self._history.append((self.state, sample))
        record = PoseRecord(self.state, self._pending_flag)
        self._pending_flag = PROPAGATION_ONLY
        return record

    def state_at(self, t_ns: int) -> AgentState:
        """Predicted state at t_ns from the buffered history"""
        for state, sample in reversed(self._history):
            if state.t_ns <= t_ns:
                return propagate_to(state, sample, t_ns)
        return self.state

    def frontend(self, frame: StereoFrame) -> List[Observation]:
        p = self.params
        left = extract_features(frame.left, p.harris_k, p.nms_radius)
        right = extract_features(frame.right, p.harris_k, p.nms_radius)
        return triangulate_frame(left, right, frame.intrinsics, frame.baseline, self.rig.mount_height,
                                 tau_desc=p.tau_desc, max_row_diff=p.max_row_diff,
                                 min_disparity=p.min_disparity, max_disparity=p.max_disparity,
                                 max_depth=p.max_map_depth)

    def backend(self, observations: Sequence[Observation], t_ns: int) -> PoseCorrection:
        p = self.params
        predicted = self.state_at(t_ns)
        matches = match_features(observations, self.world_map, predicted, p.tau_desc, p.ratio, p.gating_radius)
        if self.updates_enabled:
            correction = update_pose(predicted, matches, p.refit_threshold)
        else:
            correction = PoseCorrection(predicted, PROPAGATION_ONLY, len(matches))
        matched = {id(m.observation) for m in matches}
        unmatched = [o for o in observations if id(o) not in matched]
        if correction.corrected:
            state = correction.state
            prev = self._last_correction
            if prev is not None and state.t_ns > prev.t_ns:
                dt = (state.t_ns - prev.t_ns) * 1e-9
                state = replace(state, vx=(state.x - prev.x) / dt, vy=(state.y - prev.y) / dt)
            self._last_correction = state
            correction = replace(correction, state=state)
            self._repropagate(state)
            self._pending_flag = correction.flag
        if self.updates_enabled or len(self.world_map) == 0:
            extend_map(self.world_map, unmatched, correction.state, correction.corrected)
        logger.debug("frame t=%d matches=%d flag=%s map=%d", t_ns, len(matches), correction.flag,
                     len(self.world_map))
        self.corrections.append(correction)
        return correction

    def on_frame(self, frame: StereoFrame) -> PoseCorrection:
        return self.backend(self.frontend(frame), frame.t_ns)

    def _repropagate(self, corrected: AgentState) -> None:
        entries = list(self._history)
        start = None
        for i, (state, _) in enumerate(entries):
            if state.t_ns <= corrected.t_ns:
                start = i
        if start is None:
            self.state = corrected
            return
        current = corrected
        for i in range(start, len(entries)):
            state, sample = entries[i]
            if i > start or state.t_ns == corrected.t_ns:
                entries[i] = (current, sample)
            if i + 1 < len(entries):
                current = propagate_to(current, sample, entries[i + 1][0].t_ns)
        if self.state.t_ns > current.t_ns and self._last_imu is not None:
            current = propagate_to(current, self._last_imu, self.state.t_ns)
        self._history = deque(entries, maxlen=HISTORY_SAMPLES)
        self.state = current


@dataclass
class SlamRun:
    poses: List[PoseRecord]
    corrections: List[PoseCorrection]
    world_map: WorldMap
    final_state: Optional[AgentState] = None


def run_slam(gt: GroundTruth, imu: Sequence[ImuSample], frames: Sequence[StereoFrame],
             params: Optional[SlamParams] = None, rig: Optional[StereoRig] = None,
             updates_enabled: bool = True, world_map: Optional[WorldMap] = None) -> SlamRun:
    """
    Run the pipeline synchronously over recorded streams

    Every params.frame_stride-th frame is processed as soon as the IMU stream
    reaches its timestamp.
    """
    params = params or SlamParams()
    pipeline = SlamPipeline(initial_state(gt), params, rig, world_map, updates_enabled)
    times = getattr(frames, "times", None)
    if times is None:
        times = [f.t_ns for f in frames]
    selected = list(range(0, len(frames), params.frame_stride))
    poses = []
    next_frame = 0
    for sample in imu:
        poses.append(pipeline.on_imu(sample))
        while next_frame < len(selected) and times[selected[next_frame]] <= sample.t_ns:
            pipeline.on_frame(frames[selected[next_frame]])
            next_frame += 1
    return SlamRun(poses, pipeline.corrections, pipeline.world_map, pipeline.state)


def position_errors(poses: Sequence[PoseRecord], gt: GroundTruth) -> np.ndarray:
    """Euclidean position error of every pose against ground truth"""
    if not poses:
        return np.zeros(0)
    t = np.array([p.state.t_ns for p in poses], dtype=np.int64)
    truth = gt.position_at(t)
    est = np.array([[p.state.x, p.state.y] for p in poses])
    return np.hypot(est[:, 0] - truth[:, 0], est[:, 1] - truth[:, 1])
