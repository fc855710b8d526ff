import math

import numpy as np
import pytest

from roboserv.sensors.camera import CameraIntrinsics, StereoRig, project
from roboserv.sensors.imu import ImuErrorModel, ImuSample, sample_imu
from roboserv.sensors.stereo import BACKGROUND_LEVEL, fiducial_levels, paint_fiducial, render_stereo_frames
from roboserv.sensors.trajectory import TrajectorySpec, generate_trajectory
from roboserv.slam.features import FeaturePoint, extract_features
from roboserv.slam.matching import Match, match_features
from roboserv.slam.pipeline import SlamPipeline, initial_state, position_errors, run_slam
from roboserv.slam.propagation import propagate
from roboserv.slam.state import AgentState, SlamParams, normalize_heading
from roboserv.slam.triangulation import Observation, TriangulationError, triangulate_stereo
from roboserv.slam.update import CORRECTED, PROPAGATION_ONLY, TRANSLATION_ONLY, extend_map, update_pose
from roboserv.slam.world_map import MapPoint, WorldMap


def _angle_diff(a, b):
    return abs(normalize_heading(a - b))


def test_normalize_heading_range():
    assert normalize_heading(math.pi) == pytest.approx(math.pi)
    assert normalize_heading(-math.pi) == pytest.approx(math.pi)
    assert normalize_heading(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_agent_state_rejects_non_finite():
    with pytest.raises(ValueError):
        AgentState(0, x=float("nan"))


def test_propagate_constant_acceleration():
    state = AgentState(0, vx=1.0)
    out = propagate(state, ImuSample(0, 2.0, 0.0, 0.0), 0.5)
    assert out.t_ns == 500_000_000
    assert out.x == pytest.approx(1.0 * 0.5 + 0.5 * 2.0 * 0.25, abs=1e-15)
    assert out.vx == pytest.approx(2.0, abs=1e-15)


def test_propagate_two_steps_equal_one_double_step():
    rng = np.random.default_rng(1)
    for _ in range(200):
        state = AgentState(0, *rng.uniform(-3, 3, 4), heading=rng.uniform(-math.pi, math.pi))
        imu = ImuSample(0, *rng.uniform(-1, 1, 2), 0.0)
        dt = float(rng.integers(1, 50)) * 1e-3
        twice = propagate(propagate(state, imu, dt), imu, dt)
        once = propagate(state, imu, 2 * dt)
        assert twice.t_ns == once.t_ns
        for name in ("x", "y", "vx", "vy"):
            assert getattr(twice, name) == pytest.approx(getattr(once, name), abs=1e-12)
        assert _angle_diff(twice.heading, once.heading) <= 1e-12


def test_propagate_rejects_bad_interval():
    state = AgentState(0)
    with pytest.raises(ValueError):
        propagate(state, ImuSample(0, 0.0, 0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        propagate(state, ImuSample(10_000_000, 0.0, 0.0, 0.0), 0.005)


def _matches(pose, observed):
    x, y, theta = pose
    c, s = math.cos(theta), math.sin(theta)
    world = np.stack([x + c * observed[:, 0] - s * observed[:, 1],
                      y + s * observed[:, 0] + c * observed[:, 1]], axis=1)
    return [Match(MapPoint(i, float(w[0]), float(w[1]), 0.8, np.zeros(64)), o, None)
            for i, (o, w) in enumerate(zip(observed, world))]


def test_update_pose_recovers_rigid_transform():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        pose = (rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-math.pi, math.pi))
        n = int(rng.integers(2, 12))
        observed = rng.uniform(-5, 5, (n, 2))
        while np.min(np.hypot(*(observed[0] - observed[1:]).T)) < 0.2:
            observed = rng.uniform(-5, 5, (n, 2))
        guess = AgentState(0, pose[0] + rng.normal(0, 0.2), pose[1] + rng.normal(0, 0.2), heading=pose[2] + 0.1)
        result = update_pose(guess, _matches(pose, observed))
        assert result.flag == CORRECTED
        assert result.n_matches == n
        worst = max(worst, abs(result.state.x - pose[0]), abs(result.state.y - pose[1]),
                    _angle_diff(result.state.heading, pose[2]))
    assert worst <= 1e-9


def test_update_pose_needs_two_matches():
    state = AgentState(5, 1.0, 2.0, heading=0.3)
    result = update_pose(state, _matches((0.0, 0.0, 0.0), np.array([[1.0, 0.0]])))
    assert result.flag == PROPAGATION_ONLY
    assert result.state == state
    assert not result.corrected


def test_update_pose_coincident_points_translation_only():
    observed = np.array([[1.0, 1.0], [1.0, 1.0]])
    state = AgentState(0, heading=0.4)
    result = update_pose(state, _matches((2.0, -1.0, 0.4), observed))
    assert result.flag == TRANSLATION_ONLY
    assert result.state.heading == pytest.approx(0.4)
    assert result.state.x == pytest.approx(2.0, abs=1e-9)
    assert result.state.y == pytest.approx(-1.0, abs=1e-9)


def test_update_pose_refit_drops_outlier():
    pose = (1.0, 2.0, 0.5)
    ring = [(3.0 * math.cos(k * math.pi / 4), 3.0 * math.sin(k * math.pi / 4)) for k in range(8)]
    observed = np.array(ring + [(0.5, 0.5)])
    matches = _matches(pose, observed)
    bad = matches[8]
    matches[8] = Match(MapPoint(8, bad.point.x + 1.0, bad.point.y, 0.8, bad.point.descriptor), bad.observed, None)
    result = update_pose(AgentState(0), matches)
    assert result.flag == CORRECTED
    assert result.n_matches == 8
    assert result.state.x == pytest.approx(1.0, abs=1e-9)
    assert result.state.y == pytest.approx(2.0, abs=1e-9)
    assert result.state.heading == pytest.approx(0.5, abs=1e-9)


def _unit(rng, n=64):
    d = rng.normal(size=n)
    return d / np.linalg.norm(d)


def test_world_map_merges_within_radius():
    rng = np.random.default_rng(3)
    world_map = WorldMap(merge_radius=0.05)
    a = world_map.insert((1.0, 1.0), 0.8, _unit(rng))
    b = world_map.insert((1.03, 1.0), 0.8, _unit(rng))
    assert a.id == b.id
    assert len(world_map) == 1
    assert world_map.get(a.id).observation_count == 2
    assert world_map.get(a.id).x == pytest.approx(1.015)
    world_map.insert((2.0, 1.0), 0.8, _unit(rng))
    assert len(world_map) == 2


def test_world_map_keeps_separation_under_random_inserts():
    rng = np.random.default_rng(4)
    world_map = WorldMap(merge_radius=0.05)
    for _ in range(2000):
        world_map.insert(rng.uniform(0, 2, 2), 0.8, _unit(rng))
    assert world_map.min_separation() >= 0.05
    assert sum(p.observation_count for p in world_map) == 2000
    for p in world_map:
        assert np.linalg.norm(p.descriptor) == pytest.approx(1.0)


def test_match_features_gates_by_radius_and_descriptor():
    rng = np.random.default_rng(5)
    world_map = WorldMap()
    desc = _unit(rng)
    point = world_map.insert((2.0, 0.0), 0.8, desc)

    class _Obs:
        def __init__(self, xy, descriptor):
            self.robot_xy = np.asarray(xy, dtype=np.float64)
            self.descriptor = descriptor

    near = _Obs((2.1, 0.0), desc)
    far = _Obs((3.0, 0.0), desc)
    other = _Obs((2.0, 0.0), _unit(rng))
    matches = match_features([near, far, other], world_map, AgentState(0))
    assert len(matches) == 1
    assert matches[0].point.id == point.id
    assert matches[0].observation is near


def _fiducial_canvas():
    canvas = np.full((140, 140), BACKGROUND_LEVEL)
    paint_fiducial(canvas, 40.3, 50.6, fiducial_levels(3))
    paint_fiducial(canvas, 75.8, 45.2, fiducial_levels(11))
    paint_fiducial(canvas, 60.45, 80.7, fiducial_levels(29))
    return canvas


def test_features_find_fiducial_corners():
    image = _fiducial_canvas()[:120, :120]
    features = extract_features(image)
    for u, v in ((40.3, 50.6), (75.8, 45.2), (60.45, 80.7)):
        assert min(math.hypot(f.u - u, f.v - v) for f in features) < 0.5
    for f in features:
        assert np.linalg.norm(f.descriptor) == pytest.approx(1.0)
        assert 0 <= f.u < 120 and 0 <= f.v < 120


def test_features_are_translation_covariant():
    canvas = _fiducial_canvas()
    du, dv = 7, 4
    a = extract_features(canvas[dv:dv + 120, du:du + 120])
    b = extract_features(canvas[:120, :120])
    a_sorted = sorted(a, key=lambda f: (round(f.v, 6), round(f.u, 6)))
    b_sorted = sorted(b, key=lambda f: (round(f.v, 6), round(f.u, 6)))
    assert len(a_sorted) == len(b_sorted) > 0
    for fa, fb in zip(a_sorted, b_sorted):
        assert fa.u + du == pytest.approx(fb.u, abs=1e-9)
        assert fa.v + dv == pytest.approx(fb.v, abs=1e-9)
        assert np.allclose(fa.descriptor, fb.descriptor, atol=1e-9)


def test_extract_features_rejects_bad_images():
    with pytest.raises(ValueError):
        extract_features(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        extract_features(np.zeros((3, 20, 20)))
    assert extract_features(np.full((64, 64), 110.0)) == []


def test_frontend_triangulates_rendered_landmarks(circle_gt):
    rig = StereoRig()
    frames = render_stereo_frames(circle_gt, seed=1, rig=rig)
    pipeline = SlamPipeline(initial_state(circle_gt), rig=rig)
    checked = 0
    for index in range(0, 600, 60):
        views = frames.views(index)
        for obs in pipeline.frontend(frames[index]):
            nearest = min(views, key=lambda w: math.hypot(w.u_left - obs.feature.u, w.v - obs.feature.v))
            if math.hypot(nearest.u_left - obs.feature.u, nearest.v - obs.feature.v) > 1.0:
                continue
            disparity = rig.intrinsics.focal * rig.baseline / obs.depth
            assert abs(disparity - (nearest.u_left - nearest.u_right)) < 1.0
            checked += 1
    assert checked >= 3


def test_pipeline_emits_one_state_per_imu_sample(circle_gt, clean_imu):
    pipeline = SlamPipeline(initial_state(circle_gt))
    records = [pipeline.on_imu(s) for s in clean_imu[:200]]
    assert len(records) == 200
    assert [r.state.t_ns for r in records] == [s.t_ns for s in clean_imu[:200]]
    assert all(r.flag == PROPAGATION_ONLY for r in records)


def test_slam_params_validation():
    with pytest.raises(ValueError):
        SlamParams(harris_k=0.3)
    with pytest.raises(ValueError):
        SlamParams(merge_radius=0.0)
    with pytest.raises(ValueError):
        SlamParams(min_disparity=5.0, max_disparity=2.0)


@pytest.mark.slow
def test_drift_correction_on_biased_circle(circle_gt):
    imu = sample_imu(circle_gt, ImuErrorModel(accel_bias=(0.05, 0.0)), seed=7)
    frames = render_stereo_frames(circle_gt, seed=7)
    dead_reckoning = run_slam(circle_gt, imu, frames, updates_enabled=False)
    corrected = run_slam(circle_gt, imu, frames)
    drift = position_errors(dead_reckoning.poses, circle_gt)[-1]
    error = position_errors(corrected.poses, circle_gt)[-1]
    assert drift >= 1.5
    assert error <= 0.1 * drift
    assert len(corrected.poses) == 2000
    assert corrected.world_map.min_separation() >= 0.05


def _feature(u, v):
    return FeaturePoint(u, v, 1.0, np.full(64, 0.125))


def test_triangulate_stereo_depth_from_disparity():
    point = triangulate_stereo(_feature(340.0, 250.0), _feature(320.0, 250.0), CameraIntrinsics(), baseline=0.12)
    assert point == pytest.approx([0.12, 0.06, 2.4])
    with pytest.raises(TriangulationError):
        triangulate_stereo(_feature(320.4, 250.0), _feature(320.0, 250.0), CameraIntrinsics(), baseline=0.12)


def _observation(robot_xy, height=0.8):
    return Observation(_feature(320.0, 240.0), np.array([0.0, 0.0, 1.0]), np.asarray(robot_xy, dtype=float), height)


def test_extend_map_places_points_in_world_frame():
    state = AgentState(0, x=1.0, y=2.0, heading=math.pi / 2)
    world_map = extend_map(WorldMap(), [_observation([1.0, 0.0]), _observation([0.0, 1.0])], state)
    assert len(world_map) == 2
    positions = sorted((round(p.x, 9), round(p.y, 9)) for p in world_map.points())
    assert positions == [(0.0, 2.0), (1.0, 3.0)]
    # merged into the existing point, not added
    extend_map(world_map, [_observation([1.01, 0.0])], state)
    assert len(world_map) == 2


def test_extend_map_skips_uncorrected_poses_except_bootstrap():
    state = AgentState(0)
    world_map = extend_map(WorldMap(), [_observation([2.0, 0.0])], state, corrected=False)
    assert len(world_map) == 1
    extend_map(world_map, [_observation([3.0, 1.0])], state, corrected=False)
    assert len(world_map) == 1
    extend_map(world_map, [], state)
    assert len(world_map) == 1


def test_white_square_has_four_corners():
    image = np.zeros((96, 96))
    image[32:64, 32:64] = 255.0
    features = extract_features(image)
    assert len(features) == 4
    for u, v in ((31.5, 31.5), (63.5, 31.5), (31.5, 63.5), (63.5, 63.5)):
        assert min(math.hypot(f.u - u, f.v - v) for f in features) <= 1.0


def test_random_descriptors_never_match():
    rng = np.random.default_rng(6)
    world_map = WorldMap()
    positions = [(float(x), float(y)) for x in np.arange(1.0, 4.0, 0.3) for y in np.arange(-1.5, 1.5, 0.3)]
    for xy in positions:
        world_map.insert(xy, 0.8, _unit(rng))
    observations = [Observation(FeaturePoint(320.0, 240.0, 1.0, _unit(rng)), np.array([0.0, 0.0, 1.0]),
                                np.array(xy), 0.8) for xy in positions]
    assert match_features(observations, world_map, AgentState(0)) == []


def test_triangulation_inverts_stereo_projection():
    rng = np.random.default_rng(7)
    rig = StereoRig()
    points = np.column_stack([rng.uniform(-1.5, 1.5, 500), rng.uniform(-1.0, 1.0, 500), rng.uniform(0.5, 5.0, 500)])
    left = project(points, rig.intrinsics)
    right = project(points, rig.intrinsics, offset_x=rig.baseline)
    for point, (ul, vl), (ur, vr) in zip(points, left, right):
        assert vl == pytest.approx(vr)
        recovered = triangulate_stereo(_feature(ul, vl), _feature(ur, vr), rig.intrinsics, rig.baseline)
        assert recovered == pytest.approx(point, abs=1e-9)


@pytest.mark.slow
def test_second_pass_adds_no_map_points():
    gt = generate_trajectory(TrajectorySpec("circle", 4.0, speed=0.5, radius=2.0, seed=7))
    imu = sample_imu(gt, ImuErrorModel(), seed=7)
    frames = render_stereo_frames(gt, seed=7)
    first = run_slam(gt, imu, frames)
    size = len(first.world_map)
    assert size > 0
    second = run_slam(gt, imu, frames, world_map=first.world_map)
    assert len(second.world_map) == size
