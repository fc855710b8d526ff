"""Ground-truth trajectories and landmark fields"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .prng import Xorshift64Star, derive_seed

TRAJECTORY_KINDS = ("stationary", "straight-line", "circle", "waypoint-path")

GROUND_TRUTH_RATE_HZ = 1000
MIN_LANDMARKS = 50
LANDMARK_SPACING_M = 1.0
LANDMARK_PATH_CLEARANCE_M = 0.8
LANDMARK_MARGIN_M = 5.0
LANDMARK_HEIGHT_RANGE_M = (0.6, 1.0)
MAX_TURN_RATE = 1.0  # rad/s, peak of the smooth in-place turn profile


def wrap_angle(theta):
    """Normalize angle(s) to (-pi, pi]"""
    return -((-np.asarray(theta, dtype=np.float64) + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass
class TrajectorySpec:
    """Scripted robot motion plus the seed for the landmark field"""
    kind: str = "circle"
    duration_s: float = 10.0
    speed: float = 1.0  # m/s
    radius: float = 2.0  # m, circle only
    waypoints: List[Tuple[float, float]] = field(default_factory=list)
    heading_rad: float = 0.0  # straight-line only
    seed: int = 1
    max_speed: float = 1.0
    landmark_count: int = 80

    def __post_init__(self):
        """Validate trajectory parameters"""
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"kind must be one of {TRAJECTORY_KINDS}, got {self.kind!r}")
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        if self.speed < 0 or self.speed > self.max_speed:
            raise ValueError(f"speed must be within [0, {self.max_speed}] m/s, got {self.speed}")
        if self.kind == "circle" and not self.radius > 0:
            raise ValueError(f"radius must be positive for a circle, got {self.radius}")
        if self.kind == "waypoint-path" and not self.waypoints:
            raise ValueError("waypoint-path needs at least one waypoint")
        if self.kind == "circle" and self.speed == 0:
            raise ValueError("circle needs a positive speed")
        if self.kind == "waypoint-path" and len(self.waypoints) > 1 and self.speed == 0:
            raise ValueError("waypoint-path needs a positive speed")
        if not 0 <= self.seed <= 0xFFFFFFFFFFFFFFFF:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.landmark_count < MIN_LANDMARKS:
            raise ValueError(f"landmark_count must be >= {MIN_LANDMARKS}, got {self.landmark_count}")
        self.waypoints = [(float(p[0]), float(p[1])) for p in self.waypoints]


class _Motion:
    """Analytic planar motion; evaluate() is vectorized over time in seconds"""

    def evaluate(self, t: np.ndarray) -> Dict[str, np.ndarray]:
        raise NotImplementedError


class _Stationary(_Motion):
    def __init__(self, x: float = 0.0, y: float = 0.0, heading: float = 0.0):
        self.x, self.y, self.heading = x, y, heading

    def evaluate(self, t):
        z = np.zeros_like(t, dtype=np.float64)
        return {"x": z + self.x, "y": z + self.y, "heading": z + self.heading,
                "vx": z.copy(), "vy": z.copy(), "omega": z.copy(), "ax": z.copy(), "ay": z.copy()}


class _StraightLine(_Motion):
    def __init__(self, speed: float, heading: float):
        self.speed, self.heading = speed, heading

    def evaluate(self, t):
        c, s = math.cos(self.heading), math.sin(self.heading)
        z = np.zeros_like(t, dtype=np.float64)
        return {"x": self.speed * t * c, "y": self.speed * t * s, "heading": z + self.heading,
                "vx": z + self.speed * c, "vy": z + self.speed * s, "omega": z.copy(),
                "ax": z.copy(), "ay": z.copy()}


class _Circle(_Motion):
    """Counter-clockwise circle through the origin, centre (0, r), starting heading 0"""

    def __init__(self, speed: float, radius: float):
        self.speed, self.radius = speed, radius
        self.omega = speed / radius

    def evaluate(self, t):
        v, r, w = self.speed, self.radius, self.omega
        phase = w * t
        c, s = np.cos(phase), np.sin(phase)
        return {"x": r * s, "y": r - r * c, "heading": phase,
                "vx": v * c, "vy": v * s, "omega": np.full_like(phase, w),
                "ax": -v * w * s, "ay": v * w * c}


def _smooth_profile(tau: np.ndarray, period: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rest-to-rest profile p(tau) in [0, 1] with its first and second derivatives"""
    k = 2.0 * math.pi / period
    p = tau / period - np.sin(k * tau) / (2.0 * math.pi)
    dp = (1.0 - np.cos(k * tau)) / period
    ddp = k * np.sin(k * tau) / period
    return p, dp, ddp


class _WaypointPath(_Motion):
    """Straight rest-to-rest legs joined by smooth in-place turns"""

    def __init__(self, waypoints: List[Tuple[float, float]], speed: float):
        self.phases = []  # (kind, t0, duration, start (x, y, heading), amount)
        x, y = waypoints[0]
        heading = 0.0
        if len(waypoints) > 1:
            heading = math.atan2(waypoints[1][1] - y, waypoints[1][0] - x)
        t = 0.0
        for nx, ny in waypoints[1:]:
            length = math.hypot(nx - x, ny - y)
            if length == 0:
                continue
            target = math.atan2(ny - y, nx - x)
            turn = float(wrap_angle(target - heading))
            if abs(turn) > 1e-12:
                duration = 2.0 * abs(turn) / MAX_TURN_RATE
                self.phases.append(("turn", t, duration, (x, y, heading), turn))
                t += duration
                heading = heading + turn
            duration = 2.0 * length / speed
            self.phases.append(("move", t, duration, (x, y, heading), length))
            t += duration
            x, y = nx, ny
        self.end_pose = (x, y, heading)
        self.total_time = t

    def evaluate(self, t):
        ex, ey, eh = self.end_pose
        out = _Stationary(ex, ey, eh).evaluate(t)
        for kind, t0, duration, (px, py, ph), amount in self.phases:
            mask = (t >= t0) & (t < t0 + duration)
            if not np.any(mask):
                continue
            p, dp, ddp = _smooth_profile(t[mask] - t0, duration)
            if kind == "turn":
                out["x"][mask] = px
                out["y"][mask] = py
                out["heading"][mask] = ph + amount * p
                out["omega"][mask] = amount * dp
            else:
                c, s = math.cos(ph), math.sin(ph)
                out["x"][mask] = px + amount * p * c
                out["y"][mask] = py + amount * p * s
                out["heading"][mask] = ph
                out["vx"][mask] = amount * dp * c
                out["vy"][mask] = amount * dp * s
                out["ax"][mask] = amount * ddp * c
                out["ay"][mask] = amount * ddp * s
        return out


def _motion_for(spec: TrajectorySpec) -> _Motion:
    if spec.kind == "stationary":
        if spec.waypoints:
            return _Stationary(*spec.waypoints[0])
        return _Stationary()
    if spec.kind == "straight-line":
        return _StraightLine(spec.speed, spec.heading_rad)
    if spec.kind == "circle":
        return _Circle(spec.speed, spec.radius)
    return _WaypointPath(spec.waypoints, spec.speed)


@dataclass(eq=False)
class GroundTruth:
    """Dense poses (1 kHz) and the landmark field for one scripted run"""
    spec: TrajectorySpec
    t_ns: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    angular_rate: np.ndarray
    landmark_ids: np.ndarray
    landmarks: np.ndarray  # (N, 3) world positions, metres
    motion: _Motion = field(repr=False)

    @property
    def duration_ns(self) -> int:
        return int(round(self.spec.duration_s * 1e9))

    def kinematics_at(self, t_ns) -> Dict[str, np.ndarray]:
        """Exact kinematics (pose, velocity, world acceleration) at the given times"""
        t = np.atleast_1d(np.asarray(t_ns, dtype=np.float64)) * 1e-9
        state = self.motion.evaluate(t)
        state["heading"] = wrap_angle(state["heading"])
        return state

    def position_at(self, t_ns) -> np.ndarray:
        k = self.kinematics_at(t_ns)
        return np.stack([k["x"], k["y"]], axis=-1)


def _place_landmarks(spec: TrajectorySpec, path_xy: np.ndarray) -> np.ndarray:
    rng = Xorshift64Star(derive_seed(spec.seed, 0x4C414E44))
    lo = path_xy.min(axis=0) - LANDMARK_MARGIN_M
    hi = path_xy.max(axis=0) + LANDMARK_MARGIN_M
    stride = max(1, len(path_xy) // 2000)
    path = path_xy[::stride]
    placed: List[Tuple[float, float, float]] = []
    attempts = 400 * spec.landmark_count
    for _ in range(attempts):
        if len(placed) >= spec.landmark_count:
            break
        px = rng.uniform_range(lo[0], hi[0])
        py = rng.uniform_range(lo[1], hi[1])
        pz = rng.uniform_range(*LANDMARK_HEIGHT_RANGE_M)
        if np.min(np.hypot(path[:, 0] - px, path[:, 1] - py)) < LANDMARK_PATH_CLEARANCE_M:
            continue
        if placed:
            pts = np.asarray(placed)
            if np.min(np.hypot(pts[:, 0] - px, pts[:, 1] - py)) < LANDMARK_SPACING_M:
                continue
        placed.append((px, py, pz))
    if len(placed) < MIN_LANDMARKS:
        raise ValueError(f"could only place {len(placed)} landmarks around the path (need {MIN_LANDMARKS})")
    return np.asarray(placed, dtype=np.float64)


def generate_trajectory(spec: TrajectorySpec) -> GroundTruth:
    """
    Generate dense ground truth and a landmark field for a trajectory spec

    Args:
        spec: validated trajectory description

    Returns:
        GroundTruth sampled at 1 kHz from t = 0 to t = duration inclusive
    """
    motion = _motion_for(spec)
    duration_ns = int(round(spec.duration_s * 1e9))
    step_ns = 1_000_000_000 // GROUND_TRUTH_RATE_HZ
    t_ns = np.arange(0, duration_ns + 1, step_ns, dtype=np.int64)
    if t_ns[-1] != duration_ns:
        t_ns = np.append(t_ns, np.int64(duration_ns))
    k = motion.evaluate(t_ns.astype(np.float64) * 1e-9)
    path_xy = np.stack([k["x"], k["y"]], axis=1)
    landmarks = _place_landmarks(spec, path_xy)
    return GroundTruth(
        spec=spec,
        t_ns=t_ns,
        x=k["x"],
        y=k["y"],
        heading=wrap_angle(k["heading"]),
        vx=k["vx"],
        vy=k["vy"],
        angular_rate=k["omega"],
        landmark_ids=np.arange(len(landmarks), dtype=np.int64),
        landmarks=landmarks,
        motion=motion,
    )
