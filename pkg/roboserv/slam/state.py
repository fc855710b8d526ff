"""SLAM state and tuning parameters"""

import math
from dataclasses import dataclass, replace

import numpy as np


def normalize_heading(theta: float) -> float:
    """Map an angle to (-pi, pi]"""
    return -((-theta + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class AgentState:
    """Planar pose and velocity of the robot at t_ns"""
    t_ns: int
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        values = (self.x, self.y, self.vx, self.vy, self.heading)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"agent state must be finite, got {values}")
        object.__setattr__(self, "heading", normalize_heading(float(self.heading)))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def with_pose(self, x: float, y: float, heading: float) -> "AgentState":
        return replace(self, x=float(x), y=float(y), heading=float(heading))

    def robot_to_world(self, points: np.ndarray) -> np.ndarray:
        """Transform (N, 2) robot-frame points into the world frame"""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        c, s = math.cos(self.heading), math.sin(self.heading)
        return np.stack([self.x + c * pts[:, 0] - s * pts[:, 1], self.y + s * pts[:, 0] + c * pts[:, 1]], axis=1)


@dataclass
class SlamParams:
    """Detector, matcher and map thresholds"""
    harris_k: float = 0.04
    nms_radius: int = 5  # px
    tau_desc: float = 0.5
    ratio: float = 0.8
    gating_radius: float = 0.5  # m
    merge_radius: float = 0.05  # m
    min_disparity: float = 0.5  # px
    max_disparity: float = 80.0  # px
    max_row_diff: float = 1.0  # px
    max_map_depth: float = 5.0  # m
    refit_threshold: float = 0.3  # m
    frame_stride: int = 6  # standalone: use every n-th camera frame

    def __post_init__(self):
        """Validate thresholds"""
        if not 0 < self.harris_k < 0.25:
            raise ValueError(f"harris_k must be in (0, 0.25), got {self.harris_k}")
        if self.nms_radius < 1:
            raise ValueError(f"nms_radius must be >= 1, got {self.nms_radius}")
        if not 0 < self.ratio <= 1:
            raise ValueError(f"ratio must be in (0, 1], got {self.ratio}")
        for name in ("tau_desc", "gating_radius", "merge_radius", "min_disparity",
                     "max_map_depth", "refit_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_disparity <= self.min_disparity:
            raise ValueError("max_disparity must exceed min_disparity")
        if self.max_row_diff < 0:
            raise ValueError(f"max_row_diff must be >= 0, got {self.max_row_diff}")
        if self.frame_stride < 1:
            raise ValueError(f"frame_stride must be >= 1, got {self.frame_stride}")
