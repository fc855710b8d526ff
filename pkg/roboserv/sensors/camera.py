"""Pinhole stereo rig and frame transforms

Frames:
    world   x, y on the ground plane, z up
    robot   x forward, y left, z up (origin on the ground under the rig)
    camera  z forward, x right, y down; the left camera is the reference,
            the right camera sits +baseline along camera x
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CameraIntrinsics:
    focal: float = 400.0  # px
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError(f"focal must be positive, got {self.focal}")
        if self.width < 8 or self.height < 8:
            raise ValueError(f"image must be at least 8x8, got {self.width}x{self.height}")


@dataclass(frozen=True)
class StereoRig:
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    baseline: float = 0.1  # m
    mount_height: float = 0.5  # m above ground

    def __post_init__(self):
        if self.baseline <= 0:
            raise ValueError(f"baseline must be positive, got {self.baseline}")


def world_to_robot(points: np.ndarray, x: float, y: float, heading: float) -> np.ndarray:
    """Transform (N, 3) world points into the robot frame"""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    c, s = np.cos(heading), np.sin(heading)
    dx, dy = pts[:, 0] - x, pts[:, 1] - y
    return np.stack([c * dx + s * dy, -s * dx + c * dy, pts[:, 2]], axis=1)


def robot_to_camera(points: np.ndarray, mount_height: float) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.stack([-pts[:, 1], mount_height - pts[:, 2], pts[:, 0]], axis=1)


def camera_to_robot(points: np.ndarray, mount_height: float) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.stack([pts[:, 2], -pts[:, 0], mount_height - pts[:, 1]], axis=1)


def project(points_cam: np.ndarray, intrinsics: CameraIntrinsics, offset_x: float = 0.0) -> np.ndarray:
    """Project camera-frame points to (N, 2) pixels; offset_x shifts the optical centre along x"""
    pts = np.atleast_2d(np.asarray(points_cam, dtype=np.float64))
    u = intrinsics.cx + intrinsics.focal * (pts[:, 0] - offset_x) / pts[:, 2]
    v = intrinsics.cy + intrinsics.focal * pts[:, 1] / pts[:, 2]
    return np.stack([u, v], axis=1)


def back_project(u: float, v: float, depth: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    return np.array([
        (u - intrinsics.cx) * depth / intrinsics.focal,
        (v - intrinsics.cy) * depth / intrinsics.focal,
        depth,
    ])
