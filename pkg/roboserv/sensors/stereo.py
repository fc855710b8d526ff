"""Synthetic stereo frames: landmarks drawn as 8x8 checker fiducials"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .camera import CameraIntrinsics, StereoRig, project, robot_to_camera, world_to_robot
from .prng import Xorshift64Star, derive_seed
from .trajectory import GroundTruth

CAMERA_RATE_HZ = 60
BACKGROUND_LEVEL = 110.0
FIDUCIAL_SIZE = 8
FIDUCIAL_MARGIN = 8  # px kept clear of the image border
FIDUCIAL_SEPARATION = 12  # px, centre to centre (Chebyshev) between drawn fiducials
MIN_RENDER_DEPTH_M = 0.3
MAX_RENDER_DEPTH_M = 8.0


@dataclass(frozen=True, eq=False)
class StereoFrame:
    t_ns: int
    left: np.ndarray  # uint8 (height, width)
    right: np.ndarray
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    baseline: float = 0.1

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError(f"left/right shapes differ: {self.left.shape} vs {self.right.shape}")

    @property
    def width(self) -> int:
        return self.left.shape[1]

    @property
    def height(self) -> int:
        return self.left.shape[0]


@dataclass(frozen=True)
class FiducialView:
    """A landmark as drawn in one stereo frame"""
    landmark_id: int
    depth: float  # m, camera z
    u_left: float
    u_right: float
    v: float


def fiducial_levels(landmark_id: int) -> tuple:
    """Quadrant gray levels (top-left, top-right, bottom-left, bottom-right)"""
    i = int(landmark_id)
    bright_a = 170 + (i * 37) % 86
    bright_b = 170 + (i * 59 + 23) % 86
    dark_a = (i * 41 + 7) % 81
    dark_b = (i * 67 + 31) % 81
    return float(bright_a), float(dark_a), float(dark_b), float(bright_b)


def frame_times(duration_ns: int) -> np.ndarray:
    """t_n = floor(n * 1e9 / 60) for every frame inside the run"""
    n = duration_ns * CAMERA_RATE_HZ // 1_000_000_000
    return (np.arange(n, dtype=np.int64) * 1_000_000_000) // CAMERA_RATE_HZ


def visible_fiducials(gt: GroundTruth, t_ns: int, rig: StereoRig) -> List[FiducialView]:
    """
    Landmarks drawn in the frame at t_ns, nearest first

    A landmark is drawn when it lies in the render depth range, its patch
    fits in both images and no nearer drawn fiducial sits within the
    separation distance in either image.
    """
    k = gt.kinematics_at([t_ns])
    robot = world_to_robot(gt.landmarks, k["x"][0], k["y"][0], k["heading"][0])
    cam = robot_to_camera(robot, rig.mount_height)
    intr = rig.intrinsics
    depth = cam[:, 2]
    ok = (depth >= MIN_RENDER_DEPTH_M) & (depth <= MAX_RENDER_DEPTH_M)
    if not np.any(ok):
        return []
    idx = np.nonzero(ok)[0]
    left = project(cam[idx], intr)
    right = project(cam[idx], intr, offset_x=rig.baseline)
    lo_u, hi_u = FIDUCIAL_MARGIN, intr.width - 1 - FIDUCIAL_MARGIN
    lo_v, hi_v = FIDUCIAL_MARGIN, intr.height - 1 - FIDUCIAL_MARGIN
    inside = ((left[:, 0] >= lo_u) & (left[:, 0] <= hi_u) & (right[:, 0] >= lo_u) & (right[:, 0] <= hi_u)
              & (left[:, 1] >= lo_v) & (left[:, 1] <= hi_v))

    candidates = sorted(
        (float(depth[i]), int(gt.landmark_ids[i]), j) for j, i in enumerate(idx) if inside[j]
    )
    views: List[FiducialView] = []
    for z, lid, j in candidates:
        ul, ur, v = left[j, 0], right[j, 0], left[j, 1]
        clear = all(
            max(abs(ul - w.u_left), abs(v - w.v)) >= FIDUCIAL_SEPARATION
            and max(abs(ur - w.u_right), abs(v - w.v)) >= FIDUCIAL_SEPARATION
            for w in views
        )
        if clear:
            views.append(FiducialView(lid, z, float(ul), float(ur), float(v)))
    return views


def _coverage(centres: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Overlap of unit pixels centred at `centres` with the interval [lo, hi]"""
    return np.clip(np.minimum(centres + 0.5, hi) - np.maximum(centres - 0.5, lo), 0.0, None)


def paint_fiducial(image: np.ndarray, u: float, v: float, levels: tuple) -> None:
    """Draw an anti-aliased 2x2 checker whose X-junction sits at (u, v)"""
    half = FIDUCIAL_SIZE / 2
    h, w = image.shape
    c0, c1 = max(0, int(math.floor(u - half - 0.5))), min(w - 1, int(math.ceil(u + half + 0.5)))
    r0, r1 = max(0, int(math.floor(v - half - 0.5))), min(h - 1, int(math.ceil(v + half + 0.5)))
    cols = np.arange(c0, c1 + 1, dtype=np.float64)
    rows = np.arange(r0, r1 + 1, dtype=np.float64)
    left, right = _coverage(cols, u - half, u), _coverage(cols, u, u + half)
    top, bottom = _coverage(rows, v - half, v), _coverage(rows, v, v + half)
    tl, tr, bl, br = levels
    patch = image[r0:r1 + 1, c0:c1 + 1]
    total = np.outer(top + bottom, left + right)
    painted = (tl * np.outer(top, left) + tr * np.outer(top, right)
               + bl * np.outer(bottom, left) + br * np.outer(bottom, right))
    image[r0:r1 + 1, c0:c1 + 1] = patch * (1.0 - total) + painted


def render_views(views: List[FiducialView], intrinsics: CameraIntrinsics, right: bool = False) -> np.ndarray:
    image = np.full((intrinsics.height, intrinsics.width), BACKGROUND_LEVEL, dtype=np.float64)
    for view in sorted(views, key=lambda w: (-w.depth, w.landmark_id)):  # far to near
        paint_fiducial(image, view.u_right if right else view.u_left, view.v, fiducial_levels(view.landmark_id))
    return image


def _to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


class StereoFrameSequence(Sequence):
    """Frames rendered on access; indexing is order independent and repeatable"""

    def __init__(self, gt: GroundTruth, seed: int, rig: Optional[StereoRig] = None, pixel_noise_std: float = 0.0):
        if pixel_noise_std < 0:
            raise ValueError(f"pixel_noise_std must be >= 0, got {pixel_noise_std}")
        self.gt = gt
        self.seed = seed
        self.rig = rig or StereoRig()
        self.pixel_noise_std = pixel_noise_std
        self.times = frame_times(gt.duration_ns)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(f"frame index {index} out of range")
        return self.render(index)

    def views(self, index: int) -> List[FiducialView]:
        return visible_fiducials(self.gt, int(self.times[index]), self.rig)

    def render(self, index: int) -> StereoFrame:
        t_ns = int(self.times[index])
        views = visible_fiducials(self.gt, t_ns, self.rig)
        intr = self.rig.intrinsics
        left = render_views(views, intr)
        right = render_views(views, intr, right=True)
        if self.pixel_noise_std > 0:
            rng = Xorshift64Star(derive_seed(self.seed, 0x43414D, index)).numpy_generator()
            left = left + rng.normal(0.0, self.pixel_noise_std, left.shape)
            right = right + rng.normal(0.0, self.pixel_noise_std, right.shape)
        return StereoFrame(t_ns, _to_uint8(left), _to_uint8(right), intr, self.rig.baseline)


def render_stereo_frames(gt: GroundTruth, seed: int, rig: Optional[StereoRig] = None,
                         pixel_noise_std: float = 0.0) -> StereoFrameSequence:
    """60 FPS stereo stream along the ground truth, rendered lazily"""
    if len(gt.landmarks) == 0:
        raise ValueError("ground truth has no landmarks")
    return StereoFrameSequence(gt, seed, rig, pixel_noise_std)
