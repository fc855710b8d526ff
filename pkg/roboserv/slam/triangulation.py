"""Stereo correspondence and triangulation"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..sensors.camera import CameraIntrinsics, back_project, camera_to_robot
from .features import FeaturePoint, descriptor_distance


class TriangulationError(ValueError):
    """Disparity too small to give a usable depth"""


@dataclass(frozen=True, eq=False)
class Observation:
    """A triangulated feature expressed in the robot frame"""
    feature: FeaturePoint
    point_cam: np.ndarray
    robot_xy: np.ndarray
    height: float

    @property
    def descriptor(self) -> np.ndarray:
        return self.feature.descriptor

    @property
    def depth(self) -> float:
        return float(self.point_cam[2])


def triangulate_stereo(left: FeaturePoint, right: FeaturePoint, intrinsics: CameraIntrinsics,
                       baseline: float, min_disparity: float = 0.5) -> np.ndarray:
    """
    Recover a camera-frame 3D point from a left/right feature pair

    Args:
        left: feature in the reference (left) image
        right: matching feature in the right image
        intrinsics: shared pinhole intrinsics
        baseline: camera separation in metres
        min_disparity: smallest accepted disparity in pixels

    Returns:
        (x, y, z) in the left camera frame, z = focal * baseline / disparity
    """
    disparity = left.u - right.u
    if disparity <= min_disparity:
        raise TriangulationError(f"disparity {disparity:.3f} px is not above {min_disparity} px")
    depth = intrinsics.focal * baseline / disparity
    return back_project(left.u, left.v, depth, intrinsics)


def match_stereo(left: Sequence[FeaturePoint], right: Sequence[FeaturePoint], tau_desc: float = 0.5,
                 max_row_diff: float = 1.0, min_disparity: float = 0.5,
                 max_disparity: float = 80.0) -> List[Tuple[FeaturePoint, FeaturePoint]]:
    """Pair left and right features on the same row by best descriptor distance, one-to-one"""
    if not left or not right:
        return []
    best_right = {}
    for i, lf in enumerate(left):
        best = None
        for j, rf in enumerate(right):
            d = lf.u - rf.u
            if abs(lf.v - rf.v) > max_row_diff or not min_disparity < d <= max_disparity:
                continue
            dist = descriptor_distance(lf.descriptor, rf.descriptor)
            if dist < tau_desc and (best is None or dist < best[0]):
                best = (dist, j)
        if best is not None:
            best_right[i] = best
    pairs = []
    claimed = {}
    for i, (dist, j) in best_right.items():
        if j not in claimed or dist < claimed[j][0]:
            claimed[j] = (dist, i)
    for j, (dist, i) in sorted(claimed.items(), key=lambda item: item[1][1]):
        pairs.append((left[i], right[j]))
    return pairs


def triangulate_frame(left: Sequence[FeaturePoint], right: Sequence[FeaturePoint],
                      intrinsics: CameraIntrinsics, baseline: float, mount_height: float,
                      tau_desc: float = 0.5, max_row_diff: float = 1.0, min_disparity: float = 0.5,
                      max_disparity: float = 80.0, max_depth: float = 5.0) -> List[Observation]:
    """Stereo-match a frame's features and keep triangulated points within max_depth"""
    observations = []
    for lf, rf in match_stereo(left, right, tau_desc, max_row_diff, min_disparity, max_disparity):
        try:
            point = triangulate_stereo(lf, rf, intrinsics, baseline, min_disparity)
        except TriangulationError:
            continue
        if point[2] > max_depth:
            continue
        robot = camera_to_robot(point, mount_height)[0]
        observations.append(Observation(lf, point, robot[:2].copy(), float(robot[2])))
    return observations
