"""Pose correction from map matches and map extension"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .matching import Match
from .state import AgentState
from .triangulation import Observation
from .world_map import WorldMap

CORRECTED = "corrected"
TRANSLATION_ONLY = "translation-only"
PROPAGATION_ONLY = "propagation-only"

DEGENERATE_SPREAD = 1e-12  # m^2, summed squared distance to the centroid


@dataclass(frozen=True)
class PoseCorrection:
    state: AgentState
    flag: str
    n_matches: int

    @property
    def corrected(self) -> bool:
        return self.flag != PROPAGATION_ONLY


def register_2d(observed: np.ndarray, world: np.ndarray,
                heading_hint: float) -> Tuple[float, float, float, bool]:
    """
    Closed-form rigid transform mapping robot-frame points onto world points

    Returns:
        (x, y, heading, rotation_solved); with coincident observed points only
        the translation is solved and heading_hint is kept
    """
    o_mean = observed.mean(axis=0)
    w_mean = world.mean(axis=0)
    oc = observed - o_mean
    wc = world - w_mean
    if float(np.sum(oc * oc)) < DEGENERATE_SPREAD:
        theta, solved = heading_hint, False
    else:
        cross = float(np.sum(oc[:, 0] * wc[:, 1] - oc[:, 1] * wc[:, 0]))
        dot = float(np.sum(oc * wc))
        theta, solved = math.atan2(cross, dot), True
    c, s = math.cos(theta), math.sin(theta)
    tx = w_mean[0] - (c * o_mean[0] - s * o_mean[1])
    ty = w_mean[1] - (s * o_mean[0] + c * o_mean[1])
    return tx, ty, theta, solved


def _residuals(observed: np.ndarray, world: np.ndarray, x: float, y: float, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    px = x + c * observed[:, 0] - s * observed[:, 1]
    py = y + s * observed[:, 0] + c * observed[:, 1]
    return np.hypot(px - world[:, 0], py - world[:, 1])


def update_pose(state: AgentState, matches: Sequence[Match], refit_threshold: float = 0.3) -> PoseCorrection:
    """
    Replace the propagated pose with the registration of matched points

    With fewer than two matches the state comes back unchanged and flagged
    propagation-only. One refit drops matches whose residual exceeds
    refit_threshold; velocity is left to the caller.
    """
    if len(matches) < 2:
        return PoseCorrection(state, PROPAGATION_ONLY, len(matches))
    observed = np.array([m.observed for m in matches], dtype=np.float64)
    world = np.array([[m.point.x, m.point.y] for m in matches], dtype=np.float64)
    x, y, theta, solved = register_2d(observed, world, state.heading)
    inliers = _residuals(observed, world, x, y, theta) <= refit_threshold
    if not inliers.all():
        if inliers.sum() < 2:
            return PoseCorrection(state, PROPAGATION_ONLY, len(matches))
        x, y, theta, solved = register_2d(observed[inliers], world[inliers], state.heading)
    flag = CORRECTED if solved else TRANSLATION_ONLY
    return PoseCorrection(state.with_pose(x, y, theta), flag, int(inliers.sum()))


def extend_map(world_map: WorldMap, observations: Sequence[Observation], state: AgentState,
               corrected: bool = True) -> WorldMap:
    """
    Insert unmatched observations into the map from a corrected pose

    Insertion is skipped for a propagation-only pose unless the map is empty
    (bootstrap).
    """
    if not observations or (not corrected and len(world_map) > 0):
        return world_map
    world = state.robot_to_world(np.array([o.robot_xy for o in observations]))
    for obs, xy in zip(observations, world):
        world_map.insert(xy, obs.height, obs.descriptor)
    return world_map
