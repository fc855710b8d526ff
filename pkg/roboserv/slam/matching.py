"""Feature-to-map data association"""

from typing import List, NamedTuple, Sequence

import numpy as np

from .features import descriptor_distance
from .state import AgentState
from .triangulation import Observation
from .world_map import MapPoint, WorldMap


class Match(NamedTuple):
    point: MapPoint
    observed: np.ndarray  # robot-frame (x, y)
    observation: Observation


def match_features(observations: Sequence[Observation], world_map: WorldMap, predicted_state: AgentState,
                   tau_desc: float = 0.5, ratio: float = 0.8, gating_radius: float = 0.5) -> List[Match]:
    """
    Associate triangulated observations with map points

    Candidates are the map points within gating_radius of the observation's
    predicted world position. A match needs descriptor distance below
    tau_desc and best < ratio * second best; each map point is claimed by at
    most one observation (the closest in descriptor space).

    Returns:
        Matches in observation order
    """
    if len(world_map) == 0 or not observations:
        return []
    predicted = predicted_state.robot_to_world(np.array([o.robot_xy for o in observations]))
    claims = {}
    for i, obs in enumerate(observations):
        candidates = world_map.query_radius(predicted[i], gating_radius)
        if not candidates:
            continue
        scored = sorted((descriptor_distance(obs.descriptor, p.descriptor), p.id) for p in candidates)
        best_dist, best_id = scored[0]
        if best_dist >= tau_desc:
            continue
        if len(scored) > 1 and not best_dist < ratio * scored[1][0]:
            continue
        if best_id not in claims or best_dist < claims[best_id][0]:
            claims[best_id] = (best_dist, i)
    winners = sorted((i, pid) for pid, (_, i) in claims.items())
    return [Match(world_map.get(pid), observations[i].robot_xy, observations[i]) for i, pid in winners]
