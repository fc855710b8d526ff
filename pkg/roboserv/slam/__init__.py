"""Visual-inertial SLAM: propagation, stereo features, map and pose update"""

from .features import FeaturePoint, extract_features
from .matching import Match, match_features
from .pipeline import PoseRecord, SlamPipeline, SlamRun, run_slam
from .propagation import propagate
from .state import AgentState, SlamParams
from .triangulation import Observation, TriangulationError, triangulate_stereo
from .update import PoseCorrection, extend_map, update_pose
from .world_map import MapPoint, WorldMap

__all__ = [
    'FeaturePoint', 'extract_features',
    'Match', 'match_features',
    'PoseRecord', 'SlamPipeline', 'SlamRun', 'run_slam',
    'propagate',
    'AgentState', 'SlamParams',
    'Observation', 'TriangulationError', 'triangulate_stereo',
    'PoseCorrection', 'extend_map', 'update_pose',
    'MapPoint', 'WorldMap',
]
