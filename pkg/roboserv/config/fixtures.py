"""Ready-made scenario configurations used by the test suite and the bundled scenario files"""

from typing import List, Optional

from ..runtime.deadlines import DeadlineSpec
from ..runtime.records import ServiceId
from ..runtime.scheduler import SceneObject, ServiceConfig, Utterance, default_services, slam_cost_table
from ..runtime.units import NavigationConfig, ReactionRule
from ..sensors.trajectory import TrajectorySpec
from .scenario_config import ScenarioConfig

POSE_DEADLINE_MS = 5.0
IMU_RATE_HZ = 200.0
VISION_MIN_RATE_HZ = 9.5


def fixture_deadlines(offloaded: bool = False) -> List[DeadlineSpec]:
    """Pose every 5 ms, stable localization, 10 FPS vision and 500 ms speech"""
    return [
        DeadlineSpec("pose", POSE_DEADLINE_MS, IMU_RATE_HZ * 0.99),
        DeadlineSpec("slam", None, 15.0),
        DeadlineSpec("vision", 110.0 if offloaded else 100.0, VISION_MIN_RATE_HZ),
        DeadlineSpec("speech", 500.0, None),
    ]


def fixture_rules() -> List[ReactionRule]:
    return [ReactionRule("disk", "greet", 0.6), ReactionRule("cross", "stop", 0.6)]


def slam_only_scenario(cost_table: str = "cpu-only", duration_s: float = 10.0, seed: int = 3) -> ScenarioConfig:
    """SLAM alone on a stationary robot; only the stage costs matter"""
    services = default_services()
    services[ServiceId.SLAM] = ServiceConfig(stages=slam_cost_table(cost_table))
    services[ServiceId.VISION] = ServiceConfig(enabled=False)
    services[ServiceId.SPEECH] = ServiceConfig(enabled=False)
    return ScenarioConfig(name=f"slam-{cost_table}", seed=seed, duration_s=duration_s,
                          trajectory=TrajectorySpec("stationary", duration_s, speed=0.0, seed=seed),
                          services=services)


def command_path_scenario(stop_at_s: float = 2.0, duration_s: float = 5.0,
                          seed: int = 4, goal: Optional[tuple] = (8.0, 0.0)) -> ScenarioConfig:
    """Navigation towards a far goal with "stop" spoken part way"""
    services = default_services()
    services[ServiceId.VISION] = ServiceConfig(enabled=False)
    return ScenarioConfig(
        name="command-path", seed=seed, duration_s=duration_s,
        trajectory=TrajectorySpec("straight-line", duration_s, speed=0.5, seed=seed),
        services=services,
        navigation=NavigationConfig(goals=[goal] if goal is not None else []),
        utterances=[Utterance(stop_at_s, ("stop",))],
        deadlines=[DeadlineSpec("speech", 500.0)],
    )


def reaction_scenario(duration_s: float = 2.0, seed: int = 6) -> ScenarioConfig:
    """Vision alone watching a disk, then a cross"""
    services = default_services()
    services[ServiceId.SLAM] = ServiceConfig(enabled=False)
    services[ServiceId.SPEECH] = ServiceConfig(enabled=False)
    return ScenarioConfig(
        name="reaction", seed=seed, duration_s=duration_s,
        trajectory=TrajectorySpec("stationary", duration_s, speed=0.0, seed=seed),
        services=services,
        navigation=NavigationConfig(rules=fixture_rules()),
        scene=[SceneObject(0.0, "disk"), SceneObject(duration_s / 2.0, "cross")],
    )
