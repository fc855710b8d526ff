"""Configuration module"""

from .fixtures import command_path_scenario, fixture_deadlines, reaction_scenario, slam_only_scenario
from .scenario_config import SCHEMA_VERSION, ConfigError, OutputPaths, ScenarioConfig, load_scenario

__all__ = [
    'command_path_scenario', 'fixture_deadlines', 'reaction_scenario', 'slam_only_scenario',
    'SCHEMA_VERSION', 'ConfigError', 'OutputPaths', 'ScenarioConfig', 'load_scenario',
]
