"""
RoboServ Package

A deterministic desk-scale robot runtime: synthetic sensors, visual-inertial
SLAM, CNN object recognition and GMM-HMM command recognition scheduled on
modeled CPU/GPU lanes, with a cloud offloading policy and its TCP service.
"""

__version__ = "1.0.0"
__author__ = "Wi Han Ng"

# runtime before offload: offload modules import runtime submodules
from .runtime.scheduler import run_scenario
from .runtime.report import RunReport
from .offload.placement import decide_placement
from .offload.server import serve_offload
from .config.scenario_config import ScenarioConfig, load_scenario
from .utils.file_utils import find_scenario, find_scenario_files

__all__ = [
    'run_scenario',
    'RunReport',
    'decide_placement',
    'serve_offload',
    'ScenarioConfig',
    'load_scenario',
    'find_scenario',
    'find_scenario_files',
]
