"""Utilities module"""

from .file_utils import find_models, find_scenario, find_scenario_files, model_paths

__all__ = ['find_models', 'find_scenario', 'find_scenario_files', 'model_paths']
