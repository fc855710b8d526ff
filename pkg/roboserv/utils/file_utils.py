"""Scenario and model file discovery"""

from pathlib import Path
from typing import Dict, List, Tuple, Union

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
VISION_MODEL_FILE = "shape-cnn.json"
SPEECH_MODEL_FILE = "speech-gmm-hmm.json"


def bundled_scenarios() -> List[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


def find_scenario(name_or_path: Union[str, Path]) -> Path:
    """
    Resolve a scenario argument

    Args:
        name_or_path: a file path, or the name of a bundled scenario
            ("all-local" or "all-local.json")

    Returns:
        Path to an existing scenario file
    """
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = SCENARIO_DIR / (path.name if path.suffix == ".json" else f"{path.name}.json")
    if path.parent == Path(".") and bundled.is_file():
        return bundled
    raise FileNotFoundError(f"scenario {str(name_or_path)!r} not found "
                            f"(bundled: {', '.join(bundled_scenarios())})")


def find_scenario_files(parent_dir: Union[str, Path], pattern: str = "*.json") -> List[Tuple[str, str]]:
    """
    Find all scenario files below a directory for batch runs

    Returns:
        List of tuples: (scenario path, suggested report path next to it)
    """
    parent_path = Path(parent_dir)
    files = []
    for scenario in sorted(parent_path.rglob(pattern)):
        if scenario.name.endswith(".report.json"):
            continue
        files.append((str(scenario), str(scenario.with_suffix(".report.json"))))
    return files


def model_paths(models_dir: Union[str, Path]) -> Dict[str, Path]:
    models_dir = Path(models_dir)
    return {"vision": models_dir / VISION_MODEL_FILE, "speech": models_dir / SPEECH_MODEL_FILE}


def find_models(models_dir: Union[str, Path]) -> Dict[str, Path]:
    """Model files of a models directory; raises FileNotFoundError naming what is missing"""
    if not Path(models_dir).is_dir():
        raise FileNotFoundError(f"models directory {str(models_dir)!r} does not exist")
    paths = model_paths(models_dir)
    missing = [str(p) for p in paths.values() if not p.is_file()]
    if missing:
        raise FileNotFoundError(f"missing model file(s): {', '.join(missing)}")
    return paths
