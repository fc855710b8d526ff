import json

import pytest

from roboserv.config import ConfigError, ScenarioConfig, fixture_deadlines, load_scenario
from roboserv.offload.endpoints import EndpointKind
from roboserv.runtime.records import ServiceId
from roboserv.utils.file_utils import SCENARIO_DIR, bundled_scenarios, find_scenario


@pytest.mark.parametrize("name", ["all-local", "lan-offload", "wan-only"])
def test_bundled_scenarios_survive_serialization(name):
    config = load_scenario(find_scenario(name))
    again = ScenarioConfig.from_dict(json.loads(config.to_json()))
    assert again.to_json() == config.to_json()
    assert again.name == name


def test_bundled_scenario_names():
    assert bundled_scenarios() == ["all-local", "lan-offload", "wan-only"]
    assert find_scenario("all-local.json") == SCENARIO_DIR / "all-local.json"
    with pytest.raises(FileNotFoundError):
        find_scenario("no-such-scenario")


def test_lan_scenario_endpoint():
    config = load_scenario(find_scenario("lan-offload"))
    assert [e.kind for e in config.endpoints] == [EndpointKind.LAN_CLOUD]
    assert config.enabled_services == [ServiceId.SLAM, ServiceId.VISION, ServiceId.SPEECH]


def test_defaults_from_minimal_document():
    config = ScenarioConfig.from_dict({"schema": 1, "_comment": "ignored", "duration_s": 2.0, "seed": 5})
    assert config.trajectory.duration_s == 2.0
    assert config.trajectory.seed == 5
    assert config.battery_wh == 24.0
    assert config.endpoints == []


def test_unknown_keys_name_their_path():
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"schema": 1, "services": {"vision": {"camera_divsor": 6}}})
    assert str(info.value) == "services.vision.camera_divsor: unknown key"
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"schema": 1, "bogus": 1})
    assert info.value.path == "bogus"
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"schema": 1, "services": {"lidar": {}}})
    assert "lidar" in str(info.value)


def test_schema_version_is_required():
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"name": "x"})
    assert info.value.path == "schema"
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"schema": 2})


def test_invalid_values_are_config_errors():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"schema": 1, "duration_s": -1.0})
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"schema": 1, "endpoints": [
            {"name": "x", "kind": "moon", "address": "10.0.0.1:7070"}]})
    assert info.value.path == "endpoints[0].kind"
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"schema": 1, "services": {"vision": {"placement": "nowhere"}}})
    assert "nowhere" in str(info.value)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"schema": 1, "deadlines": {"service": "slam"}})


def test_invalid_json_names_the_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": 1,', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert str(info.value).startswith("broken.json: invalid JSON")


def test_with_seed_moves_trajectory_seed():
    config = load_scenario(find_scenario("all-local"))
    reseeded = config.with_seed(99)
    assert reseeded.seed == 99
    assert reseeded.trajectory.seed == 99
    assert config.seed == 7


def test_fixture_deadlines():
    deadlines = {d.service: d for d in fixture_deadlines()}
    assert deadlines["pose"].max_latency_ms == 5.0
    assert deadlines["pose"].min_rate_hz == pytest.approx(198.0)
    assert deadlines["slam"].min_rate_hz == 15.0
