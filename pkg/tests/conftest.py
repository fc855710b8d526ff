import pytest

from roboserv.sensors.imu import ImuErrorModel, sample_imu
from roboserv.sensors.trajectory import TrajectorySpec, generate_trajectory


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long fixture runs (deselect with -m 'not slow')")


@pytest.fixture(scope="session")
def circle_gt():
    """The 10 s desk circle: radius 2 m at 0.5 m/s"""
    return generate_trajectory(TrajectorySpec("circle", 10.0, speed=0.5, radius=2.0, seed=7))


@pytest.fixture(scope="session")
def clean_imu(circle_gt):
    return sample_imu(circle_gt, ImuErrorModel(), seed=7)


@pytest.fixture(scope="session")
def models():
    """Fixture vision network and speech model, built once per session"""
    from roboserv.offload.server import fixture_models
    return fixture_models()
