import pytest
from hypothesis import settings

from movingframes.config import load_config

# several properties sweep a sidereal day per example; wall-clock deadlines only add flakiness
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def site_cfg():
    return load_config()
