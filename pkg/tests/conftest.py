import pytest

from futuresim.content import default_scenario


@pytest.fixture(scope="session")
def default():
    return default_scenario()


@pytest.fixture()
def assignments(default):
    return {r.id: f"player:{r.id}" for r in default.roles}
