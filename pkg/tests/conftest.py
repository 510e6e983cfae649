import pytest

from campusnet import demo
from campusnet.runtime import CampusRuntime


@pytest.fixture
def triangle_rt():
    return CampusRuntime(demo.triangle())


@pytest.fixture
def ring_rt():
    return CampusRuntime(demo.ring_campus())


@pytest.fixture
def campus_rt():
    return CampusRuntime(demo.campus())
