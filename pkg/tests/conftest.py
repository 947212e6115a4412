import pytest
from hypothesis import HealthCheck, settings

from noveltest.games import build_clicker, build_maze_world
from noveltest.vm import load_game

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def maze_spec():
    return build_maze_world()


@pytest.fixture(scope="session")
def maze(maze_spec):
    return load_game(maze_spec)


@pytest.fixture(scope="session")
def clicker_spec():
    return build_clicker()


@pytest.fixture(scope="session")
def clicker(clicker_spec):
    return load_game(clicker_spec)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
