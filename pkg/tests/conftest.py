import pytest

from convogen import bundled_agent
from convogen.cleaner import local_routine
from convogen.generator import generate_tests
from convogen.seedgen import generate_seeds


@pytest.fixture(scope="session")
def dmv():
    return bundled_agent("dmv")


@pytest.fixture(scope="session")
def currency():
    return bundled_agent("currency")


@pytest.fixture(scope="session")
def room():
    return bundled_agent("room")


@pytest.fixture(scope="session")
def agents(dmv, currency, room):
    return {"dmv": dmv, "currency": currency, "room": room}


@pytest.fixture(scope="session")
def suites(agents):
    """Seed and generated suites per bundled agent, built once."""
    out = {}
    for name, agent in agents.items():
        seeds = generate_seeds(agent)
        generated = generate_tests(seeds, local_routine(agent), agent)
        out[name] = (seeds, [t for ts in generated.values() for t in ts])
    return out


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
