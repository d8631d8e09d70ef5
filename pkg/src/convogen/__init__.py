"""Generate, run and assess conversation tests for intent-based chatbots."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .agent import AgentDefinition, ParseError, ValidationError, load_agent, loads_agent
from .cleaner import CleaningRoutine, local_routine, set_up, tear_down
from .convo import Bot, Convo, Me, parse_convo, read_convos, serialize_convo
from .coverage import compute_coverage
from .executor import CORRECT, FLAKY, WRONG, run_suite
from .expander import expand
from .generator import generate_tests
from .mutation import generate_mutants, mutation_score
from .seedgen import generate_seeds
from .simulator import DETERMINISTIC, SEEDED_RANDOM, Session

BUNDLED_AGENTS = ("dmv", "currency", "room")

__version__ = "0.1.0"


def bundled_agent_path(name: str) -> Path:
    if name not in BUNDLED_AGENTS:
        raise KeyError(f"no bundled agent {name!r}; choose from {', '.join(BUNDLED_AGENTS)}")
    return Path(str(resources.files(__package__).joinpath("agents", f"{name}.agent.json")))


def bundled_agent(name: str) -> AgentDefinition:
    return load_agent(bundled_agent_path(name))


__all__ = [
    "AgentDefinition", "Bot", "BUNDLED_AGENTS", "CleaningRoutine", "Convo", "CORRECT",
    "DETERMINISTIC", "FLAKY", "Me", "ParseError", "SEEDED_RANDOM", "Session", "ValidationError",
    "WRONG", "bundled_agent", "bundled_agent_path", "compute_coverage", "expand",
    "generate_mutants", "generate_seeds", "generate_tests", "load_agent", "loads_agent",
    "local_routine", "mutation_score", "parse_convo", "read_convos", "run_suite",
    "serialize_convo", "set_up", "tear_down",
]
