"""Intent and entity-value coverage of executed suites."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .agent import AgentDefinition
from .executor import CORRECT, FLAKY, ExecutionRecord
from .simulator import FALLBACK


class UnknownAgentElement(LookupError):
    pass


@dataclass
class CoverageReport:
    intent_pct: float
    entity_pct: float | None          # None when the agent has no custom entity
    covered_intents: list[str]
    uncovered_intents: list[str]
    covered_values: list[tuple[str, str]]
    uncovered_values: list[tuple[str, str]]

    def to_json(self) -> dict:
        return {
            "intent_pct": self.intent_pct,
            "entity_pct": self.entity_pct,
            "covered_intents": self.covered_intents,
            "uncovered_intents": self.uncovered_intents,
            "covered_values": [list(v) for v in self.covered_values],
            "uncovered_values": [list(v) for v in self.uncovered_values],
        }


def counted_runs(records: list[ExecutionRecord], include_flaky: bool = False):
    for record in records:
        verdict = record.verdict
        if verdict == CORRECT:
            yield from record.runs
        elif include_flaky and verdict == FLAKY:
            yield from (run for run in record.runs if run.passed)


def compute_coverage(records: list[ExecutionRecord], agent: AgentDefinition,
                     include_flaky: bool = False) -> CoverageReport:
    intents = [i.name for i in agent.non_fallback_intents]
    all_intents = {i.name for i in agent.intents}
    values = [(e.name, v) for e in agent.entities for v in e.canonical_values]
    known_values = set(values)
    custom = {e.name for e in agent.entities}

    hit_intents: set[str] = set()
    hit_values: set[tuple[str, str]] = set()
    for run in counted_runs(records, include_flaky):
        for turn in run.turns:
            if turn.intent is not None and turn.intent != FALLBACK:
                if turn.intent not in all_intents:
                    raise UnknownAgentElement(f"intent {turn.intent!r}")
                hit_intents.add(turn.intent)
            for entity, value in turn.entities.values():
                if entity.startswith("sys."):
                    continue
                if entity not in custom or (entity, value) not in known_values:
                    raise UnknownAgentElement(f"entity value {entity}:{value!r}")
                hit_values.add((entity, value))

    covered = [n for n in intents if n in hit_intents]
    covered_v = [v for v in values if v in hit_values]
    intent_pct = 100.0 * len(covered) / len(intents) if intents else 0.0
    if values:
        entity_pct = 100.0 * len(covered_v) / len(values)
    else:
        entity_pct = None
    return CoverageReport(
        intent_pct=intent_pct,
        entity_pct=entity_pct,
        covered_intents=covered,
        uncovered_intents=[n for n in intents if n not in hit_intents],
        covered_values=covered_v,
        uncovered_values=[v for v in values if v not in hit_values],
    )


def write_coverage(report: CoverageReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")
