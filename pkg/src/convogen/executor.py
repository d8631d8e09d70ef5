"""Run convo suites repeatedly and classify each test as correct, flaky or wrong."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .agent import AgentDefinition
from .cleaner import CleaningRoutine, set_up, tear_down
from .convo import Convo

log = logging.getLogger(__name__)

CORRECT, FLAKY, WRONG = "correct", "flaky", "wrong"
DEFAULT_REPEATS = 15


def oracle_text(text: str) -> str:
    return " ".join(text.split())


@dataclass
class Turn:
    me: str
    expected: str | None
    actual: str
    intent: str | None
    entities: dict = field(default_factory=dict)    # parameter -> (entity, value)
    passed: bool = False


@dataclass
class RunTrace:
    turns: list[Turn]

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.turns)


@dataclass
class ExecutionRecord:
    name: str
    runs: list[RunTrace]

    @property
    def pass_count(self) -> int:
        return sum(r.passed for r in self.runs)

    @property
    def fail_count(self) -> int:
        return len(self.runs) - self.pass_count

    @property
    def verdict(self) -> str:
        if self.fail_count == 0:
            return CORRECT
        if self.pass_count == 0:
            return WRONG
        return FLAKY


def run_once(convo: Convo, cr: CleaningRoutine, salt: str | None = None) -> RunTrace:
    """One execution of ``convo``; a bot error fails the remaining turns."""
    turns: list[Turn] = []
    script = convo.turns()
    conn = set_up(cr, salt)
    try:
        for me, expected in script:
            reply = conn.send(me)
            ok = expected is None or oracle_text(expected) == oracle_text(reply.text)
            turns.append(Turn(me, expected, reply.text, reply.matched_intent,
                              dict(reply.extracted), ok))
    except Exception as exc:  # noqa: BLE001 - a broken bot fails the run, not the suite
        log.warning("run of %s failed: %s", convo.name, exc)
        for me, expected in script[len(turns):]:
            turns.append(Turn(me, expected, f"<error: {exc}>", None, {}, False))
    finally:
        tear_down(cr)
    return RunTrace(turns)


def run_test(convo: Convo, cr: CleaningRoutine, repeats: int = DEFAULT_REPEATS) -> ExecutionRecord:
    return ExecutionRecord(convo.name,
                           [run_once(convo, cr, f"{convo.name}#{r}") for r in range(repeats)])


def run_suite(tests: Iterable[Convo], cr: CleaningRoutine, agent: AgentDefinition | None = None,
              repeats: int = DEFAULT_REPEATS, jobs: int = 1,
              log_file: IO[str] | None = None) -> list[ExecutionRecord]:
    """Execute every test ``repeats`` times with set-up/tear-down around each run.

    ``agent`` rebinds the routine to that agent when given. With ``jobs > 1``
    tests run in parallel, each on a clone of the routine with its own
    namespace.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    tests = list(tests)
    if agent is not None and cr.connect_params.get("agent") is not agent:
        cr.connect_params["agent"] = agent
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda c: run_test(c, cr.clone(), repeats), tests))
    else:
        records = [run_test(c, cr, repeats) for c in tests]
    if log_file is not None:
        write_log(records, log_file)
    return records


# -- report.json -------------------------------------------------------------

def _turn_json(t: Turn) -> dict:
    return {
        "me": t.me, "expected": t.expected, "actual": t.actual, "intent": t.intent,
        "entities": {k: list(v) for k, v in t.entities.items()}, "pass": t.passed,
    }


def _turn_from_json(d: dict) -> Turn:
    return Turn(d["me"], d.get("expected"), d["actual"], d.get("intent"),
                {k: tuple(v) for k, v in d.get("entities", {}).items()}, bool(d["pass"]))


def report_to_json(records: list[ExecutionRecord]) -> list[dict]:
    return [
        {
            "name": r.name,
            "verdict": r.verdict,
            "pass_count": r.pass_count,
            "fail_count": r.fail_count,
            "runs": [{"turns": [_turn_json(t) for t in run.turns]} for run in r.runs],
        }
        for r in records
    ]


def records_from_json(doc: list[dict]) -> list[ExecutionRecord]:
    return [ExecutionRecord(d["name"], [RunTrace([_turn_from_json(t) for t in run["turns"]])
                                        for run in d["runs"]])
            for d in doc]


def write_report(records: list[ExecutionRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_json(records), indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def read_report(path: str | Path) -> list[ExecutionRecord]:
    return records_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# -- verbose log ---------------------------------------------------------------
# One line per event, tab separated:
#   RUN <name> <index> | TURN <json turn> | END <name> <index> <PASS|FAIL>

def write_log(records: list[ExecutionRecord], out: IO[str]) -> None:
    for r in records:
        for k, run in enumerate(r.runs):
            out.write(f"RUN\t{r.name}\t{k}\n")
            for t in run.turns:
                out.write("TURN\t" + json.dumps(_turn_json(t), ensure_ascii=False) + "\n")
            out.write(f"END\t{r.name}\t{k}\t{'PASS' if run.passed else 'FAIL'}\n")


def parse_log(lines: Iterable[str]) -> list[ExecutionRecord]:
    records: dict[str, ExecutionRecord] = {}
    current: RunTrace | None = None
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        kind, _, rest = line.partition("\t")
        if kind == "RUN":
            name = rest.rsplit("\t", 1)[0]
            current = RunTrace([])
            records.setdefault(name, ExecutionRecord(name, [])).runs.append(current)
        elif kind == "TURN":
            if current is None:
                raise ValueError(f"log line {lineno}: TURN outside a run")
            current.turns.append(_turn_from_json(json.loads(rest)))
        elif kind == "END":
            current = None
        else:
            raise ValueError(f"log line {lineno}: unknown event {kind!r}")
    return list(records.values())
