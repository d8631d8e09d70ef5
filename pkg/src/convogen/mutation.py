"""Agent mutants for the seven conversational mutation operators and the
mutation score of a convo suite against them."""
from __future__ import annotations

import itertools
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .agent import (
    AgentDefinition, EntityValue, Intent, Slot, TrainingPhrase, load_agent, render_phrase,
    save_agent,
)
from .cleaner import CleaningRoutine
from .convo import Convo
from .executor import CORRECT, run_test
from .nlu import entity_values, match_phrase, normalize, slot_example
from .simulator import DETERMINISTIC, Session

log = logging.getLogger(__name__)

OPERATORS = (
    "intent-removal",
    "entity-removal",
    "intent-parameter-removal",
    "intent-priority-change",
    "intent-fallback-flag",
    "entity-rename",
    "entity-value-change",
)
MIN_PRIORITY = 250000
ANY = "sys.any"


class BaselineUnstable(RuntimeError):
    def __init__(self, tests: list[str]):
        self.tests = tests
        super().__init__("tests not correct on the original agent: " + ", ".join(tests))


@dataclass(frozen=True)
class MutantDescriptor:
    id: str
    operator: str
    target: str
    payload: str | int | None = None
    equivalent: bool = False
    reason: str = ""

    def to_json(self) -> dict:
        return {"id": self.id, "operator": self.operator, "target": self.target,
                "payload": self.payload, "equivalent": self.equivalent, "reason": self.reason}

    @classmethod
    def from_json(cls, d: dict) -> "MutantDescriptor":
        return cls(d["id"], d["operator"], d["target"], d.get("payload"),
                   bool(d.get("equivalent", False)), d.get("reason", ""))


# -- operators -----------------------------------------------------------------

def _fresh(base: str, taken: set[str]) -> str:
    for n in itertools.count(1):
        candidate = f"{base}{n}"
        if candidate not in taken:
            return candidate
    raise AssertionError


def _with_intent(agent: AgentDefinition, new: Intent) -> AgentDefinition:
    return replace(agent, intents=tuple(new if i.name == new.name else i for i in agent.intents))


def _slot_to_literal(agent: AgentDefinition, intent: Intent, phrase: TrainingPhrase,
                     parameter: str) -> TrainingPhrase:
    parts = [p if not (isinstance(p, Slot) and p.parameter == parameter)
             else slot_example(agent, intent, p) for p in phrase.parts]
    return TrainingPhrase.of(*parts)


def remove_intent(agent, intent):
    fallback_name = agent.fallback_name
    return replace(agent, intents=tuple(i for i in agent.intents if i.name != intent.name),
                   fallback_name=fallback_name)


def remove_entity(agent, entity):
    intents = []
    for i in agent.intents:
        params = tuple(replace(p, entity=ANY) if p.entity == entity.name else p
                       for p in i.parameters)
        intents.append(replace(i, parameters=params))
    return replace(agent, entities=tuple(e for e in agent.entities if e.name != entity.name),
                   intents=tuple(intents))


def remove_parameter(agent, intent, param):
    phrases = tuple(_slot_to_literal(agent, intent, tp, param.name) for tp in intent.training_phrases)
    params = tuple(p for p in intent.parameters if p.name != param.name)
    return _with_intent(agent, replace(intent, training_phrases=phrases, parameters=params))


def lower_priority(agent, intent):
    return _with_intent(agent, replace(intent, priority=MIN_PRIORITY))


def flag_fallback(agent, intent):
    default = agent.default_fallback.name
    mutated = replace(intent, is_fallback=True, training_phrases=(), parameters=())
    return replace(_with_intent(agent, mutated), fallback_name=default)


def rename_entity(agent, entity, new_name):
    intents = []
    for i in agent.intents:
        # Prompts keep the old name on purpose.
        params = tuple(replace(p, entity=new_name) if p.entity == entity.name else p
                       for p in i.parameters)
        intents.append(replace(i, parameters=params))
    entities = tuple(replace(e, name=new_name) if e.name == entity.name else e
                     for e in agent.entities)
    return replace(agent, entities=entities, intents=tuple(intents))


def change_value(agent, entity, new_value):
    first = entity.values[0]
    values = (EntityValue(new_value, first.synonyms),) + entity.values[1:]
    return replace(agent, entities=tuple(replace(e, values=values) if e.name == entity.name else e
                                         for e in agent.entities))


# -- equivalence pre-filter ----------------------------------------------------

def phrase_renders(agent: AgentDefinition, intent: Intent) -> list[str]:
    """Each phrase with example fills, plus one render per alternative slot value."""
    out: list[str] = []
    for tp in intent.training_phrases:
        base = {s.parameter: slot_example(agent, intent, s) for s in tp.slots}
        renders = [render_phrase(tp, base)]
        for s in tp.slots:
            param = intent.parameter(s.parameter)
            for v in entity_values(agent, param.entity) if param else []:
                renders.append(render_phrase(tp, {**base, s.parameter: v}))
        for r in renders:
            if r not in out:
                out.append(r)
    return out


def _template(agent: AgentDefinition, intent: Intent, tp: TrainingPhrase) -> str:
    out = []
    for p in tp.parts:
        if isinstance(p, Slot):
            param = intent.parameter(p.parameter)
            out.append(f"\x00{param.entity if param else '?'}\x00")
        else:
            out.append(p.text)
    return normalize("".join(out))


def competes(agent: AgentDefinition, a: Intent, b: Intent) -> bool:
    """Whether two intents can claim the same user message. Context sets are
    assumed to overlap, which errs towards non-equivalence."""
    ta = {_template(agent, a, tp) for tp in a.training_phrases}
    if ta & {_template(agent, b, tp) for tp in b.training_phrases}:
        return True
    for x, y in ((a, b), (b, a)):
        for text in phrase_renders(agent, x):
            if any(match_phrase(agent, y, tp, text) for tp in y.training_phrases):
                return True
    return False


def _priority_equivalent(agent: AgentDefinition, intent: Intent) -> str:
    if intent.priority <= MIN_PRIORITY:
        return "priority already at the minimum tier"
    rivals = [o for o in agent.non_fallback_intents if o.name != intent.name]
    if not any(competes(agent, intent, o) for o in rivals):
        return "no other intent competes for its training phrases"
    return ""


def generate_mutants(agent: AgentDefinition) -> list[tuple[MutantDescriptor, AgentDefinition]]:
    out: list[tuple[MutantDescriptor, AgentDefinition]] = []

    def add(op, target, mutant, payload=None, reason=""):
        ident = f"{len(out) + 1:03d}-{op}"
        out.append((MutantDescriptor(ident, op, target, payload, bool(reason), reason), mutant))

    entity_names = {e.name for e in agent.entities}
    for i in agent.non_fallback_intents:
        add("intent-removal", f"intents/{i.name}", remove_intent(agent, i))
    for e in agent.entities:
        add("entity-removal", f"entities/{e.name}", remove_entity(agent, e))
    for i in agent.non_fallback_intents:
        for p in i.parameters:
            if p.required:
                add("intent-parameter-removal", f"intents/{i.name}/parameters/{p.name}",
                    remove_parameter(agent, i, p))
    for i in agent.non_fallback_intents:
        add("intent-priority-change", f"intents/{i.name}", lower_priority(agent, i),
            MIN_PRIORITY, _priority_equivalent(agent, i))
    for i in agent.non_fallback_intents:
        add("intent-fallback-flag", f"intents/{i.name}", flag_fallback(agent, i))
    for e in agent.entities:
        new = _fresh(f"{e.name}_renamed", entity_names)
        add("entity-rename", f"entities/{e.name}", rename_entity(agent, e, new), new)
    for e in agent.entities:
        taken = {normalize(s) for v in e.values for s in (v.value, *v.synonyms)}
        new = _fresh("mutatedvalue", taken)
        add("entity-value-change", f"entities/{e.name}/values/{e.values[0].value}",
            change_value(agent, e, new), new)
    return out


# -- brute-force behaviour probe -----------------------------------------------

def probe_messages(agent: AgentDefinition) -> list[str]:
    """Every rendered training phrase plus every entity value."""
    msgs: list[str] = []
    for i in agent.non_fallback_intents:
        for r in phrase_renders(agent, i):
            if r not in msgs:
                msgs.append(r)
    for e in agent.entities:
        for v in e.canonical_values:
            if v not in msgs:
                msgs.append(v)
    return msgs


def behaviour(agent: AgentDefinition, messages: list[str], depth: int = 2) -> list[tuple]:
    """Reply texts for every probe conversation of up to ``depth`` messages,
    each on a fresh session and store."""
    transcript = []
    for seq in itertools.chain.from_iterable(
            itertools.product(messages, repeat=n) for n in range(1, depth + 1)):
        session = Session(agent, 0, DETERMINISTIC)
        try:
            transcript.append(tuple(session.send(m).text for m in seq))
        except Exception as exc:  # noqa: BLE001 - a crashing mutant is distinct behaviour
            transcript.append(("<error>", type(exc).__name__))
    return transcript


def probe_identical(original: AgentDefinition, mutant: AgentDefinition,
                    messages: list[str] | None = None, depth: int = 2) -> bool:
    messages = probe_messages(original) if messages is None else messages
    return behaviour(original, messages, depth) == behaviour(mutant, messages, depth)


# -- scoring -------------------------------------------------------------------

@dataclass
class MutationReport:
    total: int
    equivalent: int
    killed: int
    survived: list[str]
    killed_ids: list[str]
    suspected_equivalent: list[str]

    @property
    def score(self) -> float | None:
        denominator = self.total - self.equivalent
        return self.killed / denominator if denominator else None

    @property
    def ratio(self) -> str:
        return f"{self.killed}/{self.total - self.equivalent}"

    def to_json(self) -> dict:
        return {
            "total": self.total, "equivalent": self.equivalent, "killed": self.killed,
            "survived": self.survived, "killed_ids": self.killed_ids,
            "suspected_equivalent": self.suspected_equivalent,
            "score": self.score, "ratio": self.ratio,
        }


def _killed(mutant: AgentDefinition, tests: list[Convo], cr: CleaningRoutine,
            repeats: int) -> bool:
    mcr = cr.clone(agent=mutant)
    deterministic = mcr.connect_params.get("mode", DETERMINISTIC) == DETERMINISTIC
    for t in tests:
        record = run_test(t, mcr, repeats)
        if deterministic and record.pass_count == 0:
            return True
        if not deterministic and record.fail_count > 0:
            return True
    return False


def stable_tests(original: AgentDefinition, tests: list[Convo], cr: CleaningRoutine,
                 repeats: int = 1) -> tuple[list[Convo], list[str]]:
    """Split ``tests`` into those correct on the original and the names of the rest."""
    base = cr.clone(agent=original)
    keep, dropped = [], []
    for t in tests:
        (keep.append(t) if run_test(t, base, repeats).verdict == CORRECT
         else dropped.append(t.name))
    return keep, dropped


def mutation_score(original: AgentDefinition, mutants, tests: list[Convo],
                   cr: CleaningRoutine, repeats: int = 1, *, jobs: int = 1,
                   probe: bool = True) -> MutationReport:
    """Kill every mutant a test fails on. Equivalent mutants leave the
    denominator; unflagged mutants the probe cannot tell apart are listed as
    suspected equivalent."""
    _, unstable = stable_tests(original, tests, cr, repeats)
    if unstable:
        raise BaselineUnstable(unstable)
    mutants = list(mutants)
    live = [(d, m) for d, m in mutants if not d.equivalent]

    def judge(pair):
        return _killed(pair[1], tests, cr, repeats)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(judge, live))
    else:
        verdicts = [judge(p) for p in live]

    killed = [d.id for (d, _), k in zip(live, verdicts) if k]
    survived = [d.id for (d, _), k in zip(live, verdicts) if not k]
    suspected = []
    if probe and survived:
        messages = probe_messages(original)
        survivors = {d.id: m for d, m in live if d.id in survived}
        suspected = [i for i in survived if probe_identical(original, survivors[i], messages)]
    return MutationReport(len(mutants), len(mutants) - len(live), len(killed), survived,
                          killed, suspected)


# -- files -----------------------------------------------------------------------

def _safe(ident: str) -> str:
    return re.sub(r"[^\w.-]", "_", ident)


def write_mutants(mutants, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for d, m in mutants:
        save_agent(m, directory / f"{_safe(d.id)}.agent.json")
        index.append(d.to_json())
    path = directory / "index.json"
    path.write_text(json.dumps(index, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def read_mutants(directory: str | Path) -> list[tuple[MutantDescriptor, AgentDefinition]]:
    directory = Path(directory)
    index = json.loads((directory / "index.json").read_text(encoding="utf-8"))
    out = []
    for d in index:
        desc = MutantDescriptor.from_json(d)
        out.append((desc, load_agent(directory / f"{_safe(desc.id)}.agent.json", strict=False)))
    return out


__all__ = [
    "OPERATORS", "MutantDescriptor", "MutationReport", "BaselineUnstable", "generate_mutants",
    "mutation_score", "stable_tests", "probe_identical", "probe_messages", "write_mutants", "read_mutants",
]
