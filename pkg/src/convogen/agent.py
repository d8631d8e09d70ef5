"""Declarative model of a task-based chatbot and its JSON agent file format.

An agent file is one UTF-8 JSON document::

    {
      "name": "dmv",
      "entities": [{"name": "AppointmentType",
                    "values": [{"value": "driver license", "synonyms": []}]}],
      "intents": [{"name": "Welcome", "training_phrases": ["hello"],
                   "responses": [["Welcome!"]], ...}]
    }

Training phrases are either plain strings or lists of parts, each part being
``{"text": ...}`` or ``{"slot": <parameter>, "example": <text>}``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Union

DEFAULT_PRIORITY = 500000
SYSTEM_ENTITIES = ("sys.number", "sys.date", "sys.time", "sys.any")

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")
_PLACEHOLDER = re.compile(
    r"(?P<sigil>[$%])(?:\{(?P<braced>[A-Za-z_][\w-]*)\}|(?P<bare>[A-Za-z_][\w-]*))"
)


class AgentError(Exception):
    pass


class ParseError(AgentError):
    """Malformed agent file; ``locus`` is ``line:col`` or a field path."""

    def __init__(self, message: str, locus: str = ""):
        self.locus = locus
        super().__init__(f"{locus}: {message}" if locus else message)


class ValidationError(AgentError):
    def __init__(self, message: str, element: str = ""):
        self.element = element
        super().__init__(message)


class MissingFill(KeyError):
    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(parameter)

    def __str__(self) -> str:
        return f"no fill for slot {self.parameter!r}"


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Slot:
    parameter: str
    example: str | None = None


Part = Union[Literal, Slot]


@dataclass(frozen=True)
class TrainingPhrase:
    parts: tuple[Part, ...]

    @classmethod
    def of(cls, *parts: Part | str) -> "TrainingPhrase":
        return cls(_merge_literals(Literal(p) if isinstance(p, str) else p for p in parts))

    @property
    def slots(self) -> tuple[Slot, ...]:
        return tuple(p for p in self.parts if isinstance(p, Slot))


@dataclass(frozen=True)
class EntityValue:
    value: str
    synonyms: tuple[str, ...] = ()


@dataclass(frozen=True)
class EntityType:
    name: str
    values: tuple[EntityValue, ...]

    @property
    def canonical_values(self) -> list[str]:
        return [v.value for v in self.values]


@dataclass(frozen=True)
class Parameter:
    name: str
    entity: str
    required: bool = False
    prompts: tuple[str, ...] = ()


@dataclass(frozen=True)
class OutputContext:
    name: str
    lifespan: int = 5


@dataclass(frozen=True)
class Intent:
    name: str
    responses: tuple[tuple[str, ...], ...]
    priority: int = DEFAULT_PRIORITY
    is_fallback: bool = False
    input_contexts: tuple[str, ...] = ()
    output_contexts: tuple[OutputContext, ...] = ()
    training_phrases: tuple[TrainingPhrase, ...] = ()
    parameters: tuple[Parameter, ...] = ()
    action: str | None = None

    def parameter(self, name: str) -> Parameter | None:
        for p in self.parameters:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class AgentDefinition:
    name: str
    entities: tuple[EntityType, ...]
    intents: tuple[Intent, ...]
    # Only serialized when several intents carry the fallback flag (mutants).
    fallback_name: str | None = field(default=None, compare=True)

    @property
    def default_fallback(self) -> Intent:
        fallbacks = [i for i in self.intents if i.is_fallback]
        if self.fallback_name is not None:
            for i in fallbacks:
                if i.name == self.fallback_name:
                    return i
        if not fallbacks:
            raise ValidationError("no fallback intent", self.name)
        return fallbacks[0]

    @property
    def non_fallback_intents(self) -> list[Intent]:
        return [i for i in self.intents if not i.is_fallback]

    def intent(self, name: str) -> Intent:
        for i in self.intents:
            if i.name == name:
                return i
        raise KeyError(name)

    def entity(self, name: str) -> EntityType | None:
        for e in self.entities:
            if e.name == name:
                return e
        return None


def _merge_literals(parts) -> tuple[Part, ...]:
    merged: list[Part] = []
    for p in parts:
        if isinstance(p, Literal):
            if not p.text:
                continue
            if merged and isinstance(merged[-1], Literal):
                merged[-1] = Literal(merged[-1].text + p.text)
                continue
        merged.append(p)
    return tuple(merged)


def placeholders(template: str) -> list[tuple[str, str]]:
    """(sigil, name) pairs for every ``$param`` / ``%key`` in a template."""
    return [
        (m.group("sigil"), m.group("braced") or m.group("bare"))
        for m in _PLACEHOLDER.finditer(template)
    ]


def interpolate(template: str, params: Mapping[str, str], results: Mapping[str, str],
                keep_unresolved: bool = False) -> str:
    def sub(m: re.Match) -> str:
        name = m.group("braced") or m.group("bare")
        table = params if m.group("sigil") == "$" else results
        if name in table:
            return table[name]
        return m.group(0) if keep_unresolved else ""

    return _PLACEHOLDER.sub(sub, template)


def render_phrase(phrase: TrainingPhrase, fills: Mapping[str, str]) -> str:
    out = []
    for part in phrase.parts:
        if isinstance(part, Literal):
            out.append(part.text)
        else:
            if part.parameter not in fills:
                raise MissingFill(part.parameter)
            out.append(fills[part.parameter])
    return " ".join("".join(out).split())


# ---------------------------------------------------------------------------
# JSON decoding

_AGENT_KEYS = {"name", "entities", "intents", "default_fallback"}
_ENTITY_KEYS = {"name", "values"}
_VALUE_KEYS = {"value", "synonyms"}
_INTENT_KEYS = {
    "name", "priority", "is_fallback", "input_contexts", "output_contexts",
    "training_phrases", "parameters", "responses", "action",
}
_PARAM_KEYS = {"name", "entity", "required", "prompts"}
_CONTEXT_KEYS = {"name", "lifespan"}


def _expect(value: Any, kind: type | tuple, where: str) -> Any:
    if kind is int and isinstance(value, bool):
        raise ParseError(f"expected int, got {type(value).__name__}", where)
    if not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ParseError(f"expected {names}, got {type(value).__name__}", where)
    return value


def _keys(obj: Any, allowed: set[str], required: set[str], where: str) -> dict:
    _expect(obj, dict, where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ParseError(f"unknown key {unknown[0]!r}", where)
    missing = sorted(required - set(obj))
    if missing:
        raise ParseError(f"missing key {missing[0]!r}", where)
    return obj


def _str_list(value: Any, where: str) -> tuple[str, ...]:
    _expect(value, list, where)
    return tuple(_expect(v, str, f"{where}[{i}]") for i, v in enumerate(value))


def _phrase_from_json(raw: Any, where: str) -> TrainingPhrase:
    if isinstance(raw, str):
        return TrainingPhrase.of(raw)
    _expect(raw, list, where)
    parts: list[Part] = []
    for k, part in enumerate(raw):
        pw = f"{where}[{k}]"
        _expect(part, dict, pw)
        if "slot" in part:
            _keys(part, {"slot", "example"}, {"slot"}, pw)
            example = part.get("example")
            if example is not None:
                _expect(example, str, f"{pw}.example")
            parts.append(Slot(_expect(part["slot"], str, f"{pw}.slot"), example))
        else:
            _keys(part, {"text"}, {"text"}, pw)
            parts.append(Literal(_expect(part["text"], str, f"{pw}.text")))
    return TrainingPhrase(_merge_literals(parts))


def agent_from_dict(doc: Any, *, strict: bool = True) -> AgentDefinition:
    _keys(doc, _AGENT_KEYS, {"name", "intents"}, "$")
    entities = []
    for i, e in enumerate(_expect(doc.get("entities", []), list, "entities")):
        where = f"entities[{i}]"
        _keys(e, _ENTITY_KEYS, {"name", "values"}, where)
        values = []
        for j, v in enumerate(_expect(e["values"], list, f"{where}.values")):
            vw = f"{where}.values[{j}]"
            if isinstance(v, str):
                values.append(EntityValue(v))
                continue
            _keys(v, _VALUE_KEYS, {"value"}, vw)
            values.append(EntityValue(
                _expect(v["value"], str, f"{vw}.value"),
                _str_list(v.get("synonyms", []), f"{vw}.synonyms"),
            ))
        entities.append(EntityType(_expect(e["name"], str, f"{where}.name"), tuple(values)))

    intents = []
    for i, raw in enumerate(_expect(doc["intents"], list, "intents")):
        where = f"intents[{i}]"
        _keys(raw, _INTENT_KEYS, {"name"}, where)
        params = []
        for j, p in enumerate(_expect(raw.get("parameters", []), list, f"{where}.parameters")):
            pw = f"{where}.parameters[{j}]"
            _keys(p, _PARAM_KEYS, {"name", "entity"}, pw)
            params.append(Parameter(
                _expect(p["name"], str, f"{pw}.name"),
                _expect(p["entity"], str, f"{pw}.entity").lstrip("@"),
                _expect(p.get("required", False), bool, f"{pw}.required"),
                _str_list(p.get("prompts", []), f"{pw}.prompts"),
            ))
        contexts = []
        for j, c in enumerate(_expect(raw.get("output_contexts", []), list, f"{where}.output_contexts")):
            cw = f"{where}.output_contexts[{j}]"
            if isinstance(c, str):
                contexts.append(OutputContext(c))
                continue
            _keys(c, _CONTEXT_KEYS, {"name"}, cw)
            contexts.append(OutputContext(
                _expect(c["name"], str, f"{cw}.name"),
                _expect(c.get("lifespan", 5), int, f"{cw}.lifespan"),
            ))
        responses = tuple(
            _str_list(r, f"{where}.responses[{j}]")
            for j, r in enumerate(_expect(raw.get("responses", []), list, f"{where}.responses"))
        )
        action = raw.get("action")
        if action is not None:
            _expect(action, str, f"{where}.action")
        intents.append(Intent(
            name=_expect(raw["name"], str, f"{where}.name"),
            responses=responses,
            priority=_expect(raw.get("priority", DEFAULT_PRIORITY), int, f"{where}.priority"),
            is_fallback=_expect(raw.get("is_fallback", False), bool, f"{where}.is_fallback"),
            input_contexts=_str_list(raw.get("input_contexts", []), f"{where}.input_contexts"),
            output_contexts=tuple(contexts),
            training_phrases=tuple(
                _phrase_from_json(tp, f"{where}.training_phrases[{j}]")
                for j, tp in enumerate(_expect(raw.get("training_phrases", []), list,
                                               f"{where}.training_phrases"))
            ),
            parameters=tuple(params),
            action=action,
        ))
    fallback_name = doc.get("default_fallback")
    if fallback_name is not None:
        _expect(fallback_name, str, "default_fallback")
    agent = AgentDefinition(
        name=_expect(doc["name"], str, "name"),
        entities=tuple(entities),
        intents=tuple(intents),
        fallback_name=fallback_name,
    )
    validate_agent(agent, strict=strict)
    return agent


def agent_to_dict(agent: AgentDefinition) -> dict:
    def phrase(tp: TrainingPhrase) -> list:
        out = []
        for p in tp.parts:
            if isinstance(p, Literal):
                out.append({"text": p.text})
            elif p.example is None:
                out.append({"slot": p.parameter})
            else:
                out.append({"slot": p.parameter, "example": p.example})
        return out

    doc: dict[str, Any] = {
        "name": agent.name,
        "entities": [
            {"name": e.name,
             "values": [{"value": v.value, "synonyms": list(v.synonyms)} for v in e.values]}
            for e in agent.entities
        ],
        "intents": [
            {
                "name": i.name,
                "priority": i.priority,
                "is_fallback": i.is_fallback,
                "input_contexts": list(i.input_contexts),
                "output_contexts": [{"name": c.name, "lifespan": c.lifespan}
                                    for c in i.output_contexts],
                "training_phrases": [phrase(tp) for tp in i.training_phrases],
                "parameters": [
                    {"name": p.name, "entity": p.entity, "required": p.required,
                     "prompts": list(p.prompts)}
                    for p in i.parameters
                ],
                "responses": [list(r) for r in i.responses],
                "action": i.action,
            }
            for i in agent.intents
        ],
    }
    if agent.fallback_name is not None:
        doc["default_fallback"] = agent.fallback_name
    return doc


def dumps_agent(agent: AgentDefinition) -> str:
    return json.dumps(agent_to_dict(agent), indent=2, ensure_ascii=False) + "\n"


def save_agent(agent: AgentDefinition, path: str | Path) -> None:
    Path(path).write_text(dumps_agent(agent), encoding="utf-8")


def loads_agent(text: str, *, strict: bool = True) -> AgentDefinition:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{exc.lineno}:{exc.colno}") from None
    return agent_from_dict(doc, strict=strict)


def load_agent(path: str | Path, *, strict: bool = True) -> AgentDefinition:
    """Load and validate an agent file.

    ``strict=False`` admits the degenerate shapes mutation operators produce:
    several fallback intents, prompts naming unknown entities, and response
    placeholders naming removed parameters.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read agent file: {exc}", str(path)) from None
    return loads_agent(text, strict=strict)


# ---------------------------------------------------------------------------
# Validation


def validate_agent(agent: AgentDefinition, *, strict: bool = True) -> None:
    if not agent.name.strip():
        raise ValidationError("agent name is empty", "name")
    seen: set[str] = set()
    for e in agent.entities:
        if not _IDENT.match(e.name) or e.name.startswith("sys."):
            raise ValidationError(f"invalid entity name {e.name!r}", e.name)
        if e.name in seen:
            raise ValidationError(f"duplicate entity {e.name!r}", e.name)
        seen.add(e.name)
        if not e.values:
            raise ValidationError(f"entity {e.name!r} has no values", e.name)
        canon = [v.value for v in e.values]
        for v in canon:
            if not v.strip():
                raise ValidationError(f"entity {e.name!r} has an empty value", e.name)
        if len(set(canon)) != len(canon):
            dup = next(v for v in canon if canon.count(v) > 1)
            raise ValidationError(f"duplicate value {dup!r} in entity {e.name!r}", dup)
    known_entities = seen | set(SYSTEM_ENTITIES)

    fallbacks = [i for i in agent.intents if i.is_fallback]
    if not fallbacks:
        raise ValidationError("no fallback intent", agent.name)
    if strict and len(fallbacks) > 1:
        raise ValidationError(
            f"more than one fallback intent: {fallbacks[1].name!r}", fallbacks[1].name)
    if agent.fallback_name is not None and agent.fallback_name not in {i.name for i in fallbacks}:
        raise ValidationError(
            f"default_fallback {agent.fallback_name!r} is not a fallback intent",
            agent.fallback_name)

    names: set[str] = set()
    for intent in agent.intents:
        _validate_intent(intent, known_entities, strict)
        if intent.name in names:
            raise ValidationError(f"duplicate intent {intent.name!r}", intent.name)
        names.add(intent.name)


def _validate_intent(intent: Intent, known_entities: set[str], strict: bool) -> None:
    name = intent.name
    if not name.strip() or name != name.strip() or re.search(r"[/\\\n]", name):
        raise ValidationError(f"invalid intent name {name!r}", name)
    if intent.is_fallback and (intent.training_phrases or intent.parameters):
        raise ValidationError(f"fallback intent {name!r} has training phrases or parameters", name)
    if not intent.is_fallback and not intent.training_phrases:
        raise ValidationError(f"intent {name!r} has no training phrases", name)
    if not intent.responses or any(not r for r in intent.responses):
        raise ValidationError(f"intent {name!r} needs at least one response variant", name)
    for c in intent.output_contexts:
        if c.lifespan < 1:
            raise ValidationError(f"context {c.name!r} of intent {name!r} has lifespan < 1", c.name)

    pnames: set[str] = set()
    for p in intent.parameters:
        if not _IDENT.match(p.name):
            raise ValidationError(f"invalid parameter name {p.name!r}", p.name)
        if p.name in pnames:
            raise ValidationError(f"duplicate parameter {p.name!r} in intent {name!r}", p.name)
        pnames.add(p.name)
        if p.entity not in known_entities:
            raise ValidationError(
                f"parameter {p.name!r} of intent {name!r} references unknown entity {p.entity!r}",
                p.entity)
        if p.required and not p.prompts:
            raise ValidationError(f"required parameter {p.name!r} has no prompt", p.name)
        if not p.required and p.prompts:
            raise ValidationError(f"optional parameter {p.name!r} carries prompts", p.name)
        if strict:
            for prompt in p.prompts:
                if not re.search(r"@" + re.escape(p.entity) + r"(?![\w-])", prompt):
                    raise ValidationError(
                        f"prompt of {p.name!r} does not reference @{p.entity}", p.name)

    for tp in intent.training_phrases:
        if not tp.parts:
            raise ValidationError(f"empty training phrase in intent {name!r}", name)
        if all(isinstance(part, Literal) for part in tp.parts) and not "".join(
                part.text for part in tp.parts).strip():
            raise ValidationError(f"blank training phrase in intent {name!r}", name)
        for s in tp.slots:
            if s.parameter not in pnames:
                raise ValidationError(
                    f"slot {s.parameter!r} in intent {name!r} names no parameter", s.parameter)

    for variants in intent.responses:
        for template in variants:
            for sigil, key in placeholders(template):
                if sigil == "$" and strict and key not in pnames:
                    raise ValidationError(
                        f"placeholder ${key} in intent {name!r} names no parameter", key)
                if sigil == "%" and intent.action is None:
                    raise ValidationError(
                        f"placeholder %{key} in intent {name!r} without an action", key)
