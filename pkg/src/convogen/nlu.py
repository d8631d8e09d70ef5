"""Deterministic template matching: text normalization, entity recognition and
training-phrase matching used by the simulator and the expander."""
from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from typing import Iterable

from .agent import AgentDefinition, EntityType, Intent, Literal, Slot, TrainingPhrase

REFERENCE_DATE = dt.date(2024, 5, 6)

_WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
_NUMBER = re.compile(r"^[-+]?\d+(?:\.\d+)?$")
_ISO_DATE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_CLOCK = re.compile(r"^(\d{1,2}):(\d{2})\s*(am|pm)?$")
_HOUR = re.compile(r"^(\d{1,2})\s*(am|pm)$")
_TERMINAL_PUNCT = ".!?,;:"

# Stand-in values offered for system entities wherever a concrete value is needed.
SYSTEM_SAMPLES = {
    "sys.number": ["30"],
    "sys.date": ["2024-05-07"],
    "sys.time": ["15:00"],
    "sys.any": ["anything"],
}


def collapse(text: str) -> str:
    return " ".join(text.split())


def normalize(text: str) -> str:
    """Case-fold, trim, collapse whitespace and strip terminal punctuation."""
    return collapse(text).casefold().rstrip(_TERMINAL_PUNCT).rstrip()


def parse_system(entity: str, text: str, today: dt.date = REFERENCE_DATE) -> str | None:
    t = collapse(text).casefold()
    if not t:
        return None
    if entity == "sys.any":
        return collapse(text)
    if entity == "sys.number":
        if not _NUMBER.match(t):
            return None
        return t.lstrip("+")
    if entity == "sys.date":
        m = _ISO_DATE.match(t)
        if m:
            try:
                return dt.date(int(m[1]), int(m[2]), int(m[3])).isoformat()
            except ValueError:
                return None
        if t in _WEEKDAYS:
            ahead = (_WEEKDAYS.index(t) - today.weekday()) % 7 or 7
            return (today + dt.timedelta(days=ahead)).isoformat()
        return None
    if entity == "sys.time":
        m = _CLOCK.match(t)
        if m:
            hour, minute, half = int(m[1]), int(m[2]), m[3]
        else:
            m = _HOUR.match(t)
            if not m:
                return None
            hour, minute, half = int(m[1]), 0, m[2]
        if minute > 59:
            return None
        if half:
            if not 1 <= hour <= 12:
                return None
            hour = hour % 12 + (12 if half == "pm" else 0)
        elif hour > 23:
            return None
        return f"{hour:02d}:{minute:02d}"
    return None


def parse_entity(agent: AgentDefinition, entity: str, text: str,
                 today: dt.date = REFERENCE_DATE) -> str | None:
    """Whole-text recognition: canonical value for ``text`` or None."""
    if entity.startswith("sys."):
        return parse_system(entity, text, today)
    etype = agent.entity(entity)
    if etype is None:
        return None
    key = normalize(text)
    for v in etype.values:
        if normalize(v.value) == key or any(normalize(s) == key for s in v.synonyms):
            return v.value
    return None


def find_entity(agent: AgentDefinition, entity: str, text: str,
                today: dt.date = REFERENCE_DATE) -> str | None:
    """Recognize ``entity`` in the whole text, else as a word-bounded substring
    (longest surface form wins, earliest position breaks ties)."""
    whole = parse_entity(agent, entity, text, today)
    if whole is not None or entity == "sys.any":
        return whole
    key = normalize(text)
    if entity.startswith("sys."):
        words = key.split()
        best = None
        for i in range(len(words)):
            for j in range(len(words), i, -1):
                got = parse_system(entity, " ".join(words[i:j]), today)
                if got is not None:
                    if best is None or (j - i) > best[0]:
                        best = (j - i, got)
                    break
        return best[1] if best else None
    etype = agent.entity(entity)
    if etype is None:
        return None
    best: tuple[int, int, str] | None = None
    for v in etype.values:
        for surface in (v.value, *v.synonyms):
            s = normalize(surface)
            if not s:
                continue
            m = re.search(r"(?<![\w])" + re.escape(s) + r"(?![\w])", key)
            if m and (best is None or (len(s), -m.start()) > (best[0], best[1])):
                best = (len(s), -m.start(), v.value)
    return best[2] if best else None


@dataclass(frozen=True)
class PhraseMatch:
    intent: Intent
    phrase: TrainingPhrase
    literal_length: int
    fills: dict            # parameter -> canonical value
    surface: dict          # parameter -> text as typed


def _norm_parts(phrase: TrainingPhrase) -> list:
    parts = []
    for p in phrase.parts:
        if isinstance(p, Literal):
            # Keep boundary spaces; they separate slots from literals.
            text = re.sub(r"\s+", " ", p.text).casefold()
            parts.append(Literal(text))
        else:
            parts.append(p)
    if parts and isinstance(parts[0], Literal):
        parts[0] = Literal(parts[0].text.lstrip())
    if parts and isinstance(parts[-1], Literal):
        parts[-1] = Literal(parts[-1].text.rstrip().rstrip(_TERMINAL_PUNCT).rstrip())
    return [p for p in parts if not (isinstance(p, Literal) and p.text == "")]


def match_phrase(agent: AgentDefinition, intent: Intent, phrase: TrainingPhrase, text: str,
                 today: dt.date = REFERENCE_DATE) -> PhraseMatch | None:
    """Match normalized ``text`` against one phrase, literals verbatim and slots
    parsed as their parameter's entity. Backtracks over slot boundaries."""
    key = normalize(text)
    parts = _norm_parts(phrase)
    entity_of = {p.name: p.entity for p in intent.parameters}
    literal_length = sum(len(p.text) for p in parts if isinstance(p, Literal))

    def walk(i: int, pos: int, fills: dict, surface: dict):
        if i == len(parts):
            return (fills, surface) if pos == len(key) else None
        part = parts[i]
        if isinstance(part, Literal):
            if key.startswith(part.text, pos):
                return walk(i + 1, pos + len(part.text), fills, surface)
            # A literal's boundary space may have been swallowed by punctuation stripping.
            stripped = part.text.strip()
            if stripped and part.text != stripped and key.startswith(stripped, pos):
                return walk(i + 1, pos + len(stripped), fills, surface)
            return None
        entity = entity_of.get(part.parameter)
        if entity is None:
            return None
        for end in range(len(key), pos, -1):
            chunk = key[pos:end]
            if chunk != chunk.strip():
                continue
            value = parse_entity(agent, entity, chunk, today)
            if value is None:
                continue
            got = walk(i + 1, end, {**fills, part.parameter: value},
                       {**surface, part.parameter: (pos, end)})
            if got is not None:
                return got
        return None

    got = walk(0, 0, {}, {})
    if got is None:
        return None
    fills, spans = got
    typed = collapse(text)
    # Report slot text as typed when case folding kept character positions.
    source = typed if len(typed.casefold()) == len(typed) else key
    surface = {name: source[a:b] for name, (a, b) in spans.items()}
    return PhraseMatch(intent, phrase, literal_length, fills, surface)


def best_match(agent: AgentDefinition, intents: Iterable[Intent], text: str,
               today: dt.date = REFERENCE_DATE) -> PhraseMatch | None:
    """Pick the winning match: longest literal length, then priority, then name."""
    best: PhraseMatch | None = None
    best_key = None
    for intent in intents:
        if intent.is_fallback:
            continue
        for phrase in intent.training_phrases:
            m = match_phrase(agent, intent, phrase, text, today)
            if m is None:
                continue
            k = (-m.literal_length, -intent.priority, intent.name)
            if best_key is None or k < best_key:
                best, best_key = m, k
    return best


def owning_intent(agent: AgentDefinition, text: str,
                  today: dt.date = REFERENCE_DATE) -> PhraseMatch | None:
    """Match ignoring contexts; used to find which intent a scripted message belongs to."""
    return best_match(agent, agent.intents, text, today)


def entity_values(agent: AgentDefinition, entity: str) -> list[str]:
    if entity.startswith("sys."):
        return list(SYSTEM_SAMPLES.get(entity, []))
    etype: EntityType | None = agent.entity(entity)
    return etype.canonical_values if etype else []


def slot_example(agent: AgentDefinition, intent: Intent, slot: Slot) -> str:
    """The text a static renderer puts in a slot: its annotated example, else
    the entity's first declared value."""
    if slot.example is not None:
        return slot.example
    param = intent.parameter(slot.parameter)
    values = entity_values(agent, param.entity) if param else []
    return values[0] if values else slot.parameter
