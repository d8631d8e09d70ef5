"""Alternative user messages at a point of a conversation.

Three cases, keyed on the bot message just received:

* no bot message yet: every training phrase of the intent behind the test's
  first user step;
* a prompt naming entities with ``@Entity``: the entity values, or the
  row-major product of several entities' values;
* any other reply: every training phrase of the intent behind the test's next
  user step, or nothing once the test has no user step left.

Phrases are rendered keeping slot values the test itself used, so element 0
is always the message the test would send.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .agent import SYSTEM_ENTITIES, AgentDefinition, render_phrase
from .convo import Bot, Convo, Me
from .nlu import entity_values, normalize, owning_intent, parse_entity, slot_example
from .simulator import BotReply

DEFAULT_MAX_COMBINATIONS = 10


class UnknownIntent(LookupError):
    """A scripted user message matches no intent of the agent."""


@dataclass(frozen=True)
class UserStep:
    text: str
    is_answer: bool     # reply to an entity prompt rather than an intent trigger


def referenced_entities(agent: AgentDefinition, text: str) -> list[str]:
    """Known entity names written as ``@Name`` in ``text``, in order of appearance."""
    names = sorted([e.name for e in agent.entities] + list(SYSTEM_ENTITIES), key=len, reverse=True)
    found: list[str] = []
    for m in re.finditer("@", text):
        rest = text[m.end():]
        for name in names:
            if rest.startswith(name) and not re.match(r"[\w-]", rest[len(name):len(name) + 1]):
                if name not in found:
                    found.append(name)
                break
    return found


def user_steps(t: Convo, agent: AgentDefinition) -> list[UserStep]:
    out = []
    prev_bot: str | None = None
    for step in t.steps:
        if isinstance(step, Bot):
            prev_bot = step.text
            continue
        # A message after a bot turn that triggers no intent can only be a prompt answer.
        answer = prev_bot is not None and owning_intent(agent, step.text) is None
        out.append(UserStep(step.text, answer))
    return out


def next_user_step(t: Convo, agent: AgentDefinition, cursor: int) -> int | None:
    """Index of the first intent-triggering user step at or after ``cursor``."""
    steps = user_steps(t, agent)
    for k in range(max(cursor, 0), len(steps)):
        if not steps[k].is_answer:
            return k
    return None


def utterances(agent: AgentDefinition, text: str) -> list[str]:
    """``text`` followed by every other rendered phrase of its intent."""
    match = owning_intent(agent, text)
    if match is None:
        raise UnknownIntent(text)
    intent = match.intent
    out = [text]
    seen = {normalize(text)}
    for phrase in intent.training_phrases:
        fills = {}
        for slot in phrase.slots:
            example = slot_example(agent, intent, slot)
            typed = match.surface.get(slot.parameter)
            if typed is None or normalize(typed) == normalize(example):
                fills[slot.parameter] = example
            else:
                fills[slot.parameter] = typed
        rendered = render_phrase(phrase, fills)
        if normalize(rendered) not in seen:
            seen.add(normalize(rendered))
            out.append(rendered)
    return out


def entity_combinations(agent: AgentDefinition, text: str,
                        max_combinations: int = DEFAULT_MAX_COMBINATIONS) -> list[str]:
    entities = referenced_entities(agent, text)
    if not entities:
        return []
    pools = [entity_values(agent, e) for e in entities]
    combos = (" ".join(values) for values in itertools.product(*pools))
    return list(itertools.islice(combos, max_combinations))


def _answer_key(agent: AgentDefinition, entities: list[str], text: str) -> str:
    """Canonical form of a prompt answer, so synonyms compare equal to values."""
    if len(entities) == 1:
        value = parse_entity(agent, entities[0], text)
        if value is not None:
            return value
    return normalize(text)


def _bot_text(bot_msg) -> str:
    return bot_msg.text if isinstance(bot_msg, BotReply) else str(bot_msg)


def _cursor_after(t: Convo, bot_text: str) -> int | None:
    """User-step index following the scripted bot step equal to ``bot_text``."""
    me_seen = 0
    target = " ".join(bot_text.split())
    for step in t.steps:
        if isinstance(step, Me):
            me_seen += 1
        elif " ".join(step.text.split()) == target:
            return me_seen
    return None


def expand(t: Convo, bot_msg: BotReply | str | None, agent: AgentDefinition, *,
           cursor: int | None = None,
           max_combinations: int = DEFAULT_MAX_COMBINATIONS) -> list[str]:
    """Alternatives for the next user message of ``t``.

    ``cursor`` is the index of the next unused user step of ``t``; when omitted
    it is located from the scripted bot step matching ``bot_msg``.
    """
    if bot_msg is None:
        steps = user_steps(t, agent)
        if not steps:
            return []
        return utterances(agent, steps[0].text)

    text = _bot_text(bot_msg)
    if referenced_entities(agent, text):
        alts = entity_combinations(agent, text, max_combinations)
        if cursor is not None:
            steps = user_steps(t, agent)
            if cursor < len(steps) and steps[cursor].is_answer:
                ours = _answer_key(agent, referenced_entities(agent, text), steps[cursor].text)
                for k, alt in enumerate(alts):
                    if _answer_key(agent, referenced_entities(agent, text), alt) == ours and k:
                        alts.insert(0, alts.pop(k))
                        break
        return alts

    if cursor is None:
        cursor = _cursor_after(t, text)
        if cursor is None:
            return []
    k = next_user_step(t, agent, cursor)
    if k is None:
        return []
    return utterances(agent, user_steps(t, agent)[k].text)
