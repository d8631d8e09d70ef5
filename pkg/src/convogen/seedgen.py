"""Static seed tests: one convo per intent, built from the agent files alone.

This mirrors what a static generator can know. Bot steps are the first
response variant with parameter placeholders filled where the rendered user
text determines them; action results cannot be known and stay as written.
"""
from __future__ import annotations

import logging
from collections import deque
from pathlib import Path

from .agent import AgentDefinition, Intent, interpolate, placeholders, render_phrase
from .convo import Bot, Convo, Me, write_convo
from .nlu import REFERENCE_DATE, entity_values, parse_entity, slot_example

log = logging.getLogger(__name__)

UNREACHABLE = "unreachable"
DYNAMIC = "dynamic-oracle"


def _intent_steps(agent: AgentDefinition, intent: Intent) -> tuple[list, bool]:
    """Steps exercising one intent in isolation; second item is True when the
    closing response still holds unresolved placeholders."""
    steps: list = []
    fills: dict[str, str] = {}
    if intent.training_phrases:
        phrase = intent.training_phrases[0]
        surface = {s.parameter: slot_example(agent, intent, s) for s in phrase.slots}
        steps.append(Me(render_phrase(phrase, surface)))
        for name, text in surface.items():
            param = intent.parameter(name)
            value = parse_entity(agent, param.entity, text, REFERENCE_DATE)
            fills[name] = value if value is not None else text
    for param in intent.parameters:
        if param.required and param.name not in fills:
            values = entity_values(agent, param.entity)
            answer = values[0] if values else param.name
            steps.append(Bot(param.prompts[0]))
            steps.append(Me(answer))
            fills[param.name] = answer
    template = intent.responses[0][0]
    text = interpolate(template, fills, {}, keep_unresolved=True)
    unresolved = any(
        (sigil == "%" or name not in fills) for sigil, name in placeholders(template))
    steps.append(Bot(" ".join(text.split())))
    return steps, unresolved


def context_chain(agent: AgentDefinition, needed: tuple[str, ...]) -> list[Intent] | None:
    """Shortest intent sequence (breadth-first) after which every context in
    ``needed`` is active, following declared output contexts and lifespans."""
    start: tuple = ()
    queue = deque([(start, [])])
    seen = {start}
    candidates = [i for i in agent.non_fallback_intents if i.training_phrases]
    while queue:
        state, path = queue.popleft()
        active = dict(state)
        if set(needed) <= set(active):
            return path
        if len(path) >= len(candidates):
            continue
        for intent in candidates:
            if not set(intent.input_contexts) <= set(active):
                continue
            nxt = {k: v - 1 for k, v in active.items() if v > 1}
            for ctx in intent.output_contexts:
                nxt[ctx.name] = ctx.lifespan
            key = tuple(sorted(nxt.items()))
            if key not in seen:
                seen.add(key)
                queue.append((key, path + [intent]))
    return None


def generate_seeds(agent: AgentDefinition, *, chain_contexts: bool = True) -> list[Convo]:
    """One seed convo per non-fallback intent, in declaration order.

    Context-gated intents get the shortest establishing chain prepended. With
    no chain (or ``chain_contexts=False``, which mimics a generator blind to
    nested intents) the convo is still emitted, flagged ``unreachable``.
    """
    seeds = []
    for intent in agent.non_fallback_intents:
        if not intent.training_phrases:
            continue
        flags = []
        steps: list = []
        if intent.input_contexts:
            chain = context_chain(agent, intent.input_contexts) if chain_contexts else None
            if chain is None:
                flags.append(UNREACHABLE)
                log.info("seed %s: no intent chain establishes %s", intent.name,
                         ", ".join(intent.input_contexts))
            else:
                for link in chain:
                    steps.extend(_intent_steps(agent, link)[0])
        own, dynamic = _intent_steps(agent, intent)
        steps.extend(own)
        if dynamic:
            flags.append(DYNAMIC)
        seeds.append(Convo(intent.name, tuple(steps), seed=True, origin="seedgen",
                           flags=tuple(flags)))
    return seeds


def write_seeds(seeds: list[Convo], directory: str | Path) -> list[Path]:
    paths = []
    for c in seeds:
        path = Path(directory) / f"{c.name}.convo.txt"
        write_convo(c, path)
        paths.append(path)
    return paths
