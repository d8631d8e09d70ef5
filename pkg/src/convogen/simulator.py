"""A deterministic local stand-in for a deployed Dialogflow agent.

Intents are matched by template (see :mod:`convogen.nlu`), contexts gate
intents for a number of turns, required parameters are collected by prompting,
and action handlers run against a namespaced persistence store.
"""
from __future__ import annotations

import datetime as dt
import itertools
import logging
import random
from dataclasses import dataclass, field

from .actions import ActionRegistry, registry as default_registry
from .agent import AgentDefinition, Intent, interpolate
from .nlu import REFERENCE_DATE, best_match, find_entity
from .store import PersistenceStore

log = logging.getLogger(__name__)

DETERMINISTIC = "deterministic"
SEEDED_RANDOM = "seeded-random"
MODES = (DETERMINISTIC, SEEDED_RANDOM)
FALLBACK = "fallback"

_namespaces = itertools.count(1)


class SessionClosed(RuntimeError):
    pass


@dataclass(frozen=True)
class BotReply:
    text: str
    matched_intent: str
    extracted: dict = field(default_factory=dict)   # parameter -> (entity, value)
    is_prompt: bool = False


@dataclass
class PendingSlot:
    intent: str
    parameter: str
    fills: dict


class Session:
    """Live dialog state for one conversation. Not safe for concurrent use."""

    def __init__(self, agent: AgentDefinition, seed: int = 0, mode: str = DETERMINISTIC, *,
                 store: PersistenceStore | None = None, namespace: str | None = None,
                 actions: ActionRegistry | None = None, today: dt.date = REFERENCE_DATE):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.agent = agent
        self.mode = mode
        self.rng_seed = seed & 0xFFFFFFFFFFFFFFFF
        self.rng = random.Random(self.rng_seed)
        self.store = store if store is not None else PersistenceStore()
        self.store_namespace = namespace or f"session-{next(_namespaces)}"
        self.actions = actions or default_registry
        self.today = today
        self.active_contexts: dict[str, int] = {}
        self.context_params: dict[str, dict] = {}
        self.pending_slot: PendingSlot | None = None
        self.turn_counter = 0
        self.closed = False

    # -- public API ---------------------------------------------------------

    def send(self, user_text: str) -> BotReply:
        if self.closed:
            raise SessionClosed(self.store_namespace)
        self.turn_counter += 1
        if self.pending_slot is not None:
            reply = self._resume(user_text)
            if reply is not None:
                return reply
        self.pending_slot = None
        candidates = [i for i in self.agent.intents
                      if not i.is_fallback and set(i.input_contexts) <= set(self.active_contexts)]
        match = best_match(self.agent, candidates, user_text, self.today)
        if match is None:
            return self._fallback()
        return self._advance(match.intent, dict(match.fills))

    def close(self) -> None:
        self.closed = True

    # -- internals ----------------------------------------------------------

    def _missing(self, intent: Intent, fills: dict) -> list:
        return [p for p in intent.parameters if p.required and p.name not in fills]

    def _resume(self, user_text: str) -> BotReply | None:
        pending = self.pending_slot
        intent = self.agent.intent(pending.intent)
        param = intent.parameter(pending.parameter)
        value = find_entity(self.agent, param.entity, user_text, self.today)
        if value is None:
            return None
        fills = dict(pending.fills)
        fills[param.name] = value
        # An answer may carry values for other missing parameters too.
        for other in self._missing(intent, fills):
            got = find_entity(self.agent, other.entity, user_text, self.today)
            if got is not None and other.entity != "sys.any":
                fills[other.name] = got
        self.pending_slot = None
        return self._advance(intent, fills)

    def _extracted(self, intent: Intent, fills: dict) -> dict:
        return {name: (intent.parameter(name).entity, value) for name, value in fills.items()
                if intent.parameter(name) is not None}

    def _advance(self, intent: Intent, fills: dict) -> BotReply:
        missing = self._missing(intent, fills)
        if missing:
            param = missing[0]
            self.pending_slot = PendingSlot(intent.name, param.name, fills)
            return BotReply(param.prompts[0], intent.name, self._extracted(intent, fills), True)
        return self._complete(intent, fills)

    def _fallback(self) -> BotReply:
        active = set(self.active_contexts)
        scoped = [i for i in self.agent.intents
                  if i.is_fallback and i.input_contexts and set(i.input_contexts) <= active]
        if scoped:
            intent = min(scoped, key=lambda i: (-len(i.input_contexts), -i.priority, i.name))
        else:
            intent = self.agent.default_fallback
        reply = self._complete(intent, {})
        return BotReply(reply.text, FALLBACK, {}, False)

    def _complete(self, intent: Intent, fills: dict) -> BotReply:
        carried: dict = {}
        for ctx in intent.input_contexts:
            carried.update(self.context_params.get(ctx, {}))
        results: dict = {}
        if intent.action is not None:
            handler = self.actions.get(intent.action)
            out = handler({**carried, **fills}, self.store.view(self.store_namespace), self)
            results = {str(k): str(v) for k, v in (out or {}).items()}

        for name in list(self.active_contexts):
            self.active_contexts[name] -= 1
            if self.active_contexts[name] <= 0:
                del self.active_contexts[name]
                self.context_params.pop(name, None)
        for ctx in intent.output_contexts:
            self.active_contexts[ctx.name] = ctx.lifespan
            self.context_params[ctx.name] = {**carried, **fills}

        texts = []
        for variants in intent.responses:
            template = variants[0] if self.mode == DETERMINISTIC else self.rng.choice(variants)
            texts.append(interpolate(template, fills, results))
        text = " ".join(" ".join(texts).split())
        return BotReply(text, intent.name, self._extracted(intent, fills), False)


def open_session(agent: AgentDefinition, seed: int = 0, mode: str = DETERMINISTIC,
                 **kwargs) -> Session:
    return Session(agent, seed, mode, **kwargs)


def send_message(session: Session, user_text: str) -> BotReply:
    return session.send(user_text)


def register_action(handler_id: str, handler=None):
    from .actions import register_action as _register

    return _register(handler_id, handler)
