"""Dynamic test augmentation.

Every seed is replayed against the live bot. Each bot reply is recorded as the
oracle of the step that caused it, and whenever the expander offers several
next messages the current test forks: alternative 0 continues the test,
every other alternative starts a pending branch that inherits the user
messages sent so far. Branches are completed afterwards, each on a clean
connection.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .agent import AgentDefinition
from .cleaner import CleaningRoutine, set_up, tear_down
from .convo import Bot, Convo, Me, write_convo
from .expander import DEFAULT_MAX_COMBINATIONS, expand, next_user_step, user_steps
from .simulator import FALLBACK, BotReply

log = logging.getLogger(__name__)

DEFAULT_MAX_TESTS_PER_SEED = 256
MAX_TURNS = 64


class GenerationAborted(RuntimeError):
    def __init__(self, test: str, cause: str):
        self.test = test
        self.cause = cause
        super().__init__(f"{test}: {cause}")


@dataclass
class _Test:
    seed: bool
    messages: list[str] = field(default_factory=list)
    replies: list[BotReply] = field(default_factory=list)
    cursor: int = 0            # next unused user step of the seed convo


class Generator:
    def __init__(self, agent: AgentDefinition, cr: CleaningRoutine, *,
                 max_combinations: int = DEFAULT_MAX_COMBINATIONS,
                 max_tests_per_seed: int = DEFAULT_MAX_TESTS_PER_SEED,
                 truncate_branches: bool = False, strict: bool = False):
        self.agent = agent
        self.cr = cr
        self.max_combinations = max_combinations
        self.max_tests_per_seed = max_tests_per_seed
        self.truncate_branches = truncate_branches
        self.strict = strict
        self.aborted: list[GenerationAborted] = []

    # -- cursor bookkeeping -------------------------------------------------

    def _after_send(self, st: Convo, cursor: int, reply_was_prompt: bool) -> int:
        """Seed cursor once the message chosen for the current reply was sent."""
        if reply_was_prompt:
            steps = user_steps(st, self.agent)
            if cursor < len(steps) and steps[cursor].is_answer:
                return cursor + 1
            return cursor
        k = next_user_step(st, self.agent, cursor)
        return cursor if k is None else k + 1

    def _expand(self, st: Convo, reply: BotReply, cursor: int) -> list[str]:
        return expand(st, reply, self.agent, cursor=cursor,
                      max_combinations=self.max_combinations)

    def _send(self, conn, test: _Test, name: str, message: str) -> BotReply:
        if len(test.messages) >= MAX_TURNS:
            raise GenerationAborted(name, f"conversation exceeded {MAX_TURNS} turns")
        reply = conn.send(message)
        test.messages.append(message)
        test.replies.append(reply)
        if reply.matched_intent == FALLBACK:
            raise GenerationAborted(name, f"fallback reply to {message!r}: {reply.text!r}")
        return reply

    # -- main loop ----------------------------------------------------------

    def generate_for_seed(self, st: Convo) -> list[Convo]:
        start = expand(st, None, self.agent, max_combinations=self.max_combinations)
        first = next_user_step(st, self.agent, 0)
        tests = [_Test(seed=True, messages=[], cursor=0) for _ in start]
        out: list[Convo] = []
        i = 0
        while i < len(tests):
            test = tests[i]
            name = f"{st.name}-{i}"
            set_up(self.cr)
            try:
                conn = self.cr.connection
                if test.seed:
                    test.cursor = 0 if first is None else first + 1
                    reply = self._send(conn, test, name, start[i])
                    self._continue(st, conn, test, name, reply, tests, branch=True)
                else:
                    inherited, test.messages = test.messages, []
                    reply = None
                    for message in inherited:
                        reply = self._send(conn, test, name, message)
                    if not self.truncate_branches and reply is not None:
                        self._continue(st, conn, test, name, reply, tests, branch=False)
                out.append(self._to_convo(name, test))
            except GenerationAborted as exc:
                log.warning("dropping generated test %s", exc)
                self.aborted.append(exc)
                if self.strict:
                    raise
            finally:
                tear_down(self.cr)
            i += 1
        return out

    def _continue(self, st, conn, test: _Test, name: str, reply: BotReply,
                  tests: list[_Test], branch: bool) -> None:
        while True:
            alts = self._expand(st, reply, test.cursor)
            if not alts:
                return
            cursor = self._after_send(st, test.cursor, reply.is_prompt)
            if branch and len(alts) > 1:
                for alt in alts[1:]:
                    if len(tests) >= self.max_tests_per_seed:
                        log.info("seed %s: max_tests_per_seed reached, dropping branch %r",
                                 st.name, alt)
                        continue
                    tests.append(_Test(seed=False, messages=test.messages + [alt], cursor=cursor))
            test.cursor = cursor
            reply = self._send(conn, test, name, alts[0])

    def _to_convo(self, name: str, test: _Test) -> Convo:
        steps = []
        for message, reply in zip(test.messages, test.replies):
            steps.append(Me(message))
            steps.append(Bot(reply.text))
        origin = "generator-seed" if test.seed else "generator-branch"
        return Convo(name, tuple(steps), seed=test.seed, origin=origin)

    def generate(self, seeds: list[Convo]) -> dict[str, list[Convo]]:
        if not seeds:
            raise ValueError("no seed tests")
        return {st.name: self.generate_for_seed(st) for st in seeds}


def generate_tests(seeds: list[Convo], cr: CleaningRoutine, agent: AgentDefinition,
                   **options) -> dict[str, list[Convo]]:
    """Augmented tests per seed name. Tests the bot answers with its fallback
    are dropped (see ``Generator.aborted``) unless ``strict=True``, which raises."""
    return Generator(agent, cr, **options).generate(seeds)


def write_tests(tests: dict[str, list[Convo]], directory: str | Path) -> list[Path]:
    paths = []
    for seed, convos in tests.items():
        for c in convos:
            index = c.name.rsplit("-", 1)[-1]
            path = Path(directory) / seed / f"{index}.convo.txt"
            write_convo(c, path)
            paths.append(path)
    return paths
