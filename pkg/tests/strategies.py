"""Hypothesis strategies for agents and convos."""
from __future__ import annotations

from hypothesis import strategies as st

from convogen.agent import (
    AgentDefinition, EntityType, EntityValue, Intent, OutputContext, Parameter, Slot,
    TrainingPhrase,
)
from convogen.convo import ORIGINS, Bot, Convo, Me

idents = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,8}", fullmatch=True)
words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=7)
plain = st.lists(words, min_size=1, max_size=4).map(" ".join)
# Free text for responses and values: no sigils, so no accidental placeholders.
prose = st.text(alphabet=st.characters(codec="utf-8", exclude_characters="$%@\\\n\r",
                                       exclude_categories=("Cs", "Cc")),
                min_size=1, max_size=20).filter(lambda s: s.strip() != "")


@st.composite
def agents(draw) -> AgentDefinition:
    ent_names = draw(st.lists(idents, max_size=3, unique=True))
    entities = []
    for name in ent_names:
        values = draw(st.lists(plain, min_size=1, max_size=4, unique=True))
        entities.append(EntityType(name, tuple(
            EntityValue(v, tuple(draw(st.lists(plain, max_size=2)))) for v in values)))
    entity_pool = ent_names + ["sys.number", "sys.date", "sys.any"]

    intent_names = draw(st.lists(idents, min_size=0, max_size=4, unique=True))
    intents = []
    for iname in intent_names:
        params = []
        for pname in draw(st.lists(idents, max_size=2, unique=True)):
            entity = draw(st.sampled_from(entity_pool))
            required = draw(st.booleans())
            prompts = (draw(plain) + f" @{entity}?",) if required else ()
            params.append(Parameter(pname, entity, required, prompts))
        phrases = []
        for _ in range(draw(st.integers(1, 3))):
            parts: list = [draw(plain) + " "]
            for p in params:
                if draw(st.booleans()):
                    example = draw(st.none() | plain)
                    parts += [Slot(p.name, example), " " + draw(plain)]
            phrases.append(TrainingPhrase.of(*parts))
        responses = []
        for _ in range(draw(st.integers(1, 2))):
            variants = []
            for _ in range(draw(st.integers(1, 3))):
                text = draw(prose)
                if params and draw(st.booleans()):
                    text += " $" + params[0].name
                variants.append(text)
            responses.append(tuple(variants))
        intents.append(Intent(
            name=iname,
            responses=tuple(responses),
            priority=draw(st.sampled_from([250000, 500000, 750000, 1000000])),
            input_contexts=tuple(draw(st.lists(idents, max_size=2, unique=True))),
            output_contexts=tuple(OutputContext(c, draw(st.integers(1, 5)))
                                  for c in draw(st.lists(idents, max_size=2, unique=True))),
            training_phrases=tuple(phrases),
            parameters=tuple(params),
            action=draw(st.none() | st.sampled_from(["check_slot", "book_room"])),
        ))
    fallback_name = "Fallback" if "Fallback" not in intent_names else "Fallback_"
    intents.append(Intent(fallback_name, ((draw(prose),),), is_fallback=True))
    order = draw(st.permutations(intents))
    return AgentDefinition(draw(plain), tuple(entities), tuple(order))


def _block(lines):
    return "\n".join(lines)


line = st.text(alphabet=st.characters(codec="utf-8", exclude_categories=("Cs", "Cc", "Zl", "Zp")),
               min_size=1, max_size=30).map(str.strip).filter(
    lambda s: s != "" and not s.startswith("#"))
block = st.lists(line, min_size=1, max_size=3).map(_block)
convo_names = line.filter(lambda s: not s.startswith("--"))


@st.composite
def convos(draw) -> Convo:
    n = draw(st.integers(1, 8))
    steps = tuple((Me if k % 2 == 0 else Bot)(draw(block)) for k in range(n))
    origin = draw(st.none() | st.sampled_from(ORIGINS))
    seed = draw(st.booleans())
    flags = tuple(draw(st.lists(st.sampled_from(["unreachable", "dynamic-oracle"]),
                                unique=True, max_size=2)))
    return Convo(draw(convo_names), steps, seed, origin, flags)
