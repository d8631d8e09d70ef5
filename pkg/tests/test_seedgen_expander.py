import itertools

import pytest

from builders import build, single_intent_doc, two_entity_doc
from convogen.cleaner import local_routine
from convogen.convo import Bot, Me, make_convo
from convogen.executor import CORRECT, run_test
from convogen.expander import UnknownIntent, expand, referenced_entities, user_steps
from convogen.seedgen import DYNAMIC, UNREACHABLE, generate_seeds, write_seeds
from convogen.simulator import Session


def test_chained_currency_seed(currency):
    seed = {s.name: s for s in generate_seeds(currency)}["ConvertTo"]
    assert [s.text for s in seed.steps[:3]] == [
        "Convert 30 Dollars", "What is the currency-to?", "now into Euros"]
    assert seed.seed and seed.origin == "seedgen"


def test_unchained_currency_seed_opens_with_gated_intent(currency):
    seed = {s.name: s for s in generate_seeds(currency, chain_contexts=False)}["ConvertTo"]
    assert seed.steps[0] == Me("now into Euros")
    assert UNREACHABLE in seed.flags


def test_single_intent_seed():
    seeds = generate_seeds(build(single_intent_doc()))
    assert len(seeds) == 1
    assert seeds[0].steps == (Me("hello"), Bot("Hi there."))


def test_dmv_seeds(dmv):
    seeds = generate_seeds(dmv)
    assert [s.name for s in seeds] == ["Welcome", "ScheduleAppointment"]
    schedule = seeds[1]
    assert schedule.steps[1].text.startswith("What services are you looking to get?")
    assert schedule.steps[2] == Me("driver license")
    assert DYNAMIC in schedule.flags


@pytest.mark.parametrize("name", ["dmv", "currency", "room"])
def test_seeds_pass_or_are_flagged(agents, name):
    agent = agents[name]
    for seed in generate_seeds(agent):
        verdict = run_test(seed, local_routine(agent), 1).verdict
        assert verdict == CORRECT or {UNREACHABLE, DYNAMIC} & set(seed.flags), seed.name


def test_write_seeds(tmp_path, dmv):
    paths = write_seeds(generate_seeds(dmv), tmp_path)
    assert sorted(p.name for p in paths) == ["ScheduleAppointment.convo.txt", "Welcome.convo.txt"]


def test_referenced_entities(dmv):
    assert referenced_entities(dmv, "Which @AppointmentType and @sys.date?") == [
        "AppointmentType", "sys.date"]
    assert referenced_entities(dmv, "mail me @AppointmentTypes") == []


def test_expand_prompt_offers_entity_values(dmv):
    seed = generate_seeds(dmv)[1]
    reply = Session(dmv).send(seed.steps[0].text)
    assert expand(seed, reply, dmv) == ["driver license", "vehicle registration"]


def test_expand_start_single_phrase():
    agent = build(single_intent_doc())
    seed = generate_seeds(agent)[0]
    assert expand(seed, None, agent) == ["hello"]


def test_expand_start_lists_all_phrases_seed_first(dmv):
    seed = make_convo("s", [("book an appointment on Tuesday at 3pm", None)])
    assert expand(seed, None, dmv) == [
        "book an appointment on Tuesday at 3pm",
        "I would like to set an appointment for 3pm on Tuesday",
    ]


def test_expand_keeps_typed_slot_values(dmv):
    seed = make_convo("s", [("book an appointment on Friday at 9am", None)])
    assert expand(seed, None, dmv)[1] == "I would like to set an appointment for 9am on Friday"


def test_expand_product_is_row_major_and_capped():
    agent = build(two_entity_doc())
    seed = make_convo("s", [("pick something", "Choose @A @B")])
    pairs = [f"{a} {b}" for a, b in itertools.product(["a1", "a2", "a3"],
                                                         ["b1", "b2", "b3", "b4"])]
    assert expand(seed, "Choose @A @B", agent, max_combinations=10) == pairs[:10]
    assert expand(seed, "Choose @A @B", agent, max_combinations=100) == pairs


def test_expand_next_intent_after_reply(currency):
    seed = generate_seeds(currency)[2]
    alts = expand(seed, "What is the currency-to?", currency)
    assert alts == ["now into Euros", "into Euros please"]


def test_expand_end_of_test(dmv):
    seed = generate_seeds(dmv)[0]
    assert expand(seed, "Hello! How can I help you?", dmv, cursor=1) == []


def test_unknown_intent(dmv):
    with pytest.raises(UnknownIntent):
        expand(make_convo("s", [("xyzzy", None)]), None, dmv)


def test_prompt_answers_are_not_intent_steps(dmv):
    seed = generate_seeds(dmv)[1]
    assert [s.is_answer for s in user_steps(seed, dmv)] == [False, True]
