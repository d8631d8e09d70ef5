"""``convogen`` command line: seedgen, generate, run, coverage, mutate, score."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import BUNDLED_AGENTS, bundled_agent_path
from .agent import AgentError, load_agent
from .cleaner import local_routine
from .convo import FormatError, read_convos
from .coverage import UnknownAgentElement, compute_coverage, write_coverage
from .executor import (
    CORRECT, DEFAULT_REPEATS, parse_log, read_report, report_to_json, run_suite, write_report,
)
from .expander import DEFAULT_MAX_COMBINATIONS, UnknownIntent
from .generator import DEFAULT_MAX_TESTS_PER_SEED, GenerationAborted, generate_tests, write_tests
from .mutation import (
    BaselineUnstable, generate_mutants, mutation_score, read_mutants, stable_tests, write_mutants,
)
from .seedgen import generate_seeds, write_seeds
from .simulator import DETERMINISTIC, MODES
from .tables import coverage_summary, mutation_summary, render, report_table

log = logging.getLogger("convogen")


class CommandError(Exception):
    """Reported on stderr; exit status 2."""


def _agent(arg: str, *, strict: bool = True):
    path = bundled_agent_path(arg) if arg in BUNDLED_AGENTS and not Path(arg).is_file() else arg
    try:
        return load_agent(path, strict=strict)
    except AgentError as exc:
        raise CommandError(str(exc)) from None
    except OSError as exc:
        raise CommandError(f"{path}: {exc.strerror or exc}") from None


def _convos(directory: str):
    if not Path(directory).is_dir():
        raise CommandError(f"{directory}: not a directory")
    try:
        return read_convos(directory)
    except FormatError as exc:
        raise CommandError(f"{directory}: {exc}") from None


def _seed(args) -> int:
    env = os.environ.get("CONVOGEN_SEED")
    if env is None:
        return args.seed
    try:
        return int(env)
    except ValueError:
        raise CommandError(f"CONVOGEN_SEED must be an integer, got {env!r}") from None


def _routine(agent, args):
    return local_routine(agent, args.mode, _seed(args))


def _dump(doc, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# -- subcommands -----------------------------------------------------------------

def cmd_seedgen(args) -> int:
    agent = _agent(args.agent)
    seeds = generate_seeds(agent, chain_contexts=not args.no_chain)
    if args.import_dir:
        imported = _convos(args.import_dir)
        names = {c.name for c in imported}
        seeds = [s for s in seeds if s.name not in names] + imported
    paths = write_seeds(seeds, args.out)
    if args.pretty:
        print(render(["seed", "steps", "flags"],
                     [[s.name, len(s.steps), ",".join(s.flags) or "-"] for s in seeds]))
    log.info("wrote %d seeds to %s", len(paths), args.out)
    return 0


def cmd_generate(args) -> int:
    agent = _agent(args.agent)
    seeds = _convos(args.seeds)
    if not seeds:
        raise CommandError(f"{args.seeds}: no seed convos")
    try:
        tests = generate_tests(seeds, _routine(agent, args), agent,
                               max_combinations=args.max_combinations,
                               max_tests_per_seed=args.max_tests_per_seed,
                               truncate_branches=args.truncate_branches,
                               strict=args.strict)
    except (GenerationAborted, UnknownIntent) as exc:
        raise CommandError(str(exc)) from None
    paths = write_tests(tests, args.out)
    if args.pretty:
        print(render(["seed", "tests"], [[k, len(v)] for k, v in tests.items()]))
    log.info("wrote %d tests to %s", len(paths), args.out)
    return 0


def cmd_run(args) -> int:
    agent = _agent(args.agent)
    tests = _convos(args.tests)
    log_file = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        records = run_suite(tests, _routine(agent, args), repeats=args.repeats, jobs=args.jobs,
                            log_file=log_file)
    finally:
        if log_file:
            log_file.close()
    write_report(records, args.report)
    if args.pretty:
        print(report_table(report_to_json(records)))
    return 0 if all(r.verdict == CORRECT for r in records) else 1


def cmd_coverage(args) -> int:
    agent = _agent(args.agent)
    try:
        if args.from_log:
            with open(args.from_log, encoding="utf-8") as fh:
                records = parse_log(fh)
        else:
            records = read_report(args.report)
        report = compute_coverage(records, agent, include_flaky=args.include_flaky)
    except (OSError, ValueError, KeyError, UnknownAgentElement) as exc:
        raise CommandError(f"cannot compute coverage: {exc}") from None
    write_coverage(report, args.out)
    if args.pretty:
        print(coverage_summary([(agent.name, report.to_json())]))
    return 0


def cmd_mutate(args) -> int:
    agent = _agent(args.agent)
    mutants = generate_mutants(agent)
    write_mutants(mutants, args.out)
    if args.pretty:
        print(render(["id", "target", "equivalent"],
                     [[d.id, d.target, d.reason or "-"] for d, _ in mutants]))
    return 0


def cmd_score(args) -> int:
    agent = _agent(args.agent)
    tests = _convos(args.tests)
    try:
        mutants = read_mutants(args.mutants)
    except (OSError, ValueError, KeyError, AgentError) as exc:
        raise CommandError(f"{args.mutants}: {exc}") from None
    cr = _routine(agent, args)
    if args.drop_unstable:
        tests, dropped = stable_tests(agent, tests, cr, args.repeats)
        for name in dropped:
            log.warning("not scoring %s: not correct on the original agent", name)
    try:
        report = mutation_score(agent, mutants, tests, cr, args.repeats,
                                jobs=args.jobs)
    except BaselineUnstable as exc:
        raise CommandError(str(exc)) from None
    _dump(report.to_json(), args.out)
    if args.pretty:
        print(mutation_summary([(agent.name, report.to_json())]))
    return 0


# -- parser ------------------------------------------------------------------------

def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--agent", required=True,
                        help=f"agent file, or a bundled agent: {', '.join(BUNDLED_AGENTS)}")
    common.add_argument("--pretty", action="store_true", help="also print a table to stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--mode", choices=MODES, default=DETERMINISTIC)
    sim.add_argument("--seed", type=int, default=0, help="RNG seed (CONVOGEN_SEED overrides)")

    parser = argparse.ArgumentParser(prog="convogen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seedgen", parents=[common], help="write one static seed test per intent")
    p.add_argument("--out", required=True)
    p.add_argument("--import", dest="import_dir", metavar="DIR",
                   help="add hand-written seeds; they replace generated seeds of the same name")
    p.add_argument("--no-chain", action="store_true",
                   help="do not prefix context-gated intents with the intents that open their contexts")
    p.set_defaults(func=cmd_seedgen)

    p = sub.add_parser("generate", parents=[common, sim], help="augment seeds against the bot")
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-combinations", type=_positive, default=DEFAULT_MAX_COMBINATIONS)
    p.add_argument("--max-tests-per-seed", type=_positive, default=DEFAULT_MAX_TESTS_PER_SEED)
    p.add_argument("--truncate-branches", action="store_true")
    p.add_argument("--strict", action="store_true", help="fail on the first fallback reply")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", parents=[common, sim], help="execute a suite repeatedly")
    p.add_argument("--tests", required=True)
    p.add_argument("--repeats", type=_positive, default=DEFAULT_REPEATS)
    p.add_argument("--report", required=True)
    p.add_argument("--log", help="also write the verbose textual log")
    p.add_argument("--jobs", type=_positive, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("coverage", parents=[common], help="intent and entity-value coverage")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--report")
    src.add_argument("--from-log", metavar="LOG")
    p.add_argument("--out", required=True)
    p.add_argument("--include-flaky", action="store_true")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("mutate", parents=[common], help="write agent mutants and index.json")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("score", parents=[common, sim], help="mutation score of a suite")
    p.add_argument("--mutants", required=True)
    p.add_argument("--tests", required=True)
    p.add_argument("--repeats", type=_positive, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--drop-unstable", action="store_true",
                   help="score only the tests that are correct on the original agent")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)   # usage errors exit 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"convogen {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
