"""Plain-text tables over the JSON reports.

Usage::

    python -m convogen.tables [LABEL=]report.json [LABEL=]coverage.json ...

The kind of each file is detected from its shape. Files of the same kind are
gathered into one table with a row per label.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def render(header: list[str], rows: list[list]) -> str:
    cells = [header] + [["-" if c is None else str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    line = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    out = [line(cells[0]), line(["-" * w for w in widths])]
    out.extend(line(r) for r in cells[1:])
    return "\n".join(out)


def pct(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.1f}%"


def kind_of(doc) -> str:
    if isinstance(doc, list):
        return "report"
    if isinstance(doc, dict) and "intent_pct" in doc:
        return "coverage"
    if isinstance(doc, dict) and "killed" in doc:
        return "mutation"
    raise ValueError("unrecognised report shape")


def report_table(doc: list[dict]) -> str:
    rows = [[r["name"], r["verdict"], r["pass_count"], r["fail_count"]] for r in doc]
    return render(["test", "verdict", "pass", "fail"], rows)


def verdict_summary(labelled: list[tuple[str, list[dict]]]) -> str:
    rows = []
    for label, doc in labelled:
        counts = {v: sum(r["verdict"] == v for r in doc) for v in ("correct", "flaky", "wrong")}
        total = len(doc)
        share = f"{100 * counts['correct'] / total:.0f}%" if total else "-"
        rows.append([label, total, counts["correct"], counts["flaky"], counts["wrong"], share])
    return render(["suite", "tests", "correct", "flaky", "wrong", "correct %"], rows)


def coverage_summary(labelled: list[tuple[str, dict]]) -> str:
    rows = [[label, pct(d["intent_pct"]), pct(d["entity_pct"])] for label, d in labelled]
    return render(["suite", "intents", "entity values"], rows)


def mutation_summary(labelled: list[tuple[str, dict]]) -> str:
    rows = []
    for label, d in labelled:
        live = d["total"] - d["equivalent"]
        score = "0/0" if d.get("score") is None else f"{100 * d['score']:.0f}%"
        rows.append([label, d["total"], d["equivalent"], f"{d['killed']}/{live}", score])
    return render(["suite", "mutants", "equivalent", "killed/total", "score"], rows)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="convogen-tables", description=__doc__.splitlines()[0])
    parser.add_argument("files", nargs="+", metavar="[LABEL=]FILE")
    args = parser.parse_args(argv)
    groups: dict[str, list] = {"report": [], "coverage": [], "mutation": []}
    for item in args.files:
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            groups[kind_of(doc)].append((label, doc))
        except (OSError, ValueError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return 2
    blocks = []
    if groups["report"]:
        blocks.append(verdict_summary(groups["report"]))
    if groups["coverage"]:
        blocks.append(coverage_summary(groups["coverage"]))
    if groups["mutation"]:
        blocks.append(mutation_summary(groups["mutation"]))
    print("\n\n".join(blocks))
    return 0


if __name__ == "__main__":
    sys.exit(main())
