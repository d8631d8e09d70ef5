"""Botium-style ``.convo.txt`` files.

::

    greet
    -- origin: seedgen; seed: true

    #me
    hello

    #bot
    Hi! I'm your room booking bot.

The optional ``-- `` line after the name carries generator metadata.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

ORIGINS = ("seedgen", "generator-seed", "generator-branch")
ME = "#me"
BOT = "#bot"


class FormatError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class Me:
    text: str


@dataclass(frozen=True)
class Bot:
    text: str


@dataclass(frozen=True)
class Convo:
    name: str
    steps: tuple
    seed: bool = False
    origin: str | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a convo needs at least one step")
        for i, step in enumerate(self.steps):
            expected = Me if i % 2 == 0 else Bot
            if not isinstance(step, expected):
                raise ValueError(f"step {i} must be {expected.__name__}")
        if self.origin is not None and self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")

    @property
    def user_messages(self) -> list[str]:
        return [s.text for s in self.steps if isinstance(s, Me)]

    @property
    def bot_messages(self) -> list[str]:
        return [s.text for s in self.steps if isinstance(s, Bot)]

    def turns(self) -> list[tuple[str, str | None]]:
        """(user text, expected bot text or None) per user step."""
        out = []
        for i, step in enumerate(self.steps):
            if isinstance(step, Me):
                nxt = self.steps[i + 1] if i + 1 < len(self.steps) else None
                out.append((step.text, nxt.text if nxt is not None else None))
        return out


def _header(c: Convo) -> str | None:
    fields = []
    if c.origin is not None:
        fields.append(f"origin: {c.origin}")
    if c.seed:
        fields.append("seed: true")
    if c.flags:
        fields.append("flags: " + ",".join(c.flags))
    return "-- " + "; ".join(fields) if fields else None


def _parse_header(line: str, lineno: int) -> dict:
    meta: dict = {}
    for chunk in line[2:].split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, value = chunk.partition(":")
        if not sep:
            raise FormatError(lineno, f"bad metadata field {chunk!r}")
        key, value = key.strip(), value.strip()
        if key == "origin":
            if value not in ORIGINS:
                raise FormatError(lineno, f"unknown origin {value!r}")
            meta["origin"] = value
        elif key == "seed":
            meta["seed"] = value.lower() == "true"
        elif key == "flags":
            meta["flags"] = tuple(f.strip() for f in value.split(",") if f.strip())
    return meta


def parse_convo(text: str) -> Convo:
    lines = text.replace("\r\n", "\n").split("\n")
    i = 0
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i == len(lines):
        raise FormatError(1, "empty convo file")
    name = lines[i].strip()
    if name.startswith("#"):
        raise FormatError(i + 1, "expected a convo name before the first tag")
    i += 1
    meta: dict = {}
    if i < len(lines) and lines[i].strip().startswith("--"):
        meta = _parse_header(lines[i].strip(), i + 1)
        i += 1

    steps: list = []
    block: list[str] | None = None
    block_line = 0

    def close_block():
        if block is None:
            return
        body = "\n".join(block).strip()
        if not body:
            raise FormatError(block_line, "empty block")
        kind = Me if len(steps) % 2 == 0 else Bot
        steps.append(kind(body))

    for lineno, raw in enumerate(lines[i:], start=i + 1):
        line = raw.strip()
        if line.startswith("#"):
            tag = line.split()[0].lower()
            if tag not in (ME, BOT):
                raise FormatError(lineno, f"unknown tag {tag!r}")
            close_block()
            want = ME if len(steps) % 2 == 0 else BOT
            if tag != want:
                raise FormatError(lineno, f"expected {want}, found {tag}")
            block, block_line = [], lineno
        elif line:
            if block is None:
                raise FormatError(lineno, "text outside a #me/#bot block")
            block.append(line)
    close_block()
    if not steps:
        raise FormatError(len(lines), "convo has no steps")
    return Convo(name, tuple(steps), meta.get("seed", False), meta.get("origin"),
                 meta.get("flags", ()))


def serialize_convo(c: Convo) -> str:
    out = [c.name]
    header = _header(c)
    if header:
        out.append(header)
    out.append("")
    for step in c.steps:
        out.append(ME if isinstance(step, Me) else BOT)
        out.append(step.text)
        out.append("")
    return "\n".join(out[:-1]) + "\n"


def read_convo(path: str | Path) -> Convo:
    return parse_convo(Path(path).read_text(encoding="utf-8"))


def write_convo(c: Convo, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_convo(c), encoding="utf-8", newline="\n")


def read_convos(directory: str | Path) -> list[Convo]:
    """All ``*.convo.txt`` files below ``directory``, in sorted path order."""
    return [read_convo(p) for p in sorted(Path(directory).rglob("*.convo.txt"))]


def make_convo(name: str, pairs: Iterable[tuple[str, str]], **kwargs) -> Convo:
    steps = []
    for me, bot in pairs:
        steps.append(Me(me))
        if bot is not None:
            steps.append(Bot(bot))
    return Convo(name, tuple(steps), **kwargs)
