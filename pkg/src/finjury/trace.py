"""Append-only stage logs shared by the priority engines.

One record per line::

    stage | engine | EVENT | key=value key=value ...

Values are integers, ``-`` for "none", or comma-joined integer lists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

EVENTS = ("ACTIVATE", "SATISFY", "CLAIM", "RESTRAIN", "COMMIT", "INJURE", "UFLIP", "ASSIGN")


class TraceFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"trace line {line_no}: {message}")
        self.line_no = line_no


class EngineMismatch(ValueError):
    pass


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (list, tuple)):
        return ",".join(str(int(x)) for x in v) if v else "[]"
    return str(v)


def parse_value(text: str):
    if text == "-":
        return None
    if text == "[]":
        return []
    if "," in text:
        return [int(x) for x in text.split(",")]
    try:
        return int(text)
    except ValueError:
        return text


@dataclass(frozen=True)
class TraceEvent:
    stage: int
    engine: str
    event: str
    payload: tuple[tuple[str, object], ...] = ()

    def get(self, key: str, default=None):
        for k, v in self.payload:
            if k == key:
                return v
        return default

    def __getitem__(self, key: str):
        for k, v in self.payload:
            if k == key:
                return v
        raise KeyError(key)

    def to_line(self) -> str:
        body = " ".join(f"{k}={_fmt(v)}" for k, v in self.payload)
        return f"{self.stage} | {self.engine} | {self.event} | {body}".rstrip()

    @classmethod
    def from_line(cls, line: str, line_no: int = 0) -> "TraceEvent":
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 4:
            raise TraceFormatError(line_no, f"expected 4 '|'-separated fields, got {len(parts)}")
        stage, engine, event, body = parts
        try:
            stage_i = int(stage)
        except ValueError:
            raise TraceFormatError(line_no, f"bad stage {stage!r}") from None
        if event not in EVENTS:
            raise TraceFormatError(line_no, f"unknown event {event!r}")
        payload = []
        for tok in body.split():
            if "=" not in tok:
                raise TraceFormatError(line_no, f"bad payload token {tok!r}")
            k, v = tok.split("=", 1)
            payload.append((k, parse_value(v)))
        return cls(stage_i, engine, event, tuple(payload))


@dataclass
class PriorityTrace:
    """Ordered event log of one engine run."""

    engine: str
    events: list[TraceEvent] = field(default_factory=list)

    def emit(self, stage: int, event: str, **payload) -> int:
        """Append an event; returns its 1-based index within the event list."""
        if event not in EVENTS:
            raise ValueError(f"unknown event {event}")
        self.events.append(TraceEvent(stage, self.engine, event, tuple(payload.items())))
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def of(self, event: str) -> list[tuple[int, TraceEvent]]:
        """``(1-based index, event)`` for every event of the given kind."""
        return [(i, ev) for i, ev in enumerate(self.events, start=1) if ev.event == event]

    def lines(self) -> list[str]:
        return [ev.to_line() for ev in self.events]

    @classmethod
    def from_lines(cls, lines: Iterable[str], engine: str | None = None,
                   first_line_no: int = 1) -> "PriorityTrace":
        events = []
        for i, ln in enumerate(lines, start=first_line_no):
            if not ln.strip():
                continue
            ev = TraceEvent.from_line(ln, i)
            if engine is None:
                engine = ev.engine
            elif ev.engine != engine:
                raise EngineMismatch(f"trace line {i}: engine {ev.engine!r}, expected {engine!r}")
            events.append(ev)
        return cls(engine or "", events)
