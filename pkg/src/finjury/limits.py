"""Stage-indexed approximations of limit-computable objects at a finite horizon."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .structures import FiniteColoring2, RangeError

DENSE_LIMIT = 4096


class FlipBudgetError(ValueError):
    pass


class Delta2Approx:
    """Value function ``x, s -> value`` given by per-point change events.

    Every point starts at 0; an event ``(x, s, v)`` sets the value of ``x`` to
    ``v`` from stage ``s`` on.  Stages are ``< horizon``.
    """

    def __init__(self, horizon: int, events: Iterable[tuple[int, int, int]] = (),
                 budget: int | None = None):
        self.horizon = int(horizon)
        per: dict[int, list[tuple[int, int]]] = {}
        for x, s, v in events:
            x, s, v = int(x), int(s), int(v)
            if not 0 <= s < self.horizon:
                raise RangeError(f"event ({x}, {s}, {v}): stage outside [0, {self.horizon})")
            per.setdefault(x, []).append((s, v))
        self._events: dict[int, tuple[tuple[int, int], ...]] = {}
        for x, evs in per.items():
            evs.sort(key=lambda e: e[0])
            stages = [s for s, _ in evs]
            if len(set(stages)) != len(stages):
                raise ValueError(f"point {x}: two events at the same stage")
            self._events[x] = tuple(evs)
        self.budget = budget
        if budget is not None:
            for x in self._events:
                if self.flips(x) > budget:
                    raise FlipBudgetError(f"point {x}: {self.flips(x)} flips exceed budget {budget}")

    @property
    def points(self) -> list[int]:
        return sorted(self._events)

    def events_of(self, x: int) -> tuple[tuple[int, int], ...]:
        return self._events.get(x, ())

    def events(self) -> list[tuple[int, int, int]]:
        return [(x, s, v) for x in self.points for s, v in self._events[x]]

    def flips(self, x: int) -> int:
        """Number of events that actually change the value of ``x``."""
        cur, n = 0, 0
        for _, v in self.events_of(x):
            if v != cur:
                n += 1
                cur = v
        return n

    def value_at(self, x: int, s: int) -> int:
        if not 0 <= s < self.horizon:
            raise RangeError(f"stage {s} outside [0, {self.horizon})")
        evs = self._events.get(x)
        if not evs:
            return 0
        i = bisect.bisect_right(evs, (s, float("inf"))) - 1
        return evs[i][1] if i >= 0 else 0

    def limit_report(self, x: int) -> tuple[int, int]:
        """``(value after the last event, stage of that event)``; ``(0, 0)`` without events."""
        evs = self._events.get(x)
        if not evs:
            return 0, 0
        s, v = evs[-1]
        return v, s

    def events_at(self) -> dict[int, list[tuple[int, int]]]:
        """Events grouped by stage: ``stage -> [(point, value), ...]``."""
        out: dict[int, list[tuple[int, int]]] = {}
        for x, s, v in self.events():
            out.setdefault(s, []).append((x, v))
        return out

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Delta2Approx) and self.horizon == other.horizon
                and self._events == other._events)

    def to_text(self) -> str:
        lines = [f"delta2 {self.horizon}"]
        lines.extend(f"{x} {s} {v}" for x, s, v in self.events())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, budget: int | None = None) -> "Delta2Approx":
        lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1)]
        lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0][1].startswith("delta2 "):
            raise ValueError("line 1: expected 'delta2 H' header")
        horizon = int(lines[0][1].split()[1])
        events = []
        for i, ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"line {i}: expected 'point stage value'")
            events.append(tuple(int(p) for p in parts))
        return cls(horizon, events, budget=budget)


def value_at(a: Delta2Approx, x: int, s: int) -> int:
    return a.value_at(x, s)


def limit_report(a: Delta2Approx, x: int) -> tuple[int, int]:
    return a.limit_report(x)


def to_stable_pairs(c: Delta2Approx, k: int | None = None, lazy: bool | None = None) -> FiniteColoring2:
    """Pair coloring ``h(x, s) = c_s(x)`` for ``x < s < H``.

    Dense by default up to ``DENSE_LIMIT`` points; past that (or with
    ``lazy=True``) the coloring evaluates the approximation on demand.
    """
    if k is None:
        k = 1 + max([v for _, _, v in c.events()], default=0)
    H = c.horizon
    if lazy is None:
        lazy = H > DENSE_LIMIT
    if lazy:
        return FiniteColoring2.from_function(H, k, lambda x, s: c.value_at(x, s), lazy=True)
    table = np.zeros((H, H), dtype=np.int64)
    for x in c.points:
        if x < H:
            for s, v in c.events_of(x):
                table[x, s:] = v
    return FiniteColoring2(H, k, table=np.triu(table, 1))


@dataclass
class StabilityReport:
    tail: int
    unstable: list[int] = field(default_factory=list)
    outside_window: list[int] = field(default_factory=list)


def from_stable_pairs(h: FiniteColoring2, tail: int) -> tuple[Delta2Approx, StabilityReport]:
    """Recover a limit approximation from the columns ``s -> h(x, s)``.

    A point ``x < H - tail`` is stable when ``h(x, s)`` is constant on the
    window ``[H - tail, H)``.  Column changes become events: a non-zero
    column value at ``s = x + 1`` is an event at stage 0 (the column cannot
    tell stages up to ``x + 1`` apart), each later change an event at the
    stage it happens.  Unstable points are left out of the approximation and
    listed in the report, as are points too late for the window.
    """
    H = h.horizon
    if not 0 < tail < H:
        raise ValueError(f"tail must lie in (0, {H})")
    start = H - tail
    m = np.triu(h.table(), 1)[:start]
    window = m[:, start:]
    stable = (window == window[:, :1]).all(axis=1)
    report = StabilityReport(tail, np.flatnonzero(~stable).tolist(), list(range(start, H - 1)))
    m = m[stable]
    xs = np.flatnonzero(stable)
    change = np.diff(m, axis=1, prepend=0) != 0
    rows, stages = np.nonzero(change)
    vals = m[rows, stages]
    stages = np.where(stages == xs[rows] + 1, 0, stages)
    events = zip(xs[rows].tolist(), stages.tolist(), vals.tolist())
    return Delta2Approx(H, events), report


class DoubleLimitApprox:
    """Grid ``g(m, s, t)`` as layers indexed by ``t``, each a :class:`Delta2Approx` in ``s``."""

    def __init__(self, layers: Sequence[Delta2Approx]):
        self.layers = list(layers)

    def value(self, m: int, s: int, t: int) -> int:
        return self.layers[t].value_at(m, s)

    def inner_limit(self, m: int, t: int) -> int:
        return self.layers[t].limit_report(m)[0]

    def double_limit(self, m: int) -> tuple[int, int]:
        """``(lim_t lim_s g(m, s, t), first t from which the inner limit is constant)``."""
        vals = [self.inner_limit(m, t) for t in range(len(self.layers))]
        if not vals:
            return 0, 0
        t0 = len(vals) - 1
        while t0 > 0 and vals[t0 - 1] == vals[-1]:
            t0 -= 1
        return vals[-1], t0


class EnumeratedSet:
    """Monotone enumeration: ``(element, stage)`` pairs, each element at most once."""

    def __init__(self, pairs: Iterable[tuple[int, int]] = ()):
        pairs = [(int(x), int(s)) for x, s in pairs]
        seen = set()
        last = -1
        for i, (x, s) in enumerate(pairs):
            if x in seen:
                raise ValueError(f"entry {i}: element {x} enumerated twice")
            if s < last:
                raise ValueError(f"entry {i}: stage {s} decreases (previous {last})")
            if s < 0:
                raise ValueError(f"entry {i}: negative stage")
            seen.add(x)
            last = s
        self.pairs = tuple(pairs)
        self._stage = dict(pairs)

    def theta(self, x: int, s: int) -> int | None:
        t = self._stage.get(x)
        return t if t is not None and t <= s else None

    def settling(self, x: int) -> int | None:
        return self._stage.get(x)

    def members_at(self, s: int) -> set[int]:
        return {x for x, t in self.pairs if t <= s}

    def elements(self) -> list[int]:
        return [x for x, _ in self.pairs]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EnumeratedSet) and self.pairs == other.pairs

    def to_text(self) -> str:
        lines = ["enumeration"]
        lines.extend(f"{x} {s}" for x, s in self.pairs)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EnumeratedSet":
        pairs = []
        for i, ln in enumerate(text.splitlines(), start=1):
            ln = ln.strip()
            if not ln or ln.startswith("#") or ln == "enumeration":
                continue
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"line {i}: expected 'element stage'")
            pairs.append((int(parts[0]), int(parts[1])))
        return cls(pairs)


def theta(E: EnumeratedSet, x: int, s: int) -> int | None:
    return E.theta(x, s)
