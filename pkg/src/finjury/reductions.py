"""Translations between the principles: rainbows, normality, the pair collapse,
cohesive-set search and the coloring/tournament views."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .functionals import FunctionalTable
from .limits import EnumeratedSet
from .structures import FiniteColoring2, SetFamily, Tournament

MAX_FAMILY = 20


class BoundViolation(ValueError):
    pass


class NotSettled(ValueError):
    def __init__(self, sigma: tuple[int, int], tau: tuple[int, int] | None, message: str):
        super().__init__(f"pair {sigma} vs {tau}: {message}")
        self.sigma = sigma
        self.tau = tau


class KBoundedColoring:
    """Coloring of ``n``-subsets of ``[0, H)`` (``n`` in {2, 3}) using every color at most ``k`` times."""

    def __init__(self, arity: int, horizon: int, k: int, colors: Mapping[tuple[int, ...], int],
                 validate: bool = True):
        if arity not in (2, 3):
            raise ValueError(f"arity must be 2 or 3, got {arity}")
        self.arity = arity
        self.horizon = int(horizon)
        self.k = int(k)
        self.colors = {tuple(sorted(t)): int(c) for t, c in colors.items()}
        if validate:
            self.validate()

    def validate(self) -> None:
        for t in itertools.combinations(range(self.horizon), self.arity):
            if t not in self.colors:
                raise ValueError(f"coloring not total: {t} missing")
        if len(self.colors) != math.comb(self.horizon, self.arity):
            bad = next(t for t in self.colors if len(set(t)) != self.arity or t[-1] >= self.horizon or t[0] < 0)
            raise ValueError(f"tuple {bad} outside [0, {self.horizon})")
        color, count = max(Counter(self.colors.values()).items(), key=lambda kv: (kv[1], -kv[0]),
                           default=(None, 0))
        if count > self.k:
            raise BoundViolation(f"color {color} used {count} > {self.k} times")

    def __call__(self, *t: int) -> int:
        return self.colors[tuple(sorted(t))]

    def preimages(self) -> dict[int, list[tuple[int, ...]]]:
        out: dict[int, list[tuple[int, ...]]] = {}
        for t, c in sorted(self.colors.items()):
            out.setdefault(c, []).append(t)
        return out

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, KBoundedColoring) and self.arity == other.arity
                and self.horizon == other.horizon and self.k == other.k and self.colors == other.colors)

    def to_text(self) -> str:
        lines = [f"kbounded {self.arity} {self.horizon} {self.k}"]
        lines += [" ".join(map(str, t + (c,))) for t, c in sorted(self.colors.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "KBoundedColoring":
        rows = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1)
                if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or rows[0][1][0] != "kbounded" or len(rows[0][1]) != 4:
            raise ValueError("line 1: expected 'kbounded arity H k' header")
        n, H, k = map(int, rows[0][1][1:])
        colors: dict[tuple[int, ...], int] = {}
        for i, parts in rows[1:]:
            if len(parts) != n + 1:
                raise ValueError(f"line {i}: expected {n} points and a color")
            *t, c = map(int, parts)
            if sorted(set(t)) != t or t[0] < 0 or t[-1] >= H:
                raise ValueError(f"line {i}: {tuple(t)} is not an increasing tuple below {H}")
            colors[tuple(t)] = c
        return cls(n, H, k, colors)


def is_rainbow(f: KBoundedColoring, R: Iterable[int]) -> bool:
    R = sorted(set(int(v) for v in R))
    if R and (R[0] < 0 or R[-1] >= f.horizon):
        raise ValueError(f"set not inside [0, {f.horizon})")
    seen: set[int] = set()
    for t in itertools.combinations(R, f.arity):
        c = f.colors[t]
        if c in seen:
            return False
        seen.add(c)
    return True


def max_rainbow(f: KBoundedColoring, vertices: Iterable[int] | None = None) -> tuple[int, ...]:
    """Largest rainbow by exhaustive search from the top size down (lex-least among maxima)."""
    vs = sorted(range(f.horizon) if vertices is None else set(vertices))
    for size in range(len(vs), 0, -1):
        for R in itertools.combinations(vs, size):
            if is_rainbow(f, R):
                return R
    return ()


@dataclass(frozen=True)
class RainbowVerdict:
    x: int
    kind: str  # "a" (fixed partner), "b" (no collision) or "undetermined"
    partner: int | None = None


def classify_rainbow_stable(f: KBoundedColoring, tail: int) -> list[RainbowVerdict]:
    """Per point, its collision behaviour on stages ``s`` in the last ``tail`` of the horizon."""
    if f.arity != 2 or f.k != 2:
        raise ValueError("needs a 2-bounded coloring of pairs")
    H = f.horizon
    window = range(max(0, H - tail), H)
    seen: list[list[tuple[int, int | None]]] = [[] for _ in range(H)]  # (stage, partner)
    for s in window:
        by_color: dict[int, list[int]] = {}
        for x in range(H):
            if x != s:
                by_color.setdefault(f(x, s), []).append(x)
        for grp in by_color.values():
            for x in grp:
                seen[x].append((s, next((y for y in grp if y != x), None)))
    out = []
    for x in range(H):
        partners = sorted({p for _, p in seen[x] if p is not None})
        if not partners:
            out.append(RainbowVerdict(x, "b"))
            continue
        # a partner must collide with x at every window stage other than itself
        y = next((y for y in partners if all(p == y for s, p in seen[x] if s != y)), None)
        out.append(RainbowVerdict(x, "a", y) if y is not None else RainbowVerdict(x, "undetermined"))
    return out


def is_normal(f: KBoundedColoring) -> tuple[bool, tuple[tuple[int, ...], tuple[int, ...]] | None]:
    """Colors may only collide between tuples with the same largest point."""
    last: dict[int, tuple[int, ...]] = {}
    for t, c in sorted(f.colors.items()):
        prev = last.get(c)
        if prev is not None and prev[-1] != t[-1]:
            return False, (prev, t)
        last.setdefault(c, t)
    return True, None


def restrict(f: KBoundedColoring, Y: Iterable[int]) -> KBoundedColoring:
    """``f`` on ``[Y]^n``, relabelled to ``[0, |Y|)`` in increasing order."""
    Y = sorted(set(Y))
    idx = {y: i for i, y in enumerate(Y)}
    colors = {tuple(idx[v] for v in t): f.colors[t] for t in itertools.combinations(Y, f.arity)}
    return KBoundedColoring(f.arity, len(Y), f.k, colors, validate=False)


def greedy_normal_subset(f: KBoundedColoring, H: int | None = None) -> tuple[int, ...]:
    """Ascending scan admitting ``y`` iff the tuples ending at ``y`` avoid every earlier color."""
    H = f.horizon if H is None else min(H, f.horizon)
    Y: list[int] = []
    used: set[int] = set()
    for y in range(H):
        new = {f.colors[t + (y,)] for t in itertools.combinations(Y, f.arity - 1)}
        if new & used:
            continue
        Y.append(y)
        used |= new
    return tuple(Y)


# ---------------------------------------------------------------------------
# Collapse of triples to pairs
# ---------------------------------------------------------------------------


def tail_of(Z: Sequence[int]) -> tuple[int, ...]:
    """The last ``ceil(|Z| / 4)`` points of ``Z``: where verdicts must be constant."""
    Z = sorted(set(Z))
    return tuple(Z[len(Z) - -(-len(Z) // 4):])


@dataclass
class Collapse:
    """Pair coloring ``ftilde`` with the minimizing pair for each pair of the domain."""

    domain: tuple[int, ...]
    tail: tuple[int, ...]
    ftilde: dict[tuple[int, int], tuple[int, int]]
    witness: dict[tuple[int, int], tuple[int, int]]

    def as_coloring(self) -> KBoundedColoring:
        """``ftilde`` on the domain, relabelled to ``[0, |domain|)``, colors numbered by their pair."""
        idx = {v: i for i, v in enumerate(self.domain)}
        code = {p: i for i, p in enumerate(sorted(set(self.ftilde.values())))}
        colors = {(idx[a], idx[b]): code[v] for (a, b), v in self.ftilde.items()}
        return KBoundedColoring(2, len(self.domain), 2, colors, validate=False)

    def bound(self) -> int:
        return max(Counter(self.ftilde.values()).values(), default=0)

    def lift(self, f: KBoundedColoring, R: Iterable[int]) -> tuple[int, ...]:
        """Rainbow for ``f`` from a rainbow ``R`` of ``ftilde`` (points of the domain).

        Points of ``R`` are admitted in increasing order while the triples
        ending at each stay pairwise distinct (normality makes that enough);
        then the least tail point above them is added.  Every pair of ``R``
        carries its own ``ftilde`` color, so no two pairs collide on the tail.
        """
        out: list[int] = []
        used: set[int] = set()
        for x in sorted(set(R)):
            new = [f.colors[p + (x,)] for p in itertools.combinations(out, 2)]
            if len(set(new)) != len(new) or used.intersection(new):
                continue
            out.append(x)
            used.update(new)
        top = next((s for s in self.tail if not out or s > out[-1]), None)
        if top is None:
            raise ValueError("no tail point above the lifted set")
        return tuple(out) + (top,)


def collapse_triples(f: KBoundedColoring, Z: Iterable[int], Y: Iterable[int] | None = None) -> Collapse:
    """Collapse a normal 2-bounded triple coloring to pairs along the tail of ``Z``.

    ``ftilde(sigma)`` is the lex-least pair ``tau <= sigma`` with
    ``f(sigma, s) = f(tau, s)``, required constant over the tail of ``Z``.
    Pairs are compared by first then second point.  The domain is ``Y``
    below the tail.
    """
    if f.arity != 3 or f.k != 2:
        raise ValueError("needs a 2-bounded coloring of triples")
    ok, wit = is_normal(f)
    if not ok:
        raise ValueError(f"coloring not normal: {wit}")
    Z = sorted(set(int(v) for v in Z))
    Y = sorted(range(f.horizon) if Y is None else set(int(v) for v in Y))
    if not set(Z) <= set(Y):
        raise ValueError("Z must lie inside Y")
    tail = tail_of(Z)
    if not tail:
        raise ValueError("empty Z")
    domain = tuple(y for y in Y if y < tail[0])
    pairs = list(itertools.combinations(domain, 2))
    ftilde: dict[tuple[int, int], tuple[int, int]] = {}
    witness: dict[tuple[int, int], tuple[int, int]] = {}
    # partner of sigma at s: the other tuple (same last point, by normality) with f(sigma, s)
    partner_at: list[dict[tuple[int, int], tuple[int, int]]] = []
    for s in tail:
        below = [y for y in Y if y < s]
        by_color: dict[int, list[tuple[int, int]]] = {}
        for p in itertools.combinations(below, 2):
            by_color.setdefault(f.colors[p + (s,)], []).append(p)
        partner_at.append({p: q for grp in by_color.values() if len(grp) == 2 for p, q in (grp, grp[::-1])})
    for sigma in pairs:
        seen = [pa.get(sigma) for pa in partner_at]
        distinct = set(seen)
        if len(distinct) > 1:
            tau = next(t for t in seen if t is not None)
            raise NotSettled(sigma, tau, f"collision not constant on the last {len(tail)} points of Z")
        tau = seen[0]
        best = sigma if tau is None or sigma < tau else tau
        ftilde[sigma] = best
        witness[sigma] = best
    return Collapse(domain, tail, ftilde, witness)


# ---------------------------------------------------------------------------
# Colorings as tournaments, cohesiveness, diagonal escape
# ---------------------------------------------------------------------------


def coloring_to_tournament(f: FiniteColoring2) -> Tournament:
    """For ``x < y``: ``x -> y`` iff ``f(x, y) = 1``."""
    if f.k != 2:
        raise ValueError(f"needs a 2-coloring, palette is {f.k}")
    H = f.horizon
    t = f.table()
    up = np.triu(t == 1, 1)
    down = np.triu(t != 1, 1)
    return Tournament.from_matrix(up | down.T)


def tournament_to_coloring(T: Tournament) -> FiniteColoring2:
    m = T.matrix()
    return FiniteColoring2(T.n, 2, table=np.triu(m.astype(np.int64), 1))


def canonical_cohesive_instance(tables: Sequence[FunctionalTable], E: EnumeratedSet, H: int) -> SetFamily:
    """``R_e``: stages ``s < H`` at which table ``e`` on input ``e`` outputs 1 within ``s`` steps
    on the stage-``s`` approximation of ``E``."""
    for tab in tables:
        tab.validate()
    members = []
    for e, tab in enumerate(tables):
        R = []
        for s in range(H):
            have = E.members_at(s)
            bits = "".join("1" if x in have else "0" for x in range(H))
            c = tab.apply_bits(e, bits, limit=s)
            if c is not None and c[0] == 1:
                R.append(s)
        members.append(R)
    return SetFamily(H, tuple(members))


def find_cohesive(family: SetFamily, N: int | None = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Largest Boolean atom ``∩ R_i^{eps_i}`` (complement where ``eps_i = 1``) inside ``[0, N)``.

    Returns ``(set, eps)``; ties go to the lexicographically least ``eps``.
    """
    k = len(family)
    if k > MAX_FAMILY:
        raise ValueError(f"family of {k} sets exceeds {MAX_FAMILY}")
    N = family.n if N is None else min(N, family.n)
    m = family.matrix()[:, :N]
    weights = (1 << np.arange(k - 1, -1, -1, dtype=np.int64))
    inside = (m.astype(np.int64) * weights[:, None]).sum(axis=0) if k else np.zeros(N, dtype=np.int64)
    eps_code = ((1 << k) - 1) ^ inside
    counts = np.bincount(eps_code, minlength=1 << k)
    best = int(np.argmax(counts))
    eps = tuple((best >> (k - 1 - i)) & 1 for i in range(k))
    return tuple(int(x) for x in np.flatnonzero(eps_code == best)), eps


def diagonal_escape(f: Sequence[int]) -> list[int]:
    return [int(v) + 1 for v in f]
