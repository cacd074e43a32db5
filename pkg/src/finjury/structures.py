"""Finite combinatorial objects and the direct checkers built on them.

Tournaments are stored as bit rows: ``row(x)`` is a Python integer whose bit
``y`` is set iff ``x -> y``.  Every search here is deterministic and breaks
ties towards the lexicographically least vertex set.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class RangeError(ValueError):
    """A vertex or stage index lies outside the object's domain."""


class CapExceeded(ValueError):
    """An exponential search was asked to run above its size cap."""


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _bits(v: int) -> Iterable[int]:
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


def _mask(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


# ---------------------------------------------------------------------------
# Tournaments
# ---------------------------------------------------------------------------


class BaseTournament:
    """Shared surface of dense and implicit tournaments on ``[0, n)``.

    Two pseudo-vertices ``n`` (``neg_inf``) and ``n + 1`` (``pos_inf``) are
    reserved: ``neg_inf`` beats every vertex and every vertex beats
    ``pos_inf``.  They only ever appear as interval endpoints.
    """

    n: int

    @property
    def neg_inf(self) -> int:
        return self.n

    @property
    def pos_inf(self) -> int:
        return self.n + 1

    def _edge(self, x: int, y: int) -> bool:
        raise NotImplementedError

    def beats(self, x: int, y: int) -> bool:
        """``T(x, y)``; sentinels are handled, self loops are never edges."""
        n = self.n
        if x == y:
            return False
        if x == n or y == n + 1:
            return True
        if y == n or x == n + 1:
            return False
        if not (0 <= x < n and 0 <= y < n):
            raise RangeError(f"vertex out of range: ({x}, {y}) for n={n}")
        return self._edge(x, y)

    def beats_many(self, x: int, ys: np.ndarray) -> np.ndarray:
        """Vectorised ``T(x, y)`` for every ``y`` in ``ys`` (real vertices)."""
        return np.fromiter((self.beats(x, int(y)) for y in ys), dtype=bool, count=len(ys))

    def check_vertices(self, vertices: Iterable[int]) -> list[int]:
        vs = sorted(set(int(v) for v in vertices))
        if vs and (vs[0] < 0 or vs[-1] >= self.n):
            raise RangeError(f"vertex set not inside [0, {self.n}): {vs[0]}..{vs[-1]}")
        return vs

    def induced(self, vertices: Iterable[int]) -> tuple["Tournament", list[int]]:
        """Dense copy of the sub-tournament on ``vertices`` relabelled ``0..m-1``."""
        vs = self.check_vertices(vertices)
        arr = np.asarray(vs, dtype=np.int64)
        rows = []
        for i, v in enumerate(vs):
            hit = self.beats_many(v, arr)
            hit[i] = False
            rows.append(_mask(np.flatnonzero(hit).tolist()))
        return Tournament(len(vs), rows, validate=False), vs


class Tournament(BaseTournament):
    """Dense tournament on ``[0, n)`` with one integer bit row per vertex."""

    def __init__(self, n: int, rows: Sequence[int], validate: bool = True):
        self.n = int(n)
        self.rows = tuple(int(r) for r in rows)
        if len(self.rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(self.rows)}")
        self._matrix: np.ndarray | None = None
        if validate:
            self.validate()

    def validate(self) -> None:
        full = (1 << self.n) - 1
        for x, r in enumerate(self.rows):
            if r & ~full:
                raise ValueError(f"row {x} has bits outside [0, {self.n})")
            if (r >> x) & 1:
                raise ValueError(f"row {x} has a self loop")
        m = self.matrix()
        both = m & m.T
        neither = ~(m | m.T)
        np.fill_diagonal(neither, False)
        bad = np.argwhere(both | neither)
        if len(bad):
            x, y = bad[0]
            raise ValueError(f"pair ({x}, {y}): not exactly one direction")

    # -- constructors ----------------------------------------------------
    @classmethod
    def from_function(cls, n: int, edge: Callable[[int, int], bool]) -> "Tournament":
        """Build from ``edge(x, y)`` queried only for ``x < y``."""
        rows = [0] * n
        for x in range(n):
            for y in range(x + 1, n):
                if edge(x, y):
                    rows[x] |= 1 << y
                else:
                    rows[y] |= 1 << x
        return cls(n, rows, validate=False)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Tournament":
        m = np.asarray(m, dtype=bool)
        n = m.shape[0]
        packed = np.packbits(m, axis=1, bitorder="little")
        rows = [int.from_bytes(packed[x].tobytes(), "little") for x in range(n)]
        return cls(n, rows)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Tournament":
        upper = rng.random((n, n)) < 0.5
        return cls.from_function(n, lambda x, y: bool(upper[x, y]))

    @classmethod
    def transitive(cls, n: int, order: Sequence[int] | None = None) -> "Tournament":
        """Transitive tournament in which ``order[i]`` beats ``order[j]`` for ``i < j``."""
        order = list(range(n)) if order is None else list(order)
        pos = {v: i for i, v in enumerate(order)}
        return cls.from_function(n, lambda x, y: pos[x] < pos[y])

    # -- queries ---------------------------------------------------------
    def _edge(self, x: int, y: int) -> bool:
        return bool((self.rows[x] >> y) & 1)

    def row(self, x: int) -> int:
        return self.rows[x]

    def in_row(self, x: int) -> int:
        return ((1 << self.n) - 1) ^ self.rows[x] ^ (1 << x)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            nbytes = (self.n + 7) // 8
            raw = b"".join(r.to_bytes(nbytes, "little") for r in self.rows)
            bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(self.n, nbytes),
                                 axis=1, bitorder="little")
            self._matrix = bits[:, : self.n].astype(bool)
        return self._matrix

    def beats_many(self, x: int, ys: np.ndarray) -> np.ndarray:
        return self.matrix()[x, np.asarray(ys, dtype=np.int64)]

    def induced(self, vertices: Iterable[int]) -> tuple["Tournament", list[int]]:
        vs = self.check_vertices(vertices)
        rows = []
        for v in vs:
            r = self.rows[v]
            rows.append(_mask(i for i, w in enumerate(vs) if (r >> w) & 1))
        return Tournament(len(vs), rows, validate=False), vs

    def out_degrees(self) -> list[int]:
        return [_popcount(r) for r in self.rows]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Tournament) and self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.n, self.rows))

    def __repr__(self) -> str:
        return f"Tournament(n={self.n})"

    # -- text form -------------------------------------------------------
    def to_text(self) -> str:
        """``tournament N`` header, then one fixed-width hex line per row (bit y = T(x, y))."""
        width = max(1, (self.n + 3) // 4)
        lines = [f"tournament {self.n}"]
        lines.extend(format(r, f"0{width}x") for r in self.rows)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Tournament":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("tournament "):
            raise ValueError("line 1: expected 'tournament N' header")
        n = int(lines[0].split()[1])
        if len(lines) - 1 != n:
            raise ValueError(f"expected {n} hex rows, found {len(lines) - 1}")
        rows = []
        for i, ln in enumerate(lines[1:], start=2):
            try:
                rows.append(int(ln, 16))
            except ValueError:
                raise ValueError(f"line {i}: bad hex row {ln!r}") from None
        return cls(n, rows)


class HashedTournament(BaseTournament):
    """Implicit pseudo-random tournament: edge directions come from a keyed hash.

    Used where a dense table would not fit (reservoirs of 2^16 vertices).
    """

    _M1 = np.uint64(0xBF58476D1CE4E5B9)
    _M2 = np.uint64(0x94D049BB133111EB)

    def __init__(self, n: int, seed: int):
        self.n = int(n)
        self.seed = int(seed)
        self._key = np.uint64((self.seed * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)

    def _mix(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            z = (lo.astype(np.uint64) << np.uint64(32)) ^ hi.astype(np.uint64) ^ self._key
            z = (z ^ (z >> np.uint64(30))) * self._M1
            z = (z ^ (z >> np.uint64(27))) * self._M2
            z = z ^ (z >> np.uint64(31))
        return (z & np.uint64(1)).astype(bool)

    def _edge(self, x: int, y: int) -> bool:
        lo, hi = min(x, y), max(x, y)
        up = bool(self._mix(np.array([lo]), np.array([hi]))[0])
        return up if x < y else not up

    def beats_many(self, x: int, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=np.int64)
        xs = np.full(ys.shape, x, dtype=np.int64)
        lo, hi = np.minimum(xs, ys), np.maximum(xs, ys)
        up = self._mix(lo, hi)
        out = np.where(x < ys, up, ~up)
        out[ys == x] = False
        return out

    def __repr__(self) -> str:
        return f"HashedTournament(n={self.n}, seed={self.seed})"


# ---------------------------------------------------------------------------
# Transitivity
# ---------------------------------------------------------------------------


def find_3cycle(T: BaseTournament, S: Iterable[int] | None = None) -> tuple[int, int, int] | None:
    """Return a 3-cycle ``(x, y, z)`` with x->y->z->x inside ``S``, or None."""
    sub, labels = T.induced(range(T.n) if S is None else S)
    full = (1 << sub.n) - 1
    for x in range(sub.n):
        rx = sub.rows[x]
        inx = full ^ rx ^ (1 << x)
        for y in _bits(rx):
            hit = sub.rows[y] & inx
            if hit:
                z = (hit & -hit).bit_length() - 1
                return labels[x], labels[y], labels[z]
    return None


def is_transitive(T: BaseTournament, S: Iterable[int] | None = None) -> bool:
    """True iff no three vertices of ``S`` form a 3-cycle.

    Uses the score-sequence characterisation: a tournament on m vertices is
    transitive iff its out-degrees are exactly 0, 1, ..., m-1.
    """
    sub, _ = T.induced(range(T.n) if S is None else S)
    return sorted(sub.out_degrees()) == list(range(sub.n))


def count_3cycles(T: Tournament) -> int:
    """Exact number of cyclic triples: C(n,3) - sum C(d_i, 2) over out-degrees."""
    n = T.n
    total = n * (n - 1) * (n - 2) // 6
    return total - sum(d * (d - 1) // 2 for d in T.out_degrees())


def chain_order(T: BaseTournament, F: Iterable[int]) -> list[int]:
    """Order a transitive set from its top (beats all) to its bottom."""
    sub, labels = T.induced(F)
    degs = sub.out_degrees()
    if sorted(degs) != list(range(sub.n)):
        raise ValueError("set is not transitive")
    return [labels[i] for i in sorted(range(sub.n), key=lambda i: -degs[i])]


def max_transitive_subtournament(
    T: BaseTournament, cap: int = 20, vertices: Iterable[int] | None = None
) -> tuple[int, ...]:
    """Maximum-cardinality transitive subset (lexicographically least among maxima).

    A transitive set has a unique top vertex ``v`` and the rest lies in
    ``out(v)``, so ``best(C) = max_v {v} + best(C & out(v))``, memoised on ``C``.
    """
    vs = list(range(T.n)) if vertices is None else T.check_vertices(vertices)
    if len(vs) > cap:
        raise CapExceeded(f"{len(vs)} vertices exceeds cap {cap}")
    sub, labels = T.induced(vs)
    memo: dict[int, tuple[int, ...]] = {0: ()}

    def best(C: int) -> tuple[int, ...]:
        hit = memo.get(C)
        if hit is not None:
            return hit
        top: tuple[int, ...] = ()
        for v in _bits(C):
            cand = tuple(sorted((v,) + best(C & sub.rows[v])))
            if len(cand) > len(top) or (len(cand) == len(top) and cand < top):
                top = cand
        memo[C] = top
        return top

    return tuple(labels[i] for i in best((1 << sub.n) - 1))


def _keeps_transitive(rows: Sequence[int], S: int, x: int) -> bool:
    # S is transitive; S + x is transitive iff no y in S with x->y and y->z->x for z in S.
    rx = rows[x] & S
    inx = S & ~rows[x]
    for y in _bits(rx):
        if rows[y] & inx:
            return False
    return True


def max_common_transitive(
    Ts: Sequence[BaseTournament], vertices: Iterable[int], cap: int = 20
) -> tuple[int, ...]:
    """Largest subset transitive in every tournament of ``Ts`` (lex-least among maxima)."""
    vs = Ts[0].check_vertices(vertices) if Ts else sorted(set(vertices))
    if not Ts:
        return tuple(vs)
    if len(Ts) == 1:
        return max_transitive_subtournament(Ts[0], cap, vs)
    if len(vs) > cap:
        raise CapExceeded(f"{len(vs)} vertices exceeds cap {cap}")
    subs = [T.induced(vs)[0].rows for T in Ts]
    m = len(vs)
    best: list[int] = []

    def rec(i: int, S: int, chosen: list[int]) -> None:
        nonlocal best
        if len(chosen) + (m - i) <= len(best):
            return
        if i == m:
            if len(chosen) > len(best):
                best = list(chosen)
            return
        if all(_keeps_transitive(rows, S, i) for rows in subs):
            chosen.append(i)
            rec(i + 1, S | (1 << i), chosen)
            chosen.pop()
        rec(i + 1, S, chosen)

    # include-first ordering visits lexicographically smaller sets first; strict
    # improvement keeps the first (lex-least) maximum
    rec(0, 0, [])
    return tuple(vs[i] for i in best)


def greedy_common_transitive(Ts: Sequence[BaseTournament], vertices: Iterable[int]) -> tuple[int, ...]:
    """Ascending scan admitting a vertex iff every tournament stays transitive."""
    vs = sorted(set(int(v) for v in vertices))
    if not Ts:
        return tuple(vs)
    subs = [T.induced(vs)[0].rows for T in Ts]
    S = 0
    for i in range(len(vs)):
        if all(_keeps_transitive(rows, S, i) for rows in subs):
            S |= 1 << i
    return tuple(vs[i] for i in _bits(S))


def minimal_intervals(T: BaseTournament, F: Iterable[int]) -> list[tuple[int, int]]:
    """Minimal intervals of a transitive ``F``, using ``T.neg_inf``/``T.pos_inf`` as ends."""
    chain = chain_order(T, F)
    ends = [T.neg_inf] + chain + [T.pos_inf]
    return list(zip(ends[:-1], ends[1:]))


def in_interval(T: BaseTournament, interval: tuple[int, int], x: int) -> bool:
    a, b = interval
    return T.beats(a, x) and T.beats(x, b)


def beats(T: BaseTournament, E: Iterable[int], F: Iterable[int]) -> bool:
    """``E ->_T F``: every element of E beats every element of F."""
    E = T.check_vertices(E)
    F = T.check_vertices(F)
    if not E or not F:
        return True
    if isinstance(T, Tournament):
        fm = _mask(F)
        return all(T.rows[x] & fm == fm for x in E)
    arr = np.asarray(F, dtype=np.int64)
    return all(bool(T.beats_many(x, arr).all()) for x in E)


# ---------------------------------------------------------------------------
# Linear orders
# ---------------------------------------------------------------------------


class LinearOrderPrefix:
    """Linear order ``<_L`` on ``[0, n)`` held as a transitive tournament.

    ``T(x, y)`` means ``x <_L y``.
    """

    def __init__(self, relation: Tournament, validate: bool = True):
        if validate and not is_transitive(relation):
            raise ValueError("relation has a 3-cycle; not a linear order")
        self.relation = relation
        self.n = relation.n

    @classmethod
    def from_sequence(cls, bottom_to_top: Sequence[int]) -> "LinearOrderPrefix":
        """Order listing elements from L-least to L-greatest."""
        return cls(Tournament.transitive(len(bottom_to_top), bottom_to_top))

    @classmethod
    def natural(cls, n: int) -> "LinearOrderPrefix":
        return cls.from_sequence(range(n))

    def less(self, x: int, y: int) -> bool:
        return self.relation.beats(x, y)

    def sequence(self) -> list[int]:
        """Elements from L-least to L-greatest."""
        return chain_order(self.relation, range(self.n))


@dataclass(frozen=True)
class MonotoneResult:
    ascending: int
    descending: int
    ascending_witness: tuple[int, ...]
    descending_witness: tuple[int, ...]


def _longest_chain(n: int, ok: Callable[[int, int], bool]) -> tuple[int, ...]:
    if n == 0:
        return ()
    length = [1] * n
    prev = [-1] * n
    for j in range(n):
        for i in range(j):
            if ok(i, j) and length[i] + 1 > length[j]:
                length[j] = length[i] + 1
                prev[j] = i
    end = max(range(n), key=lambda j: (length[j], -j))
    out = []
    while end != -1:
        out.append(end)
        end = prev[end]
    return tuple(reversed(out))


def longest_monotone(L: LinearOrderPrefix) -> MonotoneResult:
    """Longest position-increasing subsequences that are L-ascending / L-descending.

    Quadratic dynamic program; witnesses prefer earliest predecessors and the
    earliest end point.
    """
    asc = _longest_chain(L.n, L.less)
    desc = _longest_chain(L.n, lambda i, j: L.less(j, i))
    return MonotoneResult(len(asc), len(desc), asc, desc)


# ---------------------------------------------------------------------------
# Colorings of pairs
# ---------------------------------------------------------------------------


class FiniteColoring2:
    """Total coloring of pairs ``{x < y}`` below ``horizon`` with colors ``< k``.

    Backed either by a dense table or, for large horizons, by a function
    evaluated on demand (``lazy=True``).
    """

    def __init__(self, horizon: int, k: int, table: np.ndarray | None = None,
                 fn: Callable[[int, int], int] | None = None, validate: bool = True):
        self.horizon = int(horizon)
        self.k = int(k)
        if (table is None) == (fn is None):
            raise ValueError("give exactly one of table or fn")
        self._table = None if table is None else np.asarray(table, dtype=np.int64)
        self._fn = fn
        if validate and self._table is not None:
            iu = np.triu_indices(self.horizon, 1)
            vals = self._table[iu]
            if vals.size and (vals.min() < 0 or vals.max() >= self.k):
                raise ValueError(f"colors must lie in [0, {self.k})")

    @classmethod
    def from_function(cls, horizon: int, k: int, fn: Callable[[int, int], int],
                      lazy: bool = False) -> "FiniteColoring2":
        if lazy:
            return cls(horizon, k, fn=fn)
        t = np.zeros((horizon, horizon), dtype=np.int64)
        for x in range(horizon):
            for y in range(x + 1, horizon):
                t[x, y] = fn(x, y)
        return cls(horizon, k, table=t)

    @classmethod
    def constant(cls, horizon: int, k: int, color: int) -> "FiniteColoring2":
        t = np.full((horizon, horizon), color, dtype=np.int64)
        return cls(horizon, k, table=t)

    def color(self, x: int, y: int) -> int:
        if x > y:
            x, y = y, x
        if x == y or x < 0 or y >= self.horizon:
            raise RangeError(f"pair ({x}, {y}) not below horizon {self.horizon}")
        if self._table is not None:
            return int(self._table[x, y])
        return int(self._fn(x, y))

    def table(self) -> np.ndarray:
        """Dense upper-triangular table (materialises a lazy coloring)."""
        if self._table is None:
            t = np.zeros((self.horizon, self.horizon), dtype=np.int64)
            for x in range(self.horizon):
                for y in range(x + 1, self.horizon):
                    t[x, y] = self._fn(x, y)
            return t
        return self._table

    def colors_on(self, A: Iterable[int]) -> set[int]:
        A = sorted(set(A))
        return {self.color(x, y) for x, y in itertools.combinations(A, 2)}

    def to_text(self) -> str:
        lines = [f"coloring2 {self.horizon} {self.k}"]
        for x in range(self.horizon):
            for y in range(x + 1, self.horizon):
                lines.append(f"{x} {y} {self.color(x, y)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FiniteColoring2":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("coloring2 "):
            raise ValueError("line 1: expected 'coloring2 H k' header")
        _, h, k = lines[0].split()
        H, k = int(h), int(k)
        t = np.zeros((H, H), dtype=np.int64)
        seen = np.zeros((H, H), dtype=bool)
        for i, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"line {i}: expected 'x y color'")
            x, y, c = map(int, parts)
            if not 0 <= x < y < H:
                raise ValueError(f"line {i}: pair ({x}, {y}) not x < y < {H}")
            t[x, y] = c
            seen[x, y] = True
        missing = np.argwhere(np.triu(~seen, 1))
        if len(missing):
            x, y = missing[0]
            raise ValueError(f"coloring not total: pair ({x}, {y}) missing")
        return cls(H, k, table=t)


def is_thin(f: FiniteColoring2, A: Iterable[int]) -> int | None:
    """Least color ``< k`` missing from ``f([A]^2)``, or None if all colors occur."""
    used = f.colors_on(A)
    for c in range(f.k):
        if c not in used:
            return c
    return None


def is_homogeneous(f: FiniteColoring2, A: Iterable[int]) -> tuple[bool, int | None]:
    """``(True, color)`` if ``f`` is constant on ``[A]^2``; sets of size <= 1 give ``(True, None)``."""
    used = f.colors_on(A)
    if not used:
        return True, None
    if len(used) == 1:
        return True, next(iter(used))
    return False, None


# ---------------------------------------------------------------------------
# Set families and cohesiveness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetFamily:
    """Finite subsets ``R_0 .. R_{k-1}`` of ``[0, n)``."""

    n: int
    members: tuple[frozenset, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(frozenset(int(v) for v in m) for m in self.members))
        for i, m in enumerate(self.members):
            if m and (min(m) < 0 or max(m) >= self.n):
                raise RangeError(f"member {i} not inside [0, {self.n})")

    def __len__(self) -> int:
        return len(self.members)

    def matrix(self) -> np.ndarray:
        m = np.zeros((len(self.members), self.n), dtype=bool)
        for i, s in enumerate(self.members):
            if s:
                m[i, sorted(s)] = True
        return m


@dataclass(frozen=True)
class CohesiveVerdict:
    side: str  # "inside" or "outside"
    exceptions: int


def cohesive_report(C: Iterable[int], family: SetFamily) -> list[CohesiveVerdict]:
    """Per member: the side of ``R_i`` that ``C`` almost lies on and how many points disagree."""
    C = set(C)
    out = []
    for R in family.members:
        inside_exc = len(C - R)
        outside_exc = len(C & R)
        if inside_exc <= outside_exc:
            out.append(CohesiveVerdict("inside", inside_exc))
        else:
            out.append(CohesiveVerdict("outside", outside_exc))
    return out
