"""Seeded input generators.  Every function takes a ``numpy`` Generator and is
a pure function of its state, so a seed fixes the output byte for byte."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..functionals import FunctionalTable
from ..limits import Delta2Approx, EnumeratedSet
from ..priority.candidates import CandidateFamily
from ..reductions import KBoundedColoring, tail_of
from ..structures import FiniteColoring2, LinearOrderPrefix, SetFamily, Tournament


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


# ---------------------------------------------------------------------------
# Candidate families
# ---------------------------------------------------------------------------


def window_set(rng: np.random.Generator, H: int, window: int, density: float = 0.02) -> list[int]:
    """Random subset of ``[0, H)`` meeting every interval of length ``window``."""
    pts = set(np.flatnonzero(rng.random(H) < density).tolist())
    step = max(1, window // 2)
    for lo in range(0, H, step):
        hi = min(H, lo + step)
        if not any(p in pts for p in range(lo, hi)):
            pts.add(int(rng.integers(lo, hi)))
    return sorted(pts)


def window_candidates(rng: np.random.Generator, n: int, H: int, window: int = 64) -> CandidateFamily:
    return CandidateFamily(H, [window_set(rng, H, window) for _ in range(n)])


def random_membership(rng: np.random.Generator, H: int, density: float, max_flips: int,
                      flip_rate: float = 0.1) -> Delta2Approx:
    """0/1 approximation: a ``flip_rate`` share of points change 1..max_flips times, starting with entry."""
    events = []
    for x in range(H):
        if rng.random() < flip_rate:
            n = int(rng.integers(1, max_flips + 1))
            stages = np.sort(rng.choice(H, size=n, replace=False))
            events += [(x, int(s), (j + 1) % 2) for j, s in enumerate(stages)]
        elif rng.random() < density:
            events.append((x, 0, 1))
    return Delta2Approx(H, events, budget=max_flips)


def delta2_candidates(rng: np.random.Generator, n: int, H: int, max_flips: int = 3,
                      density: float = 0.05) -> CandidateFamily:
    return CandidateFamily(H, [random_membership(rng, H, density, max_flips) for _ in range(n)])


def random_approx(rng: np.random.Generator, H: int, max_flips: int = 5, colors: int = 2,
                  settle_before: int | None = None) -> Delta2Approx:
    """Approximation with at most ``max_flips`` events per point, all before ``settle_before``.

    Every event changes the value, and events sit at stage 0 or in
    ``[x + 2, settle_before)``: the stages a pair coloring ``h(x, s)``,
    ``s > x``, can tell apart.
    """
    settle_before = H // 2 if settle_before is None else settle_before
    events = []
    for x in range(H):
        n = int(rng.integers(0, max_flips + 1))
        if n == 0 or x + 1 >= settle_before:
            continue
        pool = np.concatenate(([0], np.arange(x + 2, settle_before)))
        stages = np.sort(rng.choice(pool, size=min(n, pool.size), replace=False))
        cur = 0
        for s in stages:
            cur = (cur + int(rng.integers(1, colors))) % colors
            events.append((x, int(s), cur))
    return Delta2Approx(H, events, budget=max_flips)


# ---------------------------------------------------------------------------
# Anti-diagonalizer inputs
# ---------------------------------------------------------------------------


@dataclass
class SdnrInputs:
    F: list[FunctionalTable]
    D: Delta2Approx
    E: EnumeratedSet
    horizon: int


def random_sdnr(rng: np.random.Generator, H: int, n_functionals: int = 4, flips: int = 2,
                positions: int = 3) -> SdnrInputs:
    """A few oracle positions of ``D`` flip; each functional reads exactly those positions below its use.

    Tables are total on every oracle that is zero off the flipping positions,
    so every input with a late enough enumeration is a witness.
    """
    pos = sorted(rng.choice(np.arange(min(H, 8)), size=min(positions, H, 8), replace=False).tolist())
    events = []
    for x in pos:
        for s in np.sort(rng.choice(H, size=int(rng.integers(0, flips + 1)), replace=False)):
            events.append((x, int(s), int(rng.integers(0, 2))))
    D = Delta2Approx(H, events)
    elems = rng.choice(np.arange(1, H), size=max(1, H // 4), replace=False).tolist()
    pairs = sorted(((int(a), int(rng.integers(a, H))) for a in elems), key=lambda p: (p[1], p[0]))
    E = EnumeratedSet(pairs)
    F = []
    for _ in range(n_functionals):
        entries: dict[int, list[tuple[str, int]]] = {}
        for a in sorted(rng.choice(H, size=max(1, H // 3), replace=False).tolist()):
            use = a + int(rng.integers(0, 4))
            if use >= H:
                continue
            read = [x for x in pos if x < use]
            rows = []
            for bits in itertools.product("01", repeat=len(read)):
                p = ["0"] * use
                for x, b in zip(read, bits):
                    p[x] = b
                rows.append(("".join(p), int(rng.integers(0, 5))))
            entries[a] = rows
        F.append(FunctionalTable(entries))
    return SdnrInputs(F, D, E, H)


SDNR_SCRIPTS = ("empty", "constant7", "cascade")


def scripted_sdnr(name: str, H: int = 24) -> SdnrInputs:
    """Hand-built scenarios with known outcomes."""
    if name == "empty":
        return SdnrInputs([], Delta2Approx(H), EnumeratedSet([(3, 2)]), H)
    if name == "constant7":
        tab = FunctionalTable({a: [("0" * a, 7)] for a in range(H)})
        return SdnrInputs([tab], Delta2Approx(H), EnumeratedSet([(5, 9)]), H)
    if name == "cascade":
        # D(1) goes up at stage 8 and back at stage 14, under both committed uses
        f0 = FunctionalTable({3: [("0000", 1)], 4: [("00000", 2)]})
        f1 = FunctionalTable({3: [("000", 9)], 4: [("0000", 8)]})
        D = Delta2Approx(H, [(1, 8, 1), (1, 14, 0)])
        E = EnumeratedSet([(3, 5), (4, 6)])
        return SdnrInputs([f0, f1], D, E, H)
    raise ValueError(f"unknown script {name!r}; choose from {SDNR_SCRIPTS}")


# ---------------------------------------------------------------------------
# Tournaments and orders
# ---------------------------------------------------------------------------


@dataclass
class StableTournament:
    tournament: Tournament
    side: list[int]  # 1: eventually beats every later point, 0: eventually beaten
    settle: list[int]


def stable_tournament(rng: np.random.Generator, H: int) -> StableTournament:
    """Each ``x`` picks a side and a settling stage ``<= H/2``; ``T(x, s)`` for ``s`` past it follows the side."""
    side = rng.integers(0, 2, size=H)
    settle = np.minimum(np.arange(H) + 1 + rng.integers(0, max(1, H // 4), size=H), H // 2)
    noise = rng.random((H, H)) < 0.5
    s_idx = np.arange(H)[None, :]
    forward = np.where(s_idx >= settle[:, None], side[:, None] == 1, noise)
    up = np.triu(forward, 1)
    m = up | np.triu(~forward, 1).T
    return StableTournament(Tournament.from_matrix(m), side.tolist(), settle.tolist())


def omega_plus_omega_star(rng: np.random.Generator, H: int, density: float = 0.5) -> LinearOrderPrefix:
    """Order listing a random set ascending, then its complement descending."""
    inside = rng.random(H) < density
    seq = np.flatnonzero(inside).tolist() + np.flatnonzero(~inside)[::-1].tolist()
    return LinearOrderPrefix.from_sequence(seq)


def random_two_coloring(rng: np.random.Generator, H: int) -> FiniteColoring2:
    t = np.triu(rng.integers(0, 2, size=(H, H)), 1)
    return FiniteColoring2(H, 2, table=t)


# ---------------------------------------------------------------------------
# Bounded colorings
# ---------------------------------------------------------------------------


def two_bounded(rng: np.random.Generator, H: int, arity: int = 2, pair_rate: float = 0.5) -> KBoundedColoring:
    tuples = list(itertools.combinations(range(H), arity))
    perm = rng.permutation(len(tuples))
    colors: dict[tuple[int, ...], int] = {}
    c = 0
    i = 0
    while i < len(perm):
        if i + 1 < len(perm) and rng.random() < pair_rate:
            colors[tuples[perm[i]]] = colors[tuples[perm[i + 1]]] = c
            i += 2
        else:
            colors[tuples[perm[i]]] = c
            i += 1
        c += 1
    return KBoundedColoring(arity, H, 2, colors)


@dataclass
class RainbowStable:
    coloring: KBoundedColoring
    partner: dict[int, int]  # ground truth: case (a) points and their partners
    tail: int


def rainbow_stable(rng: np.random.Generator, H: int, pair_frac: float = 0.4) -> RainbowStable:
    """Pairs ``x, y`` below ``H/2`` collide at every later stage; early noise collisions only before ``H/2``."""
    half = H // 2
    pts = rng.permutation(half).tolist()
    n_pairs = int(len(pts) * pair_frac) // 2
    partner: dict[int, int] = {}
    for i in range(n_pairs):
        x, y = pts[2 * i], pts[2 * i + 1]
        partner[x], partner[y] = y, x
    colors: dict[tuple[int, int], int] = {}
    c = 0
    for s in range(H):
        done: set[int] = set()
        below = list(range(s))
        noise = {}
        if s < half and s >= 2:
            free = [x for x in below if x not in partner or partner[x] >= s]
            if len(free) >= 2 and rng.random() < 0.5:
                a, b = rng.choice(free, size=2, replace=False).tolist()
                noise[a], noise[b] = b, a
        for x in below:
            if x in done:
                continue
            y = partner.get(x)
            if y is None or y >= s:
                y = noise.get(x)
            if y is not None and y < s and y not in done:
                colors[(x, s)] = colors[(y, s)] = c
                done.update((x, y))
            else:
                colors[(x, s)] = c
                done.add(x)
            c += 1
    return RainbowStable(KBoundedColoring(2, H, 2, colors), partner, H - half)


def settled_normal_triples(rng: np.random.Generator, H: int, twin_frac: float = 0.3) -> KBoundedColoring:
    """Normal 2-bounded coloring of triples whose pair collisions are constant on the last quarter.

    Twin pairs below the tail collide at every stage from a random point
    before the tail on; other triples get fresh colors.
    """
    t0 = tail_of(range(H))[0]
    pairs = list(itertools.combinations(range(t0), 2))
    perm = rng.permutation(len(pairs))
    n_twins = int(len(pairs) * twin_frac) // 2
    twin: dict[tuple[int, int], tuple[int, int]] = {}
    start: dict[tuple[int, int], int] = {}
    for i in range(n_twins):
        p, q = pairs[perm[2 * i]], pairs[perm[2 * i + 1]]
        twin[p], twin[q] = q, p
        start[p] = start[q] = max(max(p), max(q)) + 1 + int(rng.integers(0, max(1, t0 - max(max(p), max(q)))))
    colors: dict[tuple[int, int, int], int] = {}
    c = 0
    for s in range(H):
        done: set[tuple[int, int]] = set()
        for p in itertools.combinations(range(s), 2):
            if p in done:
                continue
            q = twin.get(p)
            if q is not None and s >= start[p] and q not in done:
                colors[p + (s,)] = colors[q + (s,)] = c
                done.update((p, q))
            else:
                colors[p + (s,)] = c
                done.add(p)
            c += 1
    return KBoundedColoring(3, H, 2, colors)


def random_family(rng: np.random.Generator, k: int, N: int, density: float = 0.5) -> SetFamily:
    m = rng.random((k, N)) < density
    return SetFamily(N, tuple(np.flatnonzero(row).tolist() for row in m))
