import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finjury.harness.generators import (random_family, random_two_coloring, rainbow_stable, rng_for,
                                        settled_normal_triples, two_bounded)
from finjury.priority.sdnr import agreement_points
from finjury.reductions import (BoundViolation, KBoundedColoring, NotSettled, classify_rainbow_stable,
                                coloring_to_tournament, collapse_triples, diagonal_escape, find_cohesive,
                                greedy_normal_subset, is_normal, is_rainbow, max_rainbow, restrict, tail_of,
                                tournament_to_coloring)
from finjury.structures import SetFamily


def triples_with_twins(H, twins):
    """Fresh color per triple except ``(p, q, start)``: p and q collide at every s >= start."""
    colors, c = {}, 0
    for s in range(H):
        done = set()
        for p in itertools.combinations(range(s), 2):
            if p in done:
                continue
            hit = next(((q, t0) for a, q, t0 in twins if a == p and s >= t0), None)
            if hit is not None and hit[0] not in done and max(hit[0]) < s:
                colors[p + (s,)] = colors[hit[0] + (s,)] = c
                done.update((p, hit[0]))
            else:
                colors[p + (s,)] = c
                done.add(p)
            c += 1
    return KBoundedColoring(3, H, 2, colors)


def test_kbounded_validation_and_text():
    f = two_bounded(rng_for(1), 7)
    assert KBoundedColoring.from_text(f.to_text()) == f
    with pytest.raises(BoundViolation):
        KBoundedColoring(2, 3, 2, {(0, 1): 0, (0, 2): 0, (1, 2): 0})
    with pytest.raises(ValueError, match="not total"):
        KBoundedColoring(2, 3, 2, {(0, 1): 0, (0, 2): 1})
    with pytest.raises(ValueError):
        KBoundedColoring.from_text("kbounded 2 3 2\n1 0 0\n")


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_max_rainbow_is_maximal(seed):
    f = two_bounded(rng_for(seed), 10)
    R = max_rainbow(f)
    assert is_rainbow(f, R)
    for x in set(range(10)) - set(R):
        assert not is_rainbow(f, R + (x,))
    # no rainbow one larger anywhere
    assert not any(is_rainbow(f, S) for S in itertools.combinations(range(10), len(R) + 1))


def test_rainbow_hand_cases():
    f = KBoundedColoring(2, 4, 2, {(0, 1): 0, (2, 3): 0, (0, 2): 1, (0, 3): 2, (1, 2): 3, (1, 3): 4})
    assert not is_rainbow(f, [0, 1, 2, 3])
    assert is_rainbow(f, [0, 1, 2]) and is_rainbow(f, [1])
    assert max_rainbow(f) == (0, 1, 2)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_classify_recovers_planted_partners(seed):
    inst = rainbow_stable(rng_for(seed), 24)
    for v in classify_rainbow_stable(inst.coloring, inst.tail):
        if v.x in inst.partner:
            assert (v.kind, v.partner) == ("a", inst.partner[v.x])
        else:
            assert v.kind == "b"


def test_greedy_normal_subset_is_normal():
    for seed in range(5):
        f = two_bounded(rng_for(seed), 8, arity=3)
        Y = greedy_normal_subset(f)
        assert is_normal(restrict(f, Y))[0]
        assert Y[:2] == (0, 1)
    f = triples_with_twins(6, [])
    assert is_normal(f) == (True, None)
    g = KBoundedColoring(3, 5, 2, {**{t: i for i, t in enumerate(itertools.combinations(range(5), 3))},
                                   (0, 1, 3): 100, (0, 1, 4): 100})
    assert is_normal(g) == (False, ((0, 1, 3), (0, 1, 4)))


def test_tail_of_quarter():
    assert tail_of(range(12)) == (9, 10, 11)
    assert tail_of(range(13)) == (9, 10, 11, 12)
    assert tail_of([]) == ()


def test_collapse_twin_hand_case():
    f = triples_with_twins(12, [((0, 1), (2, 3), 5), ((2, 3), (0, 1), 5)])
    col = collapse_triples(f, range(12))
    assert col.domain == tuple(range(9)) and col.tail == (9, 10, 11)
    assert col.ftilde[(2, 3)] == (0, 1) and col.ftilde[(0, 1)] == (0, 1)
    assert col.ftilde[(4, 7)] == (4, 7)
    assert col.bound() == 2
    g = col.as_coloring()
    assert not is_rainbow(g, [0, 1, 2, 3])
    R = [0, 1, 2, 5, 7]
    assert is_rainbow(g, R)
    L = col.lift(f, R)
    assert L[-1] == 9 and is_rainbow(f, L)


def test_collapse_rejects_unsettled_pair():
    # the twins collide only from stage 10 on, inside the tail
    f = triples_with_twins(12, [((0, 1), (2, 3), 10), ((2, 3), (0, 1), 10)])
    with pytest.raises(NotSettled) as exc:
        collapse_triples(f, range(12))
    assert exc.value.sigma == (0, 1)
    with pytest.raises(ValueError):
        collapse_triples(two_bounded(rng_for(0), 6, arity=2), range(6))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_random_collapse_lifts(seed):
    f = settled_normal_triples(rng_for(seed), 14)
    col = collapse_triples(f, range(14))
    assert col.bound() <= 2
    g = col.as_coloring()
    R = max_rainbow(g)
    L = col.lift(f, [col.domain[i] for i in R])
    assert is_rainbow(f, L)


def brute_cohesive(fam, N):
    best, best_eps = (), None
    for eps in itertools.product((0, 1), repeat=len(fam)):
        atom = [x for x in range(N)
                if all((x in set(fam.members[i])) != bool(e) for i, e in enumerate(eps))]
        if best_eps is None or len(atom) > len(best):
            best, best_eps = tuple(atom), eps
    return best, best_eps


@given(st.integers(0, 2**32 - 1), st.integers(0, 6))
@settings(max_examples=40, deadline=None)
def test_find_cohesive_matches_exhaustive(seed, k):
    fam = random_family(rng_for(seed), k, 40)
    assert find_cohesive(fam) == brute_cohesive(fam, 40)


def test_find_cohesive_cap():
    with pytest.raises(ValueError):
        find_cohesive(SetFamily(5, tuple([0] for _ in range(21))))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_coloring_tournament_duality(seed):
    f = random_two_coloring(rng_for(seed), 15)
    T = coloring_to_tournament(f)
    for x, y in itertools.combinations(range(15), 2):
        assert T.beats(x, y) == (f.color(x, y) == 1)
    back = tournament_to_coloring(T)
    assert np.array_equal(np.triu(back.table(), 1), np.triu(f.table(), 1))


def test_diagonal_escape_never_agrees():
    f = [3, 0, 5, 5, 1]
    g = diagonal_escape(f)
    assert all(a != b for a, b in zip(f, g))
    assert agreement_points(g, {a: (v, 0) for a, v in enumerate(f)}) == []
