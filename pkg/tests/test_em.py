import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finjury.em import (EMCondition, ReservoirExhausted, block_extend, check_condition, check_walk,
                        em_walk, encode_set_tournament, find_alternation, guaranteed_one_point,
                        log_bound, one_point_extend, one_point_split, register_tournament,
                        replay_walk, verify_beats)
from finjury.structures import HashedTournament, Tournament, is_transitive


def brute_valid(c, Ts):
    """Definition check: core transitive, each x extends it, and X sits in one minimal interval."""
    for nu in range(len(c.sigma)):
        T = Ts[nu]
        core = list(c.core(nu))
        if not is_transitive(T, core):
            return False
        for x in c.X.tolist():
            if not is_transitive(T, core + [x]):
                return False
        for f in core:
            sides = {T.beats(f, x) for x in c.X.tolist()}
            if len(sides) > 1:
                return False
    return True


def random_ts(seed, n, k=2):
    rng = np.random.default_rng(seed)
    return [Tournament.random(n, rng) for _ in range(k)]


def grown_condition(Ts, rng, steps):
    c = register_tournament(EMCondition.fresh(Ts[0].n), Ts)
    for _ in range(steps):
        if c.X.size <= 2:
            break
        if len(c.sigma) < len(Ts) and rng.random() < 0.3:
            c = register_tournament(c, Ts)
        elif rng.random() < 0.5:
            c = one_point_extend(c, Ts)
        else:
            m = int(rng.integers(1, min(4, c.X.size - 1) + 1))
            c = block_extend(c, Ts, c.X[:m]).best_extension()[2]
    return c


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_check_condition_matches_definition(seed):
    rng = np.random.default_rng(seed)
    Ts = random_ts(seed, 14)
    F = sorted(rng.choice(8, size=int(rng.integers(0, 5)), replace=False).tolist())
    lo = (F[-1] + 1) if F else 0
    X = sorted(rng.choice(np.arange(lo, 14), size=int(rng.integers(0, 14 - lo + 1)), replace=False).tolist())
    sigma = [int(v) for v in rng.integers(-1, 6, size=2)]
    c = EMCondition(sigma, F, X)
    chk = check_condition(c, Ts)
    assert bool(chk) == brute_valid(c, Ts)
    if not chk and chk.kind == "cycle":
        a, b, x = chk.witness
        T = Ts[chk.nu]
        assert T.beats(a, b) and T.beats(b, x) and T.beats(x, a)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_extensions_preserve_validity_and_beats(seed):
    rng = np.random.default_rng(seed)
    Ts = random_ts(seed, 60)
    c = grown_condition(Ts, rng, 8)
    assert check_condition(c, Ts)
    assert brute_valid(c, Ts)
    assert verify_beats(c, Ts)


def test_singleton_block_is_one_point_step():
    Ts = random_ts(5, 80)
    c = register_tournament(register_tournament(EMCondition.fresh(80), Ts), Ts)
    for _ in range(3):
        one, rho = one_point_split(c, Ts)
        split = block_extend(c, Ts, c.X[:1])
        # class name 0 means the point beats the kept reservoir, the complement of rho
        key = tuple(1 - b for b in rho)
        assert split.classes == {key: (int(c.X[0]),)}
        assert split.extend(split.classes[key]) == one
        c = one


def test_one_point_keeps_pigeonhole_share():
    Ts = random_ts(8, 200, k=3)
    c = EMCondition.fresh(200)
    for _ in range(3):
        c = register_tournament(c, Ts)
    n = c.X.size
    c2 = one_point_extend(c, Ts)
    assert c2.X.size >= -(-(n - 1) // 8)


def test_block_classes_behave_uniformly():
    Ts = random_ts(2, 120)
    c = register_tournament(register_tournament(EMCondition.fresh(120), Ts), Ts)
    split = block_extend(c, Ts, c.X[:6])
    assert split.Y.size >= -(-(c.X.size - 6) // 2 ** 12)
    for rho, part in split.classes.items():
        for a in part:
            for nu, bit in enumerate(rho):
                row = Ts[nu].beats_many(a, split.Y)
                assert (not row.any()) if bit else row.all()
    rho, F1, ext = split.best_extension()
    assert check_condition(ext, Ts)
    with pytest.raises(ValueError, match="not inside one class"):
        split.extend([999])


def test_condition_errors():
    with pytest.raises(ValueError):
        EMCondition((), [5], [3, 6])
    with pytest.raises(ReservoirExhausted):
        register_tournament(EMCondition((), [1], []))
    Ts = random_ts(0, 10)
    with pytest.raises(ValueError):
        one_point_split(EMCondition((), (), [4]), Ts)
    with pytest.raises(ValueError):
        block_extend(EMCondition.fresh(10), Ts, [20])


def test_guaranteed_one_point_and_log_bound():
    assert guaranteed_one_point(1, 2) == 1
    assert guaranteed_one_point(5, 2) == 2
    assert guaranteed_one_point(65536, 2) == 9
    assert log_bound(65536, 2) == 8
    assert log_bound(65535, 2) == 7
    assert log_bound(10, 0) == 10


def test_walk_on_hashed_tournaments():
    Ts = [HashedTournament(4096, 3), HashedTournament(4096, 4)]
    w = em_walk(Ts, [0, 0], 4096)
    assert len(w.G) >= log_bound(4096, 2)
    assert all(ok for _, ok in check_walk(w, Ts))
    assert replay_walk(Ts, 4096, w.trace) == w.condition


def test_walk_with_late_arrival_and_target():
    Ts = random_ts(3, 300)
    w = em_walk(Ts, [0, 1], 300)
    assert w.sigma[1] > w.sigma[0]
    late = em_walk(Ts, [0, 3], 300)
    assert len(late.sigma) == 1 and "never registered" in late.diagnostic
    for nu, off in enumerate(w.sigma):
        assert is_transitive(Ts[nu], [g for g in w.G if g > off])
    short = em_walk(Ts, [0, 0], 300, target=2)
    assert len(short.G) >= 2 and not short.diagnostic
    far = em_walk(Ts, [0, 0], 300, target=10 ** 6)
    assert "unreachable" in far.diagnostic


def test_replay_rejects_tampered_walk():
    Ts = random_ts(6, 200)
    w = em_walk(Ts, None, 200)
    lines = list(w.trace)
    parts = lines[2].split(" | ")
    parts[3] = str(int(parts[3]) + 1)
    lines[2] = " | ".join(parts)
    with pytest.raises(ValueError):
        replay_walk(Ts, 200, lines)


def test_walk_argument_errors():
    Ts = random_ts(0, 10)
    with pytest.raises(ValueError):
        em_walk(Ts, [1, 0], 10)
    with pytest.raises(ValueError):
        em_walk(Ts, [0], 10)
    with pytest.raises(ValueError):
        em_walk(Ts, None, 11)


def test_evens_give_the_four_cycle():
    T = encode_set_tournament(range(0, 8, 2), 8)
    assert T.beats(0, 2) and T.beats(2, 1) and T.beats(1, 3) and T.beats(3, 0)
    assert not is_transitive(T, [0, 1, 2, 3])
    assert find_alternation([0, 1, 2, 3], range(0, 8, 2)) == (0, 1, 2, 3)


def brute_alternation(S, X):
    Xs = set(X)
    for q in itertools.combinations(sorted(S), 4):
        a, b, c, d = q
        if (a in Xs) == (c in Xs) and (b in Xs) == (d in Xs) and (a in Xs) != (b in Xs):
            return q
    return None


@given(st.sets(st.integers(0, 15), max_size=10), st.sets(st.integers(0, 15)))
@settings(max_examples=150, deadline=None)
def test_find_alternation_matches_scan(S, X):
    fast = find_alternation(S, X)
    slow = brute_alternation(S, X)
    assert (fast is None) == (slow is None)
    if fast is not None:
        a, b, c, d = fast
        Xs = set(X)
        assert a < b < c < d and (a in Xs) == (c in Xs) != (b in Xs) == (d in Xs)


@given(st.sets(st.integers(0, 11)))
@settings(max_examples=40, deadline=None)
def test_transitive_sets_of_encoding_avoid_alternation(X):
    T = encode_set_tournament(X, 12)
    for r in range(4, 7):
        for S in itertools.combinations(range(12), r):
            if is_transitive(T, S):
                assert find_alternation(S, X) is None
