import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finjury.harness.generators import delta2_candidates, rng_for, window_candidates
from finjury.priority.candidates import CandidateFamily
from finjury.priority.sads import (SadsRun, count_cycles, order_from_flips, quiescence, run_sads,
                                   verify_sads)
from finjury.trace import PriorityTrace


def naive_sads(Z, H, shift=0, glob=False):
    """Full recompute at each stage: owners, wrong-side decision-makers, one action.

    Returns (final U, claims as (stage, u, i), flips).
    """
    n = len(Z)
    in_u = [False] * H
    follower = [False] * H
    claims, flips = [], {}
    for s in range(H):
        m = Z.membership_at(s)
        dms = [x for x in range(s + 1) if not follower[x]]
        owner = {}
        for i in range(2 * n):
            e, odd = divmod(i, 2)
            want = odd == 0
            zs = [a for a in range(s) if m[e, a]]
            ws = [a for a in zs if in_u[a] == want]
            if glob:
                hi = -1 if ws else s
            else:
                hi = min(ws[0] if ws else H + 1, zs[-1] if zs else -1, s)
            for x in dms:
                if x not in owner and i + shift <= x <= hi:
                    owner[x] = i
        act = None
        for x in dms:
            if x in owner:
                i = owner[x]
                want = i % 2 == 0
                if in_u[x] != want and (act is None or (i, x) < act):
                    act = (i, x)
        if act is None:
            continue
        i, u = act
        want = i % 2 == 0
        claims.append((s, u, i))
        for x in range(u, s + 1):
            if in_u[x] != want:
                in_u[x] = want
                flips.setdefault(x, []).append((s, int(want)))
        for x in range(u + 1, s + 1):
            follower[x] = True
    return in_u, claims, flips


def claims_of(r):
    return [(ev.stage, ev["u"], ev["i"]) for _, ev in r.trace.of("CLAIM")]


@given(st.integers(0, 2**32 - 1), st.sampled_from(["le", "lt"]), st.booleans(),
       st.sampled_from(["bounded", "global"]))
@settings(max_examples=40, deadline=None)
def test_matches_naive_oracle(seed, threshold, dynamic, attention):
    rng = rng_for(seed)
    H = 48
    Z = delta2_candidates(rng, 3, H, max_flips=3, density=0.2) if dynamic else window_candidates(rng, 3, H, 10)
    r = run_sads(Z, threshold=threshold, attention=attention)
    in_u, claims, flips = naive_sads(Z, H, shift=int(threshold == "lt"), glob=attention == "global")
    assert r.in_u == in_u
    assert claims_of(r) == claims
    assert r.flips == flips


def test_empty_family():
    r = run_sads(CandidateFamily(30, []))
    assert r.u_set() == []
    L = r.linear_order()
    # every element goes L-above everything before it
    assert all(L.less(b, a) for a in range(30) for b in range(a + 1, 30))
    assert verify_sads(r, CandidateFamily(30, [])).ok(strict=True)


def test_full_interval_candidate():
    Z = CandidateFamily(32, [range(32)])
    r = run_sads(Z)
    assert claims_of(r) == [(1, 0, 0)]
    assert r.flips == {0: [(1, 1)], 1: [(1, 1)]}
    assert r.u_set() == [0, 1]
    rep = verify_sads(r, Z)
    assert rep.ok(strict=True)
    assert rep.by_name("Z[0]")[0].passed


def test_two_candidate_scenario():
    Z = CandidateFamily(24, [range(0, 24, 2), range(5, 24, 3)])
    r = run_sads(Z)
    assert r.u_set() == [0, 1, 3, 4, 5, 6]
    assert (6, 3, 2) in claims_of(r)
    assert naive_sads(Z, 24)[0] == r.in_u
    assert verify_sads(r, Z).ok()


def test_strict_threshold_skips_first_element():
    Z = CandidateFamily(20, [range(20)])
    le, lt = run_sads(Z, threshold="le"), run_sads(Z, threshold="lt")
    assert claims_of(le)[0][1] == 0
    assert claims_of(lt)[0][1] == 1
    assert 0 not in lt.u_set()


def test_global_attention_keeps_acting():
    # the whole-requirement reading never settles: some claim happens in the last quarter
    Z = window_candidates(rng_for(1), 4, 400, 16)
    g = run_sads(Z, attention="global")
    b = run_sads(Z, attention="bounded")
    late = [c for c in claims_of(g) if c[0] >= 300]
    assert late
    assert len(claims_of(g)) > 4 * len(claims_of(b))
    assert not [c for c in claims_of(b) if c[0] >= 300]


def test_order_is_linear_and_replays():
    Z = delta2_candidates(rng_for(9), 4, 300)
    r = run_sads(Z)
    assert count_cycles(r.order) == 0
    back = SadsRun.from_trace(PriorityTrace.from_lines(r.trace.lines(), engine="sads"), 300, 4)
    assert np.array_equal(back.order, r.order) and back.leader == r.leader
    assert verify_sads(r, Z).ok()


def test_order_from_flips_hand_case():
    # 0 enters U at stage 1, so 0 is L-above 1 but L-below 2
    o = order_from_flips(3, {0: [(1, 1)]})
    assert o[1, 0] and o[0, 2] and o[2, 1]


def test_count_cycles_brute():
    rng = np.random.default_rng(4)
    up = np.triu(rng.random((9, 9)) < 0.5, 1)
    m = up | np.triu(~up, 1).T
    brute = sum(1 for a in range(9) for b in range(9) for c in range(9)
                if a < b and a < c and b != c and m[a, b] and m[b, c] and m[c, a])
    assert count_cycles(m) == brute


def test_quiescence_and_tampering():
    Z = CandidateFamily(32, [range(32)])
    r = run_sads(Z)
    assert quiescence(r, 0) == 0
    r.order[0, 5], r.order[5, 0] = r.order[5, 0], r.order[0, 5]
    assert not verify_sads(r, Z).ok()


def test_argument_errors():
    Z = CandidateFamily(10, [])
    with pytest.raises(ValueError):
        run_sads(Z, threshold="ge")
    with pytest.raises(ValueError):
        run_sads(Z, attention="none")
    with pytest.raises(ValueError):
        run_sads(Z, horizon=11)
