import pytest
from hypothesis import given, settings, strategies as st

from finjury.harness.generators import delta2_candidates, rng_for, window_candidates
from finjury.priority.candidates import CandidateFamily, cantor_pair
from finjury.priority.sts import StsRun, c_as_approx, run_sts, thin_transfer_violations, verify_sts
from finjury.trace import PriorityTrace


def naive_sts(Z, colors, H):
    """Recompute every requirement from scratch at every stage."""
    reqs = sorted(((e, i) for e in range(len(Z)) for i in range(colors)), key=lambda r: cantor_pair(*r))
    c = []
    for s in range(H):
        chosen = None
        for e, i in reqs:
            if cantor_pair(e, i) >= s:
                break
            if not any(c[a] == i and Z.member(e, a, s) for a in range(s)):
                chosen = (e, i)
                break
        c.append(0 if chosen is None else chosen[1])
    return c


@given(st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=25, deadline=None)
def test_matches_naive_recompute(seed, dynamic):
    rng = rng_for(seed)
    H = 120
    Z = delta2_candidates(rng, 3, H, max_flips=3, density=0.1) if dynamic else window_candidates(rng, 3, H, 16)
    r = run_sts(Z, 3)
    assert r.c == naive_sts(Z, 3, H)


def test_empty_family_gives_zero_coloring():
    r = run_sts(CandidateFamily(50, []), 4)
    assert r.c == [0] * 50
    assert verify_sts(r, CandidateFamily(50, [])).ok()


def test_hand_replay_small_horizon():
    # priority by pairing: R[0,0]=0, R[1,0]=1, R[0,1]=2, R[1,1]=4
    Z = CandidateFamily(16, [range(16), [5, 9, 13]])
    r = run_sts(Z, 2)
    # R[0,0] is met by 0 at once; R[1,0] holds color 0 until 5 enters Z_1,
    # then R[0,1] takes 6 and R[1,1] colors 7..9 until 9 meets Z_1
    assert r.c == [0] * 6 + [1] * 4 + [0] * 6
    assert r.active[2] == (1, 0) and r.active[6] == (0, 1) and r.active[9] == (1, 1)
    assert r.active[10] is None
    assert verify_sts(r, Z).ok(strict=True)


def test_trace_reconstruction():
    Z = window_candidates(rng_for(3), 4, 400, 32)
    r = run_sts(Z, 3)
    back = StsRun.from_trace(PriorityTrace.from_lines(r.trace.lines(), engine="sts"), 3, 400, 4)
    assert back.c == r.c and back.active == r.active and back.witnesses == r.witnesses


def test_unexcused_failure_is_reported():
    Z = CandidateFamily(30, [[1]])
    r = run_sts(Z, 2)
    rep = verify_sts(r, Z)
    # R[0,1] can never be met: Z_0 = {1} and 1 is colored 0; its tail past activation is empty
    assert rep.by_name("R[0,1]")[0].passed
    assert "excused" in rep.by_name("R[0,1]")[0].detail
    # a tampered coloring loses the witness and is flagged
    r.c[1] = 1
    r.witnesses[(0, 0)] = 1
    assert not verify_sts(r, Z).ok()


def test_thin_transfer_counts():
    thin, viol = thin_transfer_violations([0, 1, 0, 1, 1, 0, 0, 1], 2, window=8, size=3)
    assert viol == 0 and thin > 0
    assert c_as_approx([2, 0, 1]).value_at(0, 2) == 2


def test_horizon_errors():
    Z = CandidateFamily(10, [[1]])
    with pytest.raises(ValueError):
        run_sts(Z, 2, horizon=11)
    with pytest.raises(ValueError):
        run_sts(Z, 2, horizon=0)
