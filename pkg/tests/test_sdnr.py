import pytest
from hypothesis import given, settings, strategies as st

from finjury.functionals import FunctionalTable
from finjury.harness.generators import SDNR_SCRIPTS, random_sdnr, rng_for, scripted_sdnr
from finjury.limits import Delta2Approx, EnumeratedSet
from finjury.priority.sdnr import SdnrRun, agreement_points, final_computations, run_sdnr, verify_sdnr
from finjury.trace import PriorityTrace


def run(inp):
    return run_sdnr(inp.F, inp.D, inp.E, inp.horizon)


def injuries_at(r):
    out = {}
    for _, ev in r.trace.of("INJURE"):
        out[ev["a"]] = out.get(ev["a"], 0) + 1
    return out


def test_empty_script():
    inp = scripted_sdnr("empty")
    r = run(inp)
    assert r.f == [0] * inp.horizon and not r.history
    assert verify_sdnr(r, inp.F, inp.D, inp.E).ok()


def test_constant_functional_is_matched():
    inp = scripted_sdnr("constant7")
    r = run(inp)
    # 5 is enumerated at 9; the least input with use below its enumeration time
    assert r.f[5] == 7 and sum(r.f) == 7
    assert r.history == {5: [(9, 7)]}
    assert r.restraint_stages(0, 5) == list(range(9, inp.horizon))
    assert verify_sdnr(r, inp.F, inp.D, inp.E).ok(strict=True)


def test_cascade_release_and_recommit():
    inp = scripted_sdnr("cascade")
    r = run(inp)
    assert r.history == {3: [(5, 1), (8, 0), (14, 1)], 4: [(6, 8), (8, 0), (14, 8)]}
    reasons = [ev["reason"] for _, ev in r.trace.of("INJURE")]
    assert reasons == ["use-changed", "use-changed"]
    rep = verify_sdnr(r, inp.F, inp.D, inp.E)
    assert rep.by_name("R[0]")[0].passed and rep.by_name("R[1]")[0].passed
    # a release followed by a recommit costs two flips for one injury
    assert rep.by_name("f.flips")[0].status == "fail"
    inj = injuries_at(r)
    assert all(r.flips(x) <= 1 + 2 * inj.get(x, 0) for x in r.history)


def test_higher_restraint_injury():
    # strategy 1 takes 3 at stage 6; D(4) rises at 7 and strategy 0 claims 3 back
    f0 = FunctionalTable({3: [("00001", 2)]})
    f1 = FunctionalTable({3: [("0000", 9)]})
    D = Delta2Approx(12, [(4, 7, 1)])
    E = EnumeratedSet([(3, 6)])
    r = run_sdnr([f0, f1], D, E, 12)
    assert [(ev.stage, ev["e"], ev["reason"]) for _, ev in r.trace.of("INJURE")] == [(7, 1, "higher-restraint")]
    assert r.history == {3: [(6, 9), (7, 2)]}
    rep = verify_sdnr(r, [f0, f1], D, E)
    assert rep.ok()
    assert rep.by_name("R[1]")[0].status == "undetermined"


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_random_runs_verify_and_replay(seed):
    inp = random_sdnr(rng_for(seed), 40)
    r = run(inp)
    rep = verify_sdnr(r, inp.F, inp.D, inp.E)
    assert not [v for v in rep.failures() if v.name != "f.flips"]
    inj = injuries_at(r)
    assert all(r.flips(x) <= 1 + 2 * inj.get(x, 0) for x in r.history)
    back = SdnrRun.from_trace(PriorityTrace.from_lines(r.trace.lines(), engine="sdnr"), 40, len(inp.F))
    assert back.f == r.f and back.history == r.history and back.holds == r.holds


def test_commitments_hold_their_computation():
    inp = random_sdnr(rng_for(11), 50)
    r = run(inp)
    bits = ["0"] * 50
    ev_at = inp.D.events_at()
    for s, hs in enumerate(r.holds):
        for x, v in ev_at.get(s, ()):
            bits[x] = str(v)
        for e, h in hs.items():
            assert inp.F[e].apply_bits(h.a, "".join(bits), limit=s) == (h.value, h.use)
            assert h.use < h.theta == inp.E.settling(h.a)
            assert h.a >= e


def test_final_computations_and_agreement():
    inp = scripted_sdnr("constant7")
    comps = final_computations(inp.F, inp.D, inp.horizon)
    assert comps[0][5] == (7, 5)
    assert agreement_points([0] * 5 + [7], comps[0]) == [5]


def test_errors():
    with pytest.raises(ValueError):
        scripted_sdnr("nope")
    with pytest.raises(ValueError):
        run_sdnr([], Delta2Approx(5), EnumeratedSet(), 6)
    assert len(SDNR_SCRIPTS) == 3
