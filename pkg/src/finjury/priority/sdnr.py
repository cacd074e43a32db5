"""Anti-diagonalizer: a limit-computable ``f`` no functional of ``D`` escapes.

Strategy ``e`` looks for the least unrestrained ``a >= e`` on which its
functional converges on the current ``D`` with use below the enumeration
time of ``a``, restrains it and commits ``f(a)`` to the computed value.  It is
injured when a stronger strategy restrains the same point or when the
computation it relied on (value and use) or the enumeration time changes.
Points without a commitment get ``f_s(y) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..functionals import FunctionalTable
from ..limits import Delta2Approx, EnumeratedSet
from ..trace import PriorityTrace
from ..verdicts import VerificationReport

ENGINE = "sdnr"


@dataclass(frozen=True)
class Hold:
    a: int
    value: int
    use: int
    theta: int


@dataclass
class SdnrRun:
    horizon: int
    n_strategies: int
    f: list[int]  # f_{H-1} on [0, H)
    history: dict[int, list[tuple[int, int]]]  # point -> [(stage, new value)]
    holds: list[dict[int, Hold]]  # per stage: strategy -> restraint held at the end of the stage
    trace: PriorityTrace = field(repr=False, default_factory=lambda: PriorityTrace(ENGINE))

    def restraint_stages(self, e: int, a: int) -> list[int]:
        """``Z_{e,a}``: stages at whose end strategy ``e`` restrains ``a``."""
        return [s for s, h in enumerate(self.holds) if e in h and h[e].a == a]

    def flips(self, x: int) -> int:
        return len(self.history.get(x, ()))

    @classmethod
    def from_trace(cls, trace: PriorityTrace, horizon: int, n_strategies: int) -> "SdnrRun":
        H = horizon
        cur: dict[int, Hold] = {}
        pending: dict[int, dict] = {}
        holds: list[dict[int, Hold]] = []
        f = [0] * H
        history: dict[int, list[tuple[int, int]]] = {}
        for ev in trace:
            if ev.event == "INJURE":
                cur.pop(ev["e"], None)
            elif ev.event == "RESTRAIN":
                pending[ev["e"]] = {"a": ev["a"], "use": ev["use"], "theta": ev["theta"]}
            elif ev.event == "COMMIT":
                p = pending.pop(ev["e"])
                cur[ev["e"]] = Hold(p["a"], ev["value"], p["use"], p["theta"])
            elif ev.event == "ASSIGN":
                s = ev.stage
                if s != len(holds):
                    raise ValueError(f"ASSIGN for stage {s} out of order")
                holds.append(dict(cur))
                for x, v in zip(_as_list(ev["changed"]), _as_list(ev["values"])):
                    f[x] = v
                    history.setdefault(x, []).append((s, v))
        return cls(H, n_strategies, f, history, holds, trace)


def _as_list(v) -> list[int]:
    if v is None:
        return []
    return v if isinstance(v, list) else [v]


def _d_bits(D: Delta2Approx, H: int):
    """Yield ``D_s`` as a bit string of length ``H`` for ``s = 0 .. H-1``."""
    bits = ["0"] * H
    by_stage = D.events_at()
    for s in range(H):
        for x, v in by_stage.get(s, ()):
            if x < H:
                bits[x] = "1" if v else "0"
        yield "".join(bits)


def run_sdnr(F: Sequence[FunctionalTable], D: Delta2Approx, E: EnumeratedSet,
             horizon: int, trace: PriorityTrace | None = None) -> SdnrRun:
    H = int(horizon)
    if H < 1:
        raise ValueError("horizon must be >= 1")
    if D.horizon < H:
        raise ValueError(f"D approximation has horizon {D.horizon} < {H}")
    for tab in F:
        tab.validate()
    n = len(F)
    trace = PriorityTrace(ENGINE) if trace is None else trace
    held: dict[int, Hold] = {}
    f = [0] * H
    history: dict[int, list[tuple[int, int]]] = {}
    holds: list[dict[int, Hold]] = []
    inputs = [[a for a in tab.inputs() if e <= a < H] for e, tab in enumerate(F)]

    for s, ds in enumerate(_d_bits(D, H)):
        taken: dict[int, int] = {}  # point -> strategy holding it, stronger strategies first
        for e in range(n):
            h = held.get(e)
            if h is not None:
                reason = None
                if h.a in taken:
                    reason = "higher-restraint"
                else:
                    comp = F[e].apply_bits(h.a, ds, limit=s)
                    if comp is None or comp != (h.value, h.use):
                        reason = "use-changed"
                    elif E.theta(h.a, s) != h.theta:
                        reason = "theta-changed"
                if reason is None:
                    taken[h.a] = e
                    continue
                trace.emit(s, "INJURE", e=e, a=h.a, reason=reason)
                del held[e]
            for a in inputs[e]:
                if a in taken:
                    continue
                th = E.theta(a, s)
                if th is None:
                    continue
                comp = F[e].apply_bits(a, ds, limit=s)
                if comp is None or not comp[1] < th:
                    continue
                value, use = comp
                held[e] = Hold(a, value, use, th)
                taken[a] = e
                trace.emit(s, "RESTRAIN", e=e, a=a, use=use, theta=th)
                trace.emit(s, "COMMIT", e=e, a=a, value=value)
                break
        fs = [0] * H
        for h in held.values():
            fs[h.a] = h.value
        changed = [y for y in range(min(s + 1, H)) if fs[y] != f[y]]
        for y in changed:
            f[y] = fs[y]
            history.setdefault(y, []).append((s, fs[y]))
        trace.emit(s, "ASSIGN", changed=changed, values=[fs[y] for y in changed])
        holds.append(dict(held))

    return SdnrRun(H, n, f, history, holds, trace)


def final_computations(F: Sequence[FunctionalTable], D: Delta2Approx, H: int) -> list[dict[int, tuple[int, int]]]:
    """``e -> {a: (value, use)}`` for every convergent ``Phi_e^D(a)`` on the final ``D`` with use below ``H``."""
    ds = ""
    for ds in _d_bits(D, H):
        pass
    return [{a: c for a in tab.inputs() if a < H
             for c in [tab.apply_bits(a, ds, limit=H - 1)] if c is not None}
            for tab in F]


def agreement_points(f: Sequence[int], comps: dict[int, tuple[int, int]]) -> list[int]:
    """Points where ``f`` agrees with a functional's convergent values."""
    return [a for a, (v, _) in sorted(comps.items()) if a < len(f) and f[a] == v]


def verify_sdnr(r: SdnrRun, F: Sequence[FunctionalTable], D: Delta2Approx,
                E: EnumeratedSet) -> VerificationReport:
    rep = VerificationReport(ENGINE)
    H = r.horizon
    if len(r.holds) != H or len(r.f) != H:
        raise ValueError(f"malformed run: {len(r.holds)} stages for horizon {H}")
    assign_lines = [i for i, _ in r.trace.of("ASSIGN")]
    comps = final_computations(F, D, H)
    last = r.holds[-1]

    # stage invariants: restrained points disjoint, commitments visible in f_s
    changes: dict[int, list[tuple[int, int]]] = {}
    for x, fl in r.history.items():
        for t, v in fl:
            changes.setdefault(t, []).append((x, v))
    f = [0] * H
    bad_stage = None
    for s, hs in enumerate(r.holds):
        for x, v in changes.get(s, ()):
            f[x] = v
        pts = [h.a for h in hs.values()]
        if len(set(pts)) != len(pts):
            bad_stage = (s, "two strategies restrain one point")
            break
        wrong = [h.a for h in hs.values() if f[h.a] != h.value]
        if wrong:
            bad_stage = (s, f"commitment on {wrong[0]} not realized in f_s")
            break
    rep.add("restraints.disjoint", bad_stage is None,
            "" if bad_stage is None else bad_stage[1],
            None if bad_stage is None else assign_lines[bad_stage[0]])

    # (1) each Z_{e,a} is finite or runs to the horizon, as the computation on final D allows
    n_fin = n_cof = 0
    for e in range(r.n_strategies):
        points = sorted({h.a for hs in r.holds for k, h in hs.items() if k == e})
        for a in points:
            cofinite = e in last and last[e].a == a
            if not cofinite:
                n_fin += 1
                continue
            n_cof += 1
            c = comps[e].get(a)
            th = E.settling(a)
            problems = []
            if a < e:
                problems.append("point below the strategy index")
            if th is None:
                problems.append("point never enumerated")
            if c is None:
                problems.append("computation diverges on final D")
            elif th is not None and not c[1] < th:
                problems.append(f"use {c[1]} not below enumeration time {th}")
            elif c[0] != last[e].value:
                problems.append("committed value differs from final computation")
            if problems:
                rep.add(f"Z[{e},{a}]", False, "cofinite but " + "; ".join(problems), assign_lines[-1])
    rep.add("restraints.classified", True, f"{n_fin} finite, {n_cof} horizon-cofinite")

    # (2) strategies with an unblocked witness agree with f somewhere
    for e in range(r.n_strategies):
        blocked = {h.a for k, h in last.items() if k < e}
        witnesses = [a for a, (v, u) in sorted(comps[e].items())
                     if a >= e and a not in blocked and E.settling(a) is not None and E.settling(a) > u]
        agree = agreement_points(r.f, comps[e])
        if not witnesses:
            rep.add(f"R[{e}]", None if not agree else True,
                    f"no unblocked witness; agrees at {agree[:3]}" if agree else "no unblocked witness")
            continue
        ok = bool(agree)
        rep.add(f"R[{e}]", ok,
                f"witness {witnesses[0]}; f agrees with the functional at {agree[0]}" if ok
                else f"witness {witnesses[0]} but f disagrees everywhere", assign_lines[-1])

    # (3) flips per point against injuries touching it
    injuries: dict[int, int] = {}
    for _, ev in r.trace.of("INJURE"):
        injuries[ev["a"]] = injuries.get(ev["a"], 0) + 1
    over = [x for x in sorted(r.history) if r.flips(x) > 1 + injuries.get(x, 0)]
    worst = max(r.history, key=lambda x: r.flips(x) - injuries.get(x, 0), default=None)
    if over:
        x = over[0]
        line = next((i for i, ev in r.trace.of("ASSIGN") if x in _as_list(ev["changed"])), None)
        rep.add("f.flips", False,
                f"{len(over)} points exceed 1 + injuries; point {x}: {r.flips(x)} flips, {injuries.get(x, 0)} injuries",
                line)
    else:
        rep.add("f.flips", True, "flips within 1 + injuries" if worst is None
                else f"tightest point {worst}: {r.flips(worst)} flips, {injuries.get(worst, 0)} injuries")

    rep.counters.update(
        restraints=len(r.trace.of("RESTRAIN")), commitments=len(r.trace.of("COMMIT")),
        injuries=len(r.trace.of("INJURE")), flips=sum(len(v) for v in r.history.values()),
    )
    return rep
