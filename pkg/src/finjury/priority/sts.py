"""Thin-set diagonalizer: a coloring ``c`` no infinite candidate set is thin for.

Requirement ``R_{e,i}`` asks for some ``a`` in ``Z_e`` with ``c(a) = i``.
Requirements are prioritised by the Cantor pairing of ``(e, i)``; at stage
``s`` the least scheduled (pairing ``< s``) unsatisfied requirement colors
``s`` with its own color, otherwise ``c(s) = 0``.  Requirement truth is read
directly off the coloring built so far and the stage-``s`` candidate sets.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..limits import Delta2Approx, to_stable_pairs
from ..trace import PriorityTrace
from ..verdicts import VerificationReport
from .candidates import CandidateFamily, cantor_pair

ENGINE = "sts"


@dataclass
class StsRun:
    colors: int
    horizon: int
    n_candidates: int
    c: list[int]
    active: list[tuple[int, int] | None]  # requirement that chose c(s), per stage
    witnesses: dict[tuple[int, int], int | None]  # last logged SATISFY witness, None once injured
    trace: PriorityTrace = field(repr=False, default_factory=lambda: PriorityTrace(ENGINE))

    def requirements(self) -> list[tuple[int, int]]:
        return sorted(((e, i) for e in range(self.n_candidates) for i in range(self.colors)),
                      key=lambda r: cantor_pair(*r))

    def scheduled(self) -> list[tuple[int, int]]:
        return [r for r in self.requirements() if cantor_pair(*r) < self.horizon]

    @classmethod
    def from_trace(cls, trace: PriorityTrace, colors: int, horizon: int,
                   n_candidates: int) -> "StsRun":
        c: list[int] = []
        active: list[tuple[int, int] | None] = []
        for _, ev in trace.of("ASSIGN"):
            if ev.stage != len(c):
                raise ValueError(f"ASSIGN for stage {ev.stage} out of order")
            c.append(ev["color"])
            e = ev.get("e")
            active.append(None if e is None else (e, ev["i"]))
        final = _final_from_trace(trace)
        return cls(colors, horizon, n_candidates, c, active, final, trace)


def _final_from_trace(trace: PriorityTrace) -> dict[tuple[int, int], int | None]:
    status: dict[tuple[int, int], int | None] = {}
    for ev in trace:
        if ev.event == "SATISFY":
            status[(ev["e"], ev["i"])] = ev["witness"]
        elif ev.event == "INJURE":
            status[(ev["e"], ev["i"])] = None
    return status


def run_sts(Z: CandidateFamily, colors: int, horizon: int | None = None,
            trace: PriorityTrace | None = None) -> StsRun:
    H = Z.horizon if horizon is None else int(horizon)
    if H < 1:
        raise ValueError("horizon must be >= 1")
    if H > Z.horizon:
        raise ValueError(f"horizon {H} exceeds the candidate family's {Z.horizon}")
    n = len(Z)
    trace = PriorityTrace(ENGINE) if trace is None else trace
    reqs = sorted(((e, i) for e in range(n) for i in range(colors)), key=lambda r: cantor_pair(*r))
    member = Z.initial_membership()[:, :H].copy()
    events = Z.events_by_stage()
    wit: dict[tuple[int, int], set[int]] = {r: set() for r in reqs}
    sat = {r: False for r in reqs}
    c: list[int] = []
    active: list[tuple[int, int] | None] = []
    prev_active: tuple[int, int] | None = None

    def refresh(s: int, touched: set[tuple[int, int]]) -> None:
        for r in sorted(touched, key=lambda r: cantor_pair(*r)):
            now = bool(wit[r])
            if now and not sat[r]:
                trace.emit(s, "SATISFY", e=r[0], i=r[1], witness=min(wit[r]))
            elif sat[r] and not now:
                trace.emit(s, "INJURE", e=r[0], i=r[1], reason="witness-left")
            sat[r] = now

    for s in range(H + 1):
        touched: set[tuple[int, int]] = set()
        if s > 0:
            a = s - 1
            for e in np.flatnonzero(member[:, a]).tolist():
                r = (e, c[a])
                if r in wit:
                    wit[r].add(a)
                    touched.add(r)
        if s < H:
            for e, a, v in events.get(s, ()):
                if member[e, a] == v:
                    continue
                member[e, a] = v
                if a < s:
                    r = (e, c[a])
                    if r in wit:
                        (wit[r].add if v else wit[r].discard)(a)
                        touched.add(r)
        refresh(s, touched)
        if s == H:
            break
        chosen = None
        for r in reqs:
            if cantor_pair(*r) >= s:
                break
            if not sat[r]:
                chosen = r
                break
        if chosen != prev_active:
            if chosen is None:
                trace.emit(s, "ACTIVATE", e=None, i=None, pair=None)
            else:
                trace.emit(s, "ACTIVATE", e=chosen[0], i=chosen[1], pair=cantor_pair(*chosen))
            prev_active = chosen
        color = chosen[1] if chosen is not None else 0
        c.append(color)
        active.append(chosen)
        if chosen is None:
            trace.emit(s, "ASSIGN", color=color, e=None, i=None)
        else:
            trace.emit(s, "ASSIGN", color=color, e=chosen[0], i=chosen[1])

    return StsRun(colors, H, n, c, active, _final_from_trace(trace), trace)


def c_as_approx(c: list[int]) -> Delta2Approx:
    """The coloring as an approximation whose value at ``x`` is fixed from stage ``x``."""
    return Delta2Approx(len(c), [(x, x, v) for x, v in enumerate(c)])


def thin_transfer_violations(c: list[int], colors: int, window: int = 64, size: int = 4) -> tuple[int, int]:
    """Check thin-for-h implies thin-for-c on all ``size``-subsets of ``[0, window)``.

    ``h`` is the stable pair coloring of ``c``; since ``h(x, s) = c(x)`` for
    ``x < s``, a set ``A`` thin for ``h`` avoiding color ``j`` must have
    ``j`` missing from ``c`` on ``A`` minus its maximum.  Returns
    ``(#subsets thin for h, #violations)``.
    """
    w = min(window, len(c))
    if w < size:
        return 0, 0
    h = to_stable_pairs(c_as_approx(c[:w]), k=colors)
    hm = h.table()
    combos = np.array(list(itertools.combinations(range(w), size)), dtype=np.int64)
    full = (1 << colors) - 1
    hmask = np.zeros(len(combos), dtype=np.int64)
    for p, q in itertools.combinations(range(size), 2):
        hmask |= np.left_shift(1, hm[combos[:, p], combos[:, q]])
    carr = np.asarray(c[:w], dtype=np.int64)
    cmask = np.zeros(len(combos), dtype=np.int64)
    for p in range(size - 1):
        cmask |= np.left_shift(1, carr[combos[:, p]])
    thin_h = hmask != full
    # an avoided color of h that c uses on A minus max
    violation = thin_h & ((~hmask & full & cmask) != 0)
    return int(thin_h.sum()), int(violation.sum())


def verify_sts(r: StsRun, Z: CandidateFamily, thin_window: int = 64) -> VerificationReport:
    """Check every scheduled requirement from the coloring and the candidates alone."""
    rep = VerificationReport(ENGINE)
    H = r.horizon
    if len(r.c) != H or len(r.active) != H:
        raise ValueError(f"malformed run: {len(r.c)} colors for horizon {H}")
    final = Z.final_membership()[:, :H]
    carr = np.asarray(r.c, dtype=np.int64)
    if carr.size and (carr.min() < 0 or carr.max() >= max(r.colors, 1)):
        rep.add("colors.range", False, f"color outside [0, {r.colors})")
    assign_lines = [i for i, _ in r.trace.of("ASSIGN")]
    satisfy_lines = {(ev["e"], ev["i"]): i for i, ev in r.trace.of("SATISFY")}
    n_sat = n_excused = 0
    for e, i in r.scheduled():
        hits = np.flatnonzero(final[e] & (carr == i))
        if hits.size:
            a = int(hits[0])
            ok = r.witnesses.get((e, i)) is not None
            rep.add(f"R[{e},{i}]", ok,
                    f"satisfied witness={a}" if ok else f"witness {a} exists but trace ends unsatisfied",
                    satisfy_lines.get((e, i)))
            n_sat += ok
            continue
        if r.witnesses.get((e, i)) is not None:
            rep.add(f"R[{e},{i}]", False, "trace ends satisfied but no witness survives",
                    satisfy_lines.get((e, i)))
            continue
        # unsatisfied: must have been the active requirement on a final segment
        s_star = H
        while s_star > 0 and r.active[s_star - 1] == (e, i):
            s_star -= 1
        if s_star == H:
            last = r.active[-1] if H else None
            rep.add(f"R[{e},{i}]", False, f"unsatisfied and blocked by {last}",
                    assign_lines[-1] if assign_lines else None)
            continue
        tail_hits = np.flatnonzero(final[e, s_star + 1:])
        ok = tail_hits.size == 0
        n_excused += ok
        rep.add(f"R[{e},{i}]", ok,
                f"excused: Z_{e} empty on ({s_star}, {H})" if ok
                else f"Z_{e} meets ({s_star}, {H}) at {s_star + 1 + int(tail_hits[0])}",
                assign_lines[s_star] if assign_lines else None)
    # witnesses logged along the way were genuine at their stage
    bad = 0
    for idx, ev in r.trace.of("SATISFY"):
        a, e, i, s = ev["witness"], ev["e"], ev["i"], ev.stage
        if not (a < s and r.c[a] == i and Z.member(e, a, min(s, H - 1))):
            bad += 1
            rep.add("trace.satisfy", False, f"bad witness {a} for R[{e},{i}] at stage {s}", idx)
    if not bad:
        rep.add("trace.satisfy", True, f"{len(satisfy_lines)} logged witnesses valid")
    thin_h, viol = thin_transfer_violations(r.c, r.colors, thin_window)
    rep.add("thin.h_to_c", viol == 0, f"{thin_h} sets thin for h in [0,{min(thin_window, H)}), {viol} not thin for c")
    rep.counters.update(
        scheduled=len(r.scheduled()), satisfied=n_sat, excused=n_excused,
        activations=len(r.trace.of("ACTIVATE")), injuries=len(r.trace.of("INJURE")),
    )
    return rep
