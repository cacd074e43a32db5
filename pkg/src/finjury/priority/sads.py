"""Decision-maker construction of a stable order of type omega + omega*.

Elements are placed one per stage: at stage ``s`` every ``u < s`` goes
L-below ``s`` when ``u`` is in ``U`` and L-above it otherwise.  Requirement
``R_{2e}`` wants ``Z_e`` to meet ``U``, ``R_{2e+1}`` wants it to meet the
complement.  A requirement claims a decision-maker ``u`` and, when ``u`` sits
on the wrong side, moves the whole interval ``[u, s]`` across; the elements
of ``(u, s]`` then follow ``u`` for good.

Two attention rules are offered.  ``global`` evaluates each requirement as a
whole (``R`` unsatisfied at ``s`` means it requires attention for every
``u``).  ``bounded`` indexes the evaluation by the decision-maker: ``R_i``
requires attention for ``u`` when it has no witness below ``u`` and its
candidate still meets ``[u, s)``, the stage-``s`` reading of a two-quantifier
statement cut off at ``u``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from ..structures import LinearOrderPrefix, Tournament
from ..trace import PriorityTrace
from ..verdicts import VerificationReport
from .candidates import CandidateFamily

ENGINE = "sads"
THRESHOLDS = ("le", "lt")
ATTENTION = ("global", "bounded")
MIN_TAIL = 16


@dataclass
class SadsRun:
    horizon: int
    n_candidates: int
    threshold: str
    attention: str
    order: np.ndarray  # order[u, v] is u <_L v
    in_u: list[bool]  # final U
    flips: dict[int, list[tuple[int, int]]]  # element -> [(stage, new side)]
    leader: list[int]  # decision-maker each element follows at the end
    trace: PriorityTrace = field(repr=False, default_factory=lambda: PriorityTrace(ENGINE))

    def linear_order(self, validate: bool = True) -> LinearOrderPrefix:
        return LinearOrderPrefix(Tournament.from_matrix(self.order), validate=validate)

    def u_set(self) -> list[int]:
        return [x for x, v in enumerate(self.in_u) if v]

    @classmethod
    def from_trace(cls, trace: PriorityTrace, horizon: int, n_candidates: int,
                   threshold: str = "le", attention: str = "bounded") -> "SadsRun":
        H = horizon
        by_stage: dict[int, list] = {}
        for ev in trace:
            by_stage.setdefault(ev.stage, []).append(ev)
        in_u = np.zeros(H + 1, dtype=bool)
        leader = list(range(H))
        flips: dict[int, list[tuple[int, int]]] = {}
        for s in range(H):
            for ev in by_stage.get(s, ()):
                if ev.event == "UFLIP":
                    x, to = ev["x"], ev["to"]
                    in_u[x] = bool(to)
                    flips.setdefault(x, []).append((s, to))
                elif ev.event == "CLAIM":
                    for x in range(ev["u"] + 1, ev["hi"] + 1):
                        leader[x] = ev["u"]
        return cls(H, n_candidates, threshold, attention, order_from_flips(H, flips),
                   in_u[:H].tolist(), flips, leader, trace)


def order_from_flips(H: int, flips: dict[int, list[tuple[int, int]]]) -> np.ndarray:
    """The order decided stage by stage: ``u <_L s`` iff ``u`` was in ``U`` when ``s`` was placed.

    Flips made at stage ``t`` take effect from the placement at ``t + 1``.
    """
    side = np.zeros((H, H), dtype=bool)
    for x, fl in flips.items():
        for t, to in fl:
            side[x, t + 1:] = bool(to)
    idx = np.arange(H)
    order = np.where(idx[:, None] < idx[None, :], side, ~side.T)
    np.fill_diagonal(order, False)
    return order


def run_sads(Z: CandidateFamily, horizon: int | None = None, threshold: str = "le",
             attention: str = "bounded", trace: PriorityTrace | None = None) -> SadsRun:
    if threshold not in THRESHOLDS:
        raise ValueError(f"threshold must be one of {THRESHOLDS}")
    if attention not in ATTENTION:
        raise ValueError(f"attention must be one of {ATTENTION}")
    H = Z.horizon if horizon is None else int(horizon)
    if H < 1:
        raise ValueError("horizon must be >= 1")
    if H > Z.horizon:
        raise ValueError(f"horizon {H} exceeds the candidate family's {Z.horizon}")
    n = len(Z)
    nreq = 2 * n
    trace = PriorityTrace(ENGINE) if trace is None else trace
    member = Z.initial_membership()[:, :H].copy()
    events = Z.events_by_stage()
    in_u = np.zeros(H + 1, dtype=bool)
    leader = list(range(H))
    flips: dict[int, list[tuple[int, int]]] = {}
    dm_side: list[list[int]] = [[], []]  # decision-makers outside / inside U
    sat = [False] * nreq
    shift = 0 if threshold == "le" else 1
    big = H + 1

    first = [[big] * n, [big] * n]  # least witness outside / inside U, per candidate
    last_z = [-1] * n
    dirty = set(range(n))

    for s in range(H):
        for e, a, v in events.get(s, ()):
            if member[e, a] == v:
                continue
            member[e, a] = v
            if a >= s - 1:
                continue  # enters the witness range below
            if v:
                side = int(in_u[a])
                first[side][e] = min(first[side][e], a)
                last_z[e] = max(last_z[e], a)
            elif a in (first[0][e], first[1][e], last_z[e]):
                dirty.add(e)
        if s > 0:
            a = s - 1
            side = int(in_u[a])
            for e in np.flatnonzero(member[:, a]).tolist():
                first[side][e] = min(first[side][e], a)
                last_z[e] = a
        for e in dirty:
            row = member[e, :s]
            hits = np.flatnonzero(row)
            last_z[e] = int(hits[-1]) if hits.size else -1
            for side in (0, 1):
                w = hits[in_u[hits] == side] if hits.size else hits
                first[side][e] = int(w[0]) if w.size else big
        dirty.clear()
        bisect.insort(dm_side[0], s)

        # R_i claims the decision-makers of [i, hi_i] left over by stronger requirements;
        # every range starts at or below the later ones, so what is left is one interval
        # above all earlier claims
        covered = -1
        least = None
        act = None  # (u, i)
        glob = attention == "global"
        for i in range(nreq):
            e, odd = divmod(i, 2)
            w = first[1 - odd][e]
            now = w < big
            if now != sat[i]:
                if now:
                    trace.emit(s, "SATISFY", i=i, e=e, witness=w)
                else:
                    trace.emit(s, "INJURE", i=i, e=e, reason="witness-left")
                sat[i] = now
            if act is not None:
                continue
            hi = (-1 if now else s) if glob else min(w, last_z[e], s)
            lo = i + shift
            if lo > hi:
                continue
            lo = max(lo, covered + 1)
            covered = max(covered, hi)
            if lo > hi:
                continue
            wrong = dm_side[odd]  # even requirements want decision-makers in U
            k = bisect.bisect_left(wrong, lo)
            u = wrong[k] if k < len(wrong) and wrong[k] <= hi else None
            if least is None:
                if u is not None:
                    least = i
                else:
                    right = dm_side[1 - odd]
                    k = bisect.bisect_left(right, lo)
                    if k < len(right) and right[k] <= hi:
                        least = i
            if u is not None:
                act = (u, i)
        if act is not None:
            u, i = act
            want = 1 if i % 2 == 0 else 0
            trace.emit(s, "CLAIM", u=u, i=i, hi=s, side=want)
            for x in range(u, s + 1):
                if in_u[x] != want:
                    in_u[x] = want
                    flips.setdefault(x, []).append((s, want))
                    trace.emit(s, "UFLIP", x=x, to=want)
            # (u, s] stop being decision-makers and follow u
            for side in dm_side:
                lo_k = bisect.bisect_right(side, u)
                hi_k = bisect.bisect_right(side, s)
                del side[lo_k:hi_k]
            dm_side[1 - want].remove(u)
            bisect.insort(dm_side[want], u)
            for x in range(u + 1, s + 1):
                leader[x] = u
            dirty.update(range(n))
        trace.emit(s, "ASSIGN", x=s, least=least)

    return SadsRun(H, n, threshold, attention, order_from_flips(H, flips), in_u[:H].tolist(), flips, leader, trace)


def count_cycles(order: np.ndarray) -> int:
    """Cyclic triples of a tournament matrix from its score sequence."""
    n = order.shape[0]
    d = order.sum(axis=1).astype(np.int64)
    return n * (n - 1) * (n - 2) // 6 - int((d * (d - 1) // 2).sum())


def quiescence(r: SadsRun, e: int) -> int:
    """First stage after which no stronger requirement than ``R_{2e}`` claims or acts."""
    q = 0
    for _, ev in r.trace.of("CLAIM"):
        if ev["i"] < 2 * e:
            q = max(q, ev.stage + 1)
    if r.attention == "global":
        for _, ev in r.trace.of("ASSIGN"):
            least = ev.get("least")
            if least is not None and least < 2 * e:
                q = max(q, ev.stage + 1)
    return q


def verify_sads(r: SadsRun, Z: CandidateFamily) -> VerificationReport:
    rep = VerificationReport(ENGINE)
    H = r.horizon
    order = r.order
    if order.shape != (H, H):
        raise ValueError(f"malformed run: order of shape {order.shape} for horizon {H}")
    assign_lines = {ev.stage: i for i, ev in r.trace.of("ASSIGN")}
    if len(assign_lines) != H:
        raise ValueError(f"malformed trace: {len(assign_lines)} ASSIGN records for horizon {H}")

    # (1) L is a tournament without 3-cycles
    off = ~np.eye(H, dtype=bool)
    total = bool(((order ^ order.T) | ~off).all() and not (order & order.T).any())
    cycles = count_cycles(order) if total else -1
    rep.add("order.linear", total and cycles == 0,
            f"{cycles} cyclic triples" if total else "relation is not a tournament")

    # replaying the trace must rebuild the same order and U
    replay = SadsRun.from_trace(r.trace, H, r.n_candidates, r.threshold, r.attention)
    same = np.array_equal(replay.order, order) and replay.in_u == r.in_u
    rep.add("order.replay", same, "order and U rebuilt from trace" if same else "trace disagrees with run")

    # (2) flips bounded by claims touching the element
    claims = [(i, ev) for i, ev in r.trace.of("CLAIM")]
    touch = np.zeros(H + 1, dtype=np.int64)
    for _, ev in claims:
        touch[ev["u"]] += 1
        touch[ev["hi"] + 1] -= 1
    touch = np.cumsum(touch)[:H]
    over = [x for x, fl in r.flips.items() if len(fl) > touch[x]]
    rep.add("u.flips", not over,
            f"max flips {max((len(f) for f in r.flips.values()), default=0)}"
            if not over else f"element {over[0]} flipped {len(r.flips[over[0]])} times, {touch[over[0]]} claims")

    # followers only move down and only to decision-makers
    leader = list(range(H))
    bad_follow = None
    for idx, ev in claims:
        u, hi = ev["u"], ev["hi"]
        if leader[u] != u:
            bad_follow = (idx, f"claimed {u} is not a decision-maker")
            break
        for x in range(u + 1, hi + 1):
            if leader[x] < u:
                bad_follow = (idx, f"{x} moved from {leader[x]} up to {u}")
                break
            leader[x] = u
        if bad_follow:
            break
    if bad_follow is None and leader != r.leader:
        bad_follow = (None, "final follower map disagrees with trace")
    rep.add("followers", bad_follow is None, "" if bad_follow is None else bad_follow[1],
            None if bad_follow is None else bad_follow[0])

    # (3) elements of U sit L-below everything placed after their last entry
    worst = 0
    bad_u = None
    for x in r.u_set():
        entered = max((s for s, to in r.flips.get(x, ()) if to == 1), default=x)
        later = order[x, entered + 1:]
        later_idx = np.arange(entered + 1, H)
        miss = later_idx[(~later) & (later_idx != x)]
        if miss.size:
            bad_u = (x, int(miss[0]))
            break
        worst = max(worst, int((order[:, x] & off[x]).sum()))
    rep.add("u.omega_part", bad_u is None,
            f"every U element is L-above at most {worst} elements" if bad_u is None
            else f"{bad_u[0]} in U but not below later element {bad_u[1]}")

    # (4) candidates with enough elements past quiescence meet both sides
    final = Z.final_membership()[:, :H]
    in_u = np.asarray(r.in_u, dtype=bool)
    for e in range(r.n_candidates):
        q = quiescence(r, e)
        tail = int(final[e, q:].sum())
        line = assign_lines.get(min(q, H - 1))
        meets_in = bool((final[e] & in_u).any())
        meets_out = bool((final[e] & ~in_u).any())
        if tail < MIN_TAIL:
            rep.add(f"Z[{e}]", None if not (meets_in and meets_out) else True,
                    f"{tail} elements after stage {q}; sides in={meets_in} out={meets_out}", line)
            continue
        ok = meets_in and meets_out
        rep.add(f"Z[{e}]", ok, f"{tail} elements after stage {q}; meets U={meets_in} complement={meets_out}", line)

    rep.counters.update(
        claims=len(claims), flips=sum(len(f) for f in r.flips.values()),
        injuries=len(r.trace.of("INJURE")), u_size=int(in_u.sum()),
        decision_makers=sum(1 for x in range(H) if r.leader[x] == x),
    )
    return rep
