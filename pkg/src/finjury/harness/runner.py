"""Run scenarios, persist traces, and rebuild reports from persisted traces.

A trace file holds a header (format line, engine, digest and the scenario
itself, each line prefixed ``#``) followed by the engine's record lines and an
``# end`` marker.  ``replay`` reads the scenario back from the header,
regenerates the inputs from its seed and recomputes the report from the
record lines, so ``replay(run(s)) == run(s)`` byte for byte.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .. import em, reductions
from ..priority.candidates import CandidateFamily
from ..priority.sads import SadsRun, run_sads, verify_sads
from ..priority.sdnr import SdnrRun, run_sdnr, verify_sdnr
from ..priority.sts import StsRun, run_sts, verify_sts
from ..structures import (HashedTournament, SetFamily, Tournament, cohesive_report, is_transitive)
from ..trace import EngineMismatch, PriorityTrace, TraceFormatError
from ..verdicts import FAIL, PASS, UNDETERMINED, Verdict, VerificationReport
from . import generators as gen
from .scenario import Scenario, loads

TRACE_HEADER = "# finjury-trace v1"
END = "# end"
PRIORITY = ("sts", "sads", "sdnr")


class TruncatedTrace(TraceFormatError):
    pass


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    digest: str
    engine: str
    verdicts: list[Verdict]
    counters: dict[str, int]
    wall_time: float | None = field(default=None, compare=False)

    def failures(self, strict: bool = False) -> list[Verdict]:
        bad = {FAIL, UNDETERMINED} if strict else {FAIL}
        return [v for v in self.verdicts if v.status in bad]

    def ok(self, strict: bool = False) -> bool:
        return not self.failures(strict)

    def lines(self) -> list[str]:
        """Machine-readable records; wall time is left out so they replay exactly."""
        out = [f"report | {self.engine} | digest={self.digest}"]
        for v in self.verdicts:
            line = "-" if v.line is None else str(v.line)
            detail = v.detail.replace("|", "/").replace("\n", " ")
            out.append(f"verdict | {v.name} | {v.status} | line={line} | {detail}")
        for k in sorted(self.counters):
            out.append(f"counter | {k} | {self.counters[k]}")
        n = {s: sum(v.status == s for v in self.verdicts) for s in (PASS, FAIL, UNDETERMINED)}
        out.append(f"summary | pass={n[PASS]} fail={n[FAIL]} undetermined={n[UNDETERMINED]}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    @classmethod
    def from_lines(cls, lines: list[str]) -> "RunReport":
        head = [p.strip() for p in lines[0].split("|")]
        if head[0] != "report":
            raise ValueError("report line 1: expected 'report | engine | digest=...'")
        verdicts, counters = [], {}
        for no, ln in enumerate(lines[1:], start=2):
            parts = [p.strip() for p in ln.split("|")]
            if parts[0] == "verdict":
                line = parts[3].split("=", 1)[1]
                verdicts.append(Verdict(parts[1], parts[2], parts[4] if len(parts) > 4 else "",
                                        None if line == "-" else int(line)))
            elif parts[0] == "counter":
                counters[parts[1]] = int(parts[2])
            elif parts[0] != "summary":
                raise ValueError(f"report line {no}: unknown record {parts[0]!r}")
        return cls(head[2].split("=", 1)[1], head[1], verdicts, counters)

    def table(self, strict: bool = False) -> str:
        """Human-readable table."""
        w = max([len(v.name) for v in self.verdicts] + [12])
        rows = [f"engine {self.engine}  scenario {self.digest[:12]}",
                f"{'check':<{w}}  {'status':<12}  {'line':>6}  detail",
                "-" * (w + 40)]
        for v in self.verdicts:
            rows.append(f"{v.name:<{w}}  {v.status:<12}  {'' if v.line is None else v.line:>6}  {v.detail}")
        rows.append("-" * (w + 40))
        rows.append("counters: " + ", ".join(f"{k}={self.counters[k]}" for k in sorted(self.counters)))
        if self.wall_time is not None:
            rows.append(f"wall time: {self.wall_time:.3f} s")
        rows.append(f"overall: {'PASS' if self.ok(strict) else 'FAIL'}{' (strict)' if strict else ''}")
        return "\n".join(rows) + "\n"


def _from_verification(s: Scenario, rep: VerificationReport, offset: int) -> RunReport:
    vs = [Verdict(v.name, v.status, v.detail, None if v.line is None else v.line + offset) for v in rep.verdicts]
    return RunReport(s.digest(), s.engine, vs, dict(rep.counters))


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def candidates(s: Scenario) -> CandidateFamily:
    c = s.params["candidates"]
    rng = gen.rng_for(s.seed)
    H = s.horizon
    if c["kind"] == "windows":
        return gen.window_candidates(rng, c["count"], H, c["window"])
    if c["kind"] == "delta2":
        return gen.delta2_candidates(rng, c["count"], H, c["flips"], c["density"])
    if c["kind"] == "inline":
        return CandidateFamily(H, c["sets"])
    return CandidateFamily(H, [])


def sdnr_inputs(s: Scenario) -> gen.SdnrInputs:
    p = s.params
    if p["script"] != "random":
        return gen.scripted_sdnr(p["script"], s.horizon)
    return gen.random_sdnr(gen.rng_for(s.seed), s.horizon, p["functionals"], p["flips"])


def tournaments(s: Scenario) -> list:
    t = s.params["tournaments"]
    H = s.horizon
    if t["kind"] == "hashed":
        return [HashedTournament(H, s.seed * 1000 + nu) for nu in range(t["count"])]
    if t["kind"] == "random":
        rng = gen.rng_for(s.seed)
        return [Tournament.random(H, rng) for _ in range(t["count"])]
    return [Tournament.transitive(H) for _ in range(t["count"])]


def triple_coloring(s: Scenario) -> reductions.KBoundedColoring:
    return gen.settled_normal_triples(gen.rng_for(s.seed), s.horizon, s.params["twin_frac"])


def family(s: Scenario) -> SetFamily:
    p = s.params
    rng = gen.rng_for(s.seed)
    if p["source"] == "canonical":
        inp = gen.random_sdnr(rng, s.horizon, p["members"])
        return reductions.canonical_cohesive_instance(inp.F, inp.E, s.horizon)
    return gen.random_family(rng, p["members"], s.horizon, p["density"])


# ---------------------------------------------------------------------------
# Engines: scenario -> record lines, and (scenario, record lines) -> report
# ---------------------------------------------------------------------------


def _execute(s: Scenario, sink: list[str]) -> None:
    """Run the engine, appending record lines to ``sink`` as they become final."""
    H = s.horizon
    if s.engine in PRIORITY:
        trace = PriorityTrace(s.engine)
        try:
            if s.engine == "sts":
                run_sts(candidates(s), s.params["colors"], H, trace=trace)
            elif s.engine == "sads":
                run_sads(candidates(s), H, s.params["threshold"], s.params["attention"], trace=trace)
            else:
                inp = sdnr_inputs(s)
                run_sdnr(inp.F, inp.D, inp.E, H, trace=trace)
        finally:
            sink.extend(trace.lines())
    elif s.engine == "em-walk":
        t = s.params["tournaments"]
        r = em.em_walk(tournaments(s), t["arrivals"], H, s.params["target"], s.params["chunk"])
        sink.extend(r.trace)
    elif s.engine == "collapse":
        col = reductions.collapse_triples(triple_coloring(s), range(H))
        for sigma in sorted(col.ftilde):
            tau = col.ftilde[sigma]
            sink.append(f"pair | {sigma[0]},{sigma[1]} | {tau[0]},{tau[1]}")
        sink.append("tail | " + ",".join(map(str, col.tail)))
    else:
        fam = family(s)
        C, eps = reductions.find_cohesive(fam, H)
        sink.append("atom | " + ("".join(map(str, eps)) or "-") + f" | {len(C)}")
        sink.append("set | " + (",".join(map(str, C)) or "-"))


def _check_stages(trace: PriorityTrace, H: int, offset: int) -> None:
    stages = [ev.stage for _, ev in trace.of("ASSIGN")]
    for k, st in enumerate(stages):
        if st != k:
            raise TruncatedTrace(offset + 1, f"stage {k} missing (found stage {st})")
    if len(stages) < H:
        raise TruncatedTrace(offset + len(trace) + 1, f"trace truncated: stage {len(stages)} missing")


def _priority_report(s: Scenario, records: list[str], offset: int) -> RunReport:
    trace = PriorityTrace.from_lines(records, engine=s.engine, first_line_no=offset + 1)
    H = s.horizon
    _check_stages(trace, H, offset)
    if s.engine == "sts":
        Z = candidates(s)
        rep = verify_sts(StsRun.from_trace(trace, s.params["colors"], H, len(Z)), Z)
    elif s.engine == "sads":
        Z = candidates(s)
        r = SadsRun.from_trace(trace, H, len(Z), s.params["threshold"], s.params["attention"])
        rep = verify_sads(r, Z)
    else:
        inp = sdnr_inputs(s)
        rep = verify_sdnr(SdnrRun.from_trace(trace, H, len(inp.F)), inp.F, inp.D, inp.E)
    return _from_verification(s, rep, offset)


def _walk_report(s: Scenario, records: list[str], offset: int) -> RunReport:
    Ts = tournaments(s)
    rep = VerificationReport(s.engine)
    try:
        c = em.replay_walk(Ts, s.horizon, records)
    except em.WalkReplayError as exc:
        raise TraceFormatError(offset + exc.line_no, str(exc)) from None
    G = c.F
    k = len(c.sigma)
    for nu, off in enumerate(c.sigma):
        part = [g for g in G if g > off]
        rep.add(f"G.transitive[{nu}]", is_transitive(Ts[nu], part), f"{len(part)} points past offset {off}")
    bound = em.guaranteed_one_point(s.horizon, k)
    target = s.params["target"]
    if target is not None and len(G) >= target:
        rep.add("G.size", True, f"|G| = {len(G)} reached target {target}")
    else:
        rep.add("G.size", len(G) >= bound, f"|G| = {len(G)}, one-point guarantee {bound}")
    rep.add("condition.valid", bool(em.check_condition(c, Ts)), f"final |X| = {c.X.size}")
    if k < len(Ts):
        rep.add("registered", None, f"{len(Ts) - k} tournaments arrived after the reservoir ran out")
    rep.counters.update(steps=len(records), G=len(G), registered=k)
    return _from_verification(s, rep, offset)


def _collapse_report(s: Scenario, records: list[str], offset: int) -> RunReport:
    f = triple_coloring(s)
    ftilde: dict[tuple[int, int], tuple[int, int]] = {}
    tail: tuple[int, ...] = ()
    for no, ln in enumerate(records, start=offset + 1):
        parts = [p.strip() for p in ln.split("|")]
        try:
            if parts[0] == "pair":
                a, b = map(int, parts[1].split(","))
                c, d = map(int, parts[2].split(","))
                ftilde[(a, b)] = (c, d)
            elif parts[0] == "tail":
                tail = tuple(map(int, parts[1].split(",")))
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (ValueError, IndexError) as exc:
            raise TraceFormatError(no, str(exc)) from None
    if not tail:
        raise TruncatedTrace(offset + len(records) + 1, "trace truncated: tail record missing")
    domain = tuple(sorted({v for p in ftilde for v in p} | {v for v in range(s.horizon) if v < tail[0]}))
    col = reductions.Collapse(domain, tail, ftilde, dict(ftilde))
    rep = VerificationReport(s.engine)
    normal, wit = reductions.is_normal(f)
    rep.add("f.normal", normal, "" if normal else f"collision {wit}")
    rep.add("ftilde.2-bounded", col.bound() <= 2, f"largest preimage {col.bound()}")
    fresh = reductions.collapse_triples(f, range(s.horizon))
    rep.add("ftilde.recomputed", fresh.ftilde == ftilde, f"{len(ftilde)} pairs")
    g = col.as_coloring()
    rng = gen.rng_for(s.seed)
    lifted = 0
    for j in range(s.params["rainbows"]):
        R: list[int] = []
        for i in rng.permutation(len(domain)).tolist():
            if reductions.is_rainbow(g, sorted(R + [i])):
                R.append(i)
        pts = sorted(domain[i] for i in R)
        L = col.lift(f, pts)
        ok = reductions.is_rainbow(f, L)
        lifted += ok
        rep.add(f"lift[{j}]", ok, f"ftilde-rainbow of {len(pts)} lifts to {len(L)} points")
    rep.counters.update(pairs=len(ftilde), twins=sum(v != k for k, v in ftilde.items()), lifted=lifted)
    return _from_verification(s, rep, offset)


def _cohesive_report(s: Scenario, records: list[str], offset: int) -> RunReport:
    fam = family(s)
    try:
        atom = [p.strip() for p in records[0].split("|")]
        pts = [p.strip() for p in records[1].split("|")]
        eps = () if atom[1] == "-" else tuple(int(b) for b in atom[1])
        C = () if pts[1] == "-" else tuple(int(v) for v in pts[1].split(","))
    except (IndexError, ValueError):
        raise TruncatedTrace(offset + len(records) + 1, "cohesive records incomplete") from None
    rep = VerificationReport(s.engine)
    exc = [v.exceptions for v in cohesive_report(C, fam)]
    rep.add("exceptions", all(e == 0 for e in exc), f"{sum(exc)} exceptions over {len(fam)} members")
    # oracle: every sign vector, counted point by point
    m = fam.matrix()
    best = 0
    for sign in itertools.product((0, 1), repeat=len(fam)):
        keep = np.ones(s.horizon, dtype=bool)
        for i, e in enumerate(sign):
            keep &= m[i] if e == 0 else ~m[i]
        best = max(best, int(keep.sum()))
    rep.add("maximum", len(C) == best, f"|C| = {len(C)}, exhaustive maximum {best}, signs {''.join(map(str, eps))}")
    rep.counters.update(members=len(fam), size=len(C))
    return _from_verification(s, rep, offset)


_REPORTERS: dict[str, Callable[[Scenario, list[str], int], RunReport]] = {
    "sts": _priority_report, "sads": _priority_report, "sdnr": _priority_report,
    "em-walk": _walk_report, "collapse": _collapse_report, "cohesive": _cohesive_report,
}


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def _header(s: Scenario) -> list[str]:
    return [TRACE_HEADER, f"# engine: {s.engine}", f"# digest: {s.digest()}"] + \
        ["#> " + ln for ln in s.dumps().splitlines()]


@dataclass
class RunResult:
    scenario: Scenario
    trace_lines: list[str]
    report: RunReport
    trace_path: Path | None = None
    report_path: Path | None = None


def execute(s: Scenario) -> RunResult:
    """Run without touching the disk."""
    t0 = time.perf_counter()
    header = _header(s)
    records: list[str] = []
    _execute(s, records)
    report = _REPORTERS[s.engine](s, records, len(header))
    report.wall_time = time.perf_counter() - t0
    return RunResult(s, header + records + [END], report)


def run(s: Scenario, out: str | Path | None = None) -> RunResult:
    """Run, persist the trace (flushed even when the engine fails) and the report."""
    out = Path(out or ".")
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{s.engine}-{s.digest()[:12]}"
    tpath, rpath = out / f"{stem}.trace", out / f"{stem}.report"
    header = _header(s)
    records: list[str] = []
    t0 = time.perf_counter()
    try:
        _execute(s, records)
    except Exception:
        tpath.write_text("\n".join(header + records) + "\n")
        raise
    tpath.write_text("\n".join(header + records + [END]) + "\n")
    report = _REPORTERS[s.engine](s, records, len(header))
    report.wall_time = time.perf_counter() - t0
    rpath.write_text(report.text())
    return RunResult(s, header + records + [END], report, tpath, rpath)


def parse_trace_file(text: str, engine: str | None = None) -> tuple[Scenario, list[str], int]:
    """``(scenario, record lines, header length)``; raises on a foreign or truncated trace."""
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise TraceFormatError(1, f"expected {TRACE_HEADER!r}")
    n = 1
    while n < len(lines) and lines[n].startswith("#") and lines[n] != END:
        n += 1
    scen = "\n".join(ln[3:] for ln in lines[1:n] if ln.startswith("#> "))
    s = loads(scen)
    declared = next((ln.split(":", 1)[1].strip() for ln in lines[1:n] if ln.startswith("# engine:")), None)
    if declared != s.engine:
        raise EngineMismatch(f"trace header declares engine {declared!r}, scenario says {s.engine!r}")
    if engine is not None and s.engine != engine:
        raise EngineMismatch(f"trace is from engine {s.engine!r}, expected {engine!r}")
    body = lines[n:]
    if not body or body[-1] != END:
        records = body
        _REPORTERS[s.engine](s, records, n)  # names the first missing stage when it can
        raise TruncatedTrace(len(lines) + 1, "trace truncated: end marker missing")
    return s, body[:-1], n


def replay_text(text: str, engine: str | None = None) -> RunReport:
    s, records, n = parse_trace_file(text, engine)
    return _REPORTERS[s.engine](s, records, n)


def replay(path: str | Path, engine: str | None = None) -> RunReport:
    return replay_text(Path(path).read_text(), engine)
