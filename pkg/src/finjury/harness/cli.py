"""Command line entry point: ``finjury run|replay|verify|gen|report``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..reductions import KBoundedColoring
from ..trace import EngineMismatch, TraceFormatError
from . import generators as gen
from .runner import RunReport, replay, run
from .scenario import ENGINES, SchemaError, default_scenario, load_scenario

DATA_KINDS = ("tournament", "stable-tournament", "two-bounded", "rainbow-stable", "approx", "order")


def _gen_data(kind: str, seed: int, H: int) -> str:
    rng = gen.rng_for(seed)
    if kind == "tournament":
        from ..structures import Tournament
        return Tournament.random(H, rng).to_text()
    if kind == "stable-tournament":
        st = gen.stable_tournament(rng, H)
        plan = "".join(f"# plan {x} side={s} settle={t}\n" for x, (s, t) in enumerate(zip(st.side, st.settle)))
        return plan + st.tournament.to_text()
    if kind == "two-bounded":
        return gen.two_bounded(rng, H, arity=3 if H <= 40 else 2).to_text()
    if kind == "rainbow-stable":
        rs = gen.rainbow_stable(rng, H)
        plan = "".join(f"# partner {x} {y}\n" for x, y in sorted(rs.partner.items()))
        return plan + rs.coloring.to_text()
    if kind == "approx":
        return gen.random_approx(rng, H).to_text()
    order = gen.omega_plus_omega_star(rng, H)
    return "order " + " ".join(map(str, order.sequence())) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--horizon", type=int, help="override the scenario horizon")
    common.add_argument("--out", help="output directory (run) or file (gen, replay)")
    common.add_argument("--strict", action="store_true", help="count undetermined verdicts as failures")

    ap = argparse.ArgumentParser(prog="finjury", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("run", parents=[common], help="run a scenario, persist trace and report")
    p.add_argument("scenario", help="scenario file, or an engine name for its default scenario")
    p = sub.add_parser("replay", parents=[common], help="rebuild the report from a trace file")
    p.add_argument("trace")
    p.add_argument("--engine", choices=ENGINES)
    p = sub.add_parser("verify", parents=[common], help="replay a trace and compare with a stored report")
    p.add_argument("trace")
    p.add_argument("report")
    p = sub.add_parser("gen", parents=[common], help="write a default scenario or generated input data")
    p.add_argument("kind", choices=ENGINES + DATA_KINDS)
    p = sub.add_parser("report", parents=[common], help="render a stored report as a table")
    p.add_argument("report")
    args = ap.parse_args(argv)

    try:
        if args.verb == "run":
            if args.scenario in ENGINES and not Path(args.scenario).exists():
                s = default_scenario(args.scenario)
            else:
                s = load_scenario(args.scenario)
            s = s.with_overrides(args.seed, args.horizon)
            res = run(s, args.out)
            sys.stdout.write(res.report.table(args.strict))
            print(f"trace:  {res.trace_path}\nreport: {res.report_path}")
            return 0 if res.report.ok(args.strict) else 1
        if args.verb == "replay":
            rep = replay(args.trace, args.engine)
            if args.out:
                Path(args.out).write_text(rep.text())
            sys.stdout.write(rep.table(args.strict))
            return 0 if rep.ok(args.strict) else 1
        if args.verb == "verify":
            rep = replay(args.trace)
            stored = Path(args.report).read_text()
            same = rep.text() == stored
            sys.stdout.write(rep.table(args.strict))
            print("replay matches stored report" if same else "replay DIFFERS from stored report")
            return 0 if same and rep.ok(args.strict) else 1
        if args.verb == "gen":
            seed = args.seed or 0
            if args.kind in ENGINES:
                _emit(default_scenario(args.kind, seed, args.horizon).dumps(), args.out)
            else:
                _emit(_gen_data(args.kind, seed, args.horizon or 32), args.out)
            return 0
        rep = RunReport.from_lines(Path(args.report).read_text().splitlines())
        sys.stdout.write(rep.table(args.strict))
        return 0 if rep.ok(args.strict) else 1
    except (SchemaError, TraceFormatError, EngineMismatch, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
