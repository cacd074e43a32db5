import pytest

from finjury.harness.cli import main
from finjury.harness.runner import (RunReport, TruncatedTrace, execute, parse_trace_file, replay,
                                    replay_text, run)
from finjury.harness.scenario import ENGINES, HEADER, SchemaError, default_scenario, loads
from finjury.trace import EngineMismatch, TraceFormatError

SMALL = {"sts": 600, "sads": 200, "sdnr": 40, "em-walk": 2048, "collapse": 12, "cohesive": 128}


def small(engine, seed=0):
    return default_scenario(engine, seed, SMALL[engine])


def scenario_text(body):
    return HEADER + "\n" + body


@pytest.mark.parametrize("body, field, line", [
    ("engine: sts\nhorizon: 100\nparams:\n  colours: 3\n", "params.colours", 5),
    ("engine: sts\nhorizon: 100\nparams:\n  colors: three\n", "params.colors", 5),
    ("engine: sads\nhorizon: 100\nparams:\n  threshold: ge\n", "params.threshold", 5),
    ("engine: nope\nhorizon: 100\n", "engine", 2),
    ("engine: sts\nhorizon: 0\n", "horizon", 3),
    ("engine: sts\nhorizon: 10\nwhen: now\n", "when", 4),
    ("engine: em-walk\nhorizon: 64\nparams:\n  tournaments:\n    count: 2\n    arrivals: [3, 1]\n",
     "params.tournaments.arrivals", 7),
    ("engine: sts\nhorizon: 20\nparams:\n  candidates: {kind: inline, sets: [[1, 40]]}\n",
     "params.candidates.sets[0]", 5),
])
def test_schema_errors_name_field_and_line(body, field, line):
    with pytest.raises(SchemaError) as exc:
        loads(scenario_text(body))
    assert exc.value.field == field
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_missing_header_and_required_field():
    with pytest.raises(SchemaError, match="header"):
        loads("engine: sts\nhorizon: 5\n")
    with pytest.raises(SchemaError, match="horizon"):
        loads(scenario_text("engine: sts\n"))


def test_defaults_fill_and_digest_round_trip():
    s = loads(scenario_text("engine: sts\nhorizon: 100\nseed: 3\n"))
    assert s.params["colors"] == 4 and s.params["candidates"]["kind"] == "windows"
    again = loads(s.dumps())
    assert again.digest() == s.digest() and again.canonical() == s.canonical()
    assert s.with_overrides(seed=4).digest() != s.digest()
    for e in ENGINES:
        d = default_scenario(e)
        assert loads(d.dumps()).digest() == d.digest()


@pytest.mark.parametrize("engine", ENGINES)
def test_run_twice_is_byte_identical_and_replays(engine, tmp_path):
    s = small(engine, seed=5)
    a = run(s, tmp_path / "a")
    b = run(s, tmp_path / "b")
    assert a.trace_path.read_bytes() == b.trace_path.read_bytes()
    assert a.report_path.read_bytes() == b.report_path.read_bytes()
    rep = replay(a.trace_path)
    assert rep.text() == a.report_path.read_text()
    assert RunReport.from_lines(a.report_path.read_text().splitlines()).text() == rep.text()


def test_verdict_lines_point_into_the_trace(tmp_path):
    res = run(small("sts"), tmp_path)
    lines = res.trace_path.read_text().splitlines()
    for v in res.report.verdicts:
        if v.line is not None:
            assert not lines[v.line - 1].startswith("#")


def test_truncated_trace_is_rejected(tmp_path):
    res = run(small("sads"), tmp_path)
    lines = res.trace_path.read_text().splitlines()
    with pytest.raises(TruncatedTrace):
        replay_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(TraceFormatError, match="stage"):
        replay_text("\n".join(lines[: len(lines) // 2]) + "\n")


def test_engine_mismatch(tmp_path):
    res = run(small("sdnr"), tmp_path)
    with pytest.raises(EngineMismatch):
        replay(res.trace_path, engine="sts")
    text = res.trace_path.read_text().replace("# engine: sdnr", "# engine: sts")
    with pytest.raises(EngineMismatch):
        parse_trace_file(text)
    with pytest.raises(TraceFormatError):
        replay_text("not a trace\n")


def test_tampered_walk_record_is_caught(tmp_path):
    res = run(small("em-walk"), tmp_path)
    lines = res.trace_path.read_text().splitlines()
    i = next(k for k, ln in enumerate(lines) if "block" in ln)
    parts = lines[i].split(" | ")
    parts[-1] = "".join("1" if c == "0" else "0" for c in parts[-1])
    lines[i] = " | ".join(parts)
    with pytest.raises(TraceFormatError, match=f"trace line {i + 1}"):
        replay_text("\n".join(lines) + "\n")


def test_execute_matches_run(tmp_path):
    s = small("collapse", seed=2)
    assert execute(s).report.text() == run(s, tmp_path).report.text()


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "runs"
    assert main(["run", "sts", "--horizon", "600", "--out", str(out)]) == 0
    trace = next(out.glob("sts-*.trace"))
    report = next(out.glob("sts-*.report"))
    assert main(["verify", str(trace), str(report)]) == 0
    assert main(["replay", str(trace)]) == 0
    assert main(["report", str(report)]) == 0
    report.write_text(report.read_text().replace("counter | activations", "counter | activationz"))
    assert main(["verify", str(trace), str(report)]) == 1
    assert main(["replay", str(tmp_path / "missing.trace")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text(scenario_text("engine: sts\nhorizon: -1\n"))
    assert main(["run", str(bad), "--out", str(out)]) == 2
    assert "horizon" in capsys.readouterr().err
    cascade = tmp_path / "cascade.yaml"
    cascade.write_text(scenario_text("engine: sdnr\nhorizon: 24\nparams:\n  script: cascade\n"))
    assert main(["run", str(cascade), "--out", str(out)]) == 1


def test_strict_flag_counts_undetermined(tmp_path):
    s = tmp_path / "s.yaml"
    s.write_text(scenario_text("engine: sdnr\nhorizon: 24\nparams:\n  script: empty\n"))
    assert main(["run", str(s), "--out", str(tmp_path)]) == 0
    s.write_text(scenario_text("engine: sads\nhorizon: 40\nparams:\n"
                               "  candidates: {kind: inline, sets: [[3, 4]]}\n"))
    assert main(["run", str(s), "--out", str(tmp_path)]) == 0
    assert main(["run", str(s), "--out", str(tmp_path), "--strict"]) == 1


@pytest.mark.parametrize("kind", ["sts", "tournament", "stable-tournament", "two-bounded",
                                  "rainbow-stable", "approx", "order"])
def test_gen_is_deterministic(kind, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen", kind, "--seed", "9", "--horizon", "12", "--out", str(a)]) == 0
    assert main(["gen", kind, "--seed", "9", "--horizon", "12", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes() and a.read_text()
    assert main(["gen", kind, "--seed", "9", "--horizon", "12"]) == 0
    assert capsys.readouterr().out == a.read_text()
