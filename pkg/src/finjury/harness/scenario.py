"""Scenario files: a versioned header line followed by a YAML mapping.

::

    # finjury-scenario v1
    engine: sts
    horizon: 10000
    seed: 7
    params:
      colors: 4
      candidates: {kind: windows, count: 8, window: 64}

Missing parameters take the defaults below; the digest is taken over the
filled-in scenario, so a saved and reloaded scenario keeps its digest.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

HEADER = "# finjury-scenario v1"
ENGINES = ("sts", "sads", "sdnr", "em-walk", "collapse", "cohesive")


class SchemaError(ValueError):
    def __init__(self, field_name: str, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field_name}: {message}")
        self.field = field_name
        self.line = line


_CANDIDATES = {"kind": (("windows", "delta2", "empty", "inline"), "windows"), "count": (int, 4),
               "window": (int, 64), "flips": (int, 3), "density": (float, 0.05), "sets": (list, [])}
_TOURNAMENTS = {"kind": (("hashed", "random", "transitive"), "hashed"), "count": (int, 2),
                "arrivals": (list, None)}

# engine -> param -> (type or choices, default)
SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "sts": {"colors": (int, 4),
            "candidates": (_CANDIDATES, {"kind": "windows", "count": 8, "window": 64})},
    "sads": {"threshold": (("le", "lt"), "le"), "attention": (("bounded", "global"), "bounded"),
             "candidates": (_CANDIDATES, {"kind": "delta2", "count": 4, "flips": 3})},
    "sdnr": {"script": (("random", "empty", "constant7", "cascade"), "random"),
             "functionals": (int, 4), "flips": (int, 2)},
    "em-walk": {"tournaments": (_TOURNAMENTS, {}),
                "chunk": (int, 64), "target": (int, None)},
    "collapse": {"twin_frac": (float, 0.3), "rainbows": (int, 8)},
    "cohesive": {"source": (("random", "canonical"), "random"), "members": (int, 8),
                 "density": (float, 0.5)},
}


@dataclass
class Scenario:
    engine: str
    horizon: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    source: Path | None = None

    def canonical(self) -> dict[str, Any]:
        return {"engine": self.engine, "horizon": self.horizon, "seed": self.seed, "params": self.params}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def dumps(self) -> str:
        body = yaml.safe_dump(self.canonical(), sort_keys=False, default_flow_style=None)
        return HEADER + "\n" + body

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def with_overrides(self, seed: int | None = None, horizon: int | None = None) -> "Scenario":
        s = copy.deepcopy(self)
        if seed is not None:
            s.seed = int(seed)
        if horizon is not None:
            s.horizon = int(horizon)
        _check_ranges(s, {})
        return s


def _lines(node: yaml.Node, prefix: str = "") -> dict[str, int]:
    """Dotted key path -> 1-based source line, for mapping nodes."""
    out: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}{k.value}"
            out[path] = k.start_mark.line + 1
            out.update(_lines(v, path + "."))
    return out


def _typed(value: Any, kind: Any, name: str, line: int | None) -> Any:
    if isinstance(kind, tuple):
        if value not in kind:
            raise SchemaError(name, f"must be one of {', '.join(map(str, kind))}, got {value!r}", line)
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(name, f"expected an integer, got {value!r}", line)
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(name, f"expected a number, got {value!r}", line)
        return float(value)
    if kind is list:
        if not isinstance(value, list):
            raise SchemaError(name, f"expected a list, got {value!r}", line)
        return value
    raise AssertionError(kind)


def _fill(params: dict, schema: dict, where: str, lines: dict[str, int], line0: int | None) -> dict:
    out = {}
    for key in params:
        if key not in schema:
            raise SchemaError(f"{where}.{key}", "unknown parameter", lines.get(f"{where}.{key}", line0))
    for key, (kind, default) in schema.items():
        name = f"{where}.{key}"
        line = lines.get(name, line0)
        if key not in params or params[key] is None:
            out[key] = _fill(default, kind, name, lines, line) if isinstance(kind, dict) \
                else copy.deepcopy(default)
            continue
        value = params[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise SchemaError(name, "expected a mapping", line)
            out[key] = _fill(value, kind, name, lines, line)
        else:
            out[key] = _typed(value, kind, name, line)
    return out


def _check_ranges(s: Scenario, lines: dict[str, int]) -> None:
    if s.horizon < 1:
        raise SchemaError("horizon", "must be >= 1", lines.get("horizon"))
    p = s.params
    cand = p.get("candidates")
    if cand is not None:
        if cand["kind"] == "inline":
            for i, zs in enumerate(cand["sets"]):
                if not isinstance(zs, list) or any(not isinstance(a, int) or not 0 <= a < s.horizon for a in zs):
                    raise SchemaError(f"params.candidates.sets[{i}]", f"expected points in [0, {s.horizon})",
                                      lines.get("params.candidates.sets"))
    if s.engine == "em-walk":
        t = p["tournaments"]
        if t["arrivals"] is None:
            t["arrivals"] = [0] * t["count"]
        if len(t["arrivals"]) != t["count"] or sorted(t["arrivals"]) != t["arrivals"]:
            raise SchemaError("params.tournaments.arrivals", "need one nondecreasing step per tournament",
                              lines.get("params.tournaments.arrivals"))
    if s.engine == "cohesive" and not 0 <= p["members"] <= 20:
        raise SchemaError("params.members", "family size must lie in [0, 20]", lines.get("params.members"))


def loads(text: str, source: Path | None = None) -> Scenario:
    first = text.splitlines()[0].strip() if text.strip() else ""
    if first != HEADER:
        raise SchemaError("header", f"first line must be {HEADER!r}", 1)
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SchemaError("yaml", str(exc).splitlines()[0], mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise SchemaError("scenario", "expected a mapping", 2)
    lines = _lines(node)
    for key in data:
        if key not in ("engine", "horizon", "seed", "params"):
            raise SchemaError(str(key), "unknown field", lines.get(str(key)))
    for key in ("engine", "horizon"):
        if key not in data:
            raise SchemaError(key, "missing required field", None)
    engine = _typed(data["engine"], ENGINES, "engine", lines.get("engine"))
    horizon = _typed(data["horizon"], int, "horizon", lines.get("horizon"))
    seed = _typed(data.get("seed", 0), int, "seed", lines.get("seed"))
    raw = data.get("params") or {}
    if not isinstance(raw, dict):
        raise SchemaError("params", "expected a mapping", lines.get("params"))
    params = _fill(raw, SCHEMA[engine], "params", lines, lines.get("params"))
    s = Scenario(engine, horizon, seed, params, source)
    _check_ranges(s, lines)
    return s


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return loads(path.read_text(), path)


def default_scenario(engine: str, seed: int = 0, horizon: int | None = None) -> Scenario:
    horizons = {"sts": 10_000, "sads": 1500, "sdnr": 60, "em-walk": 65536, "collapse": 16, "cohesive": 512}
    if engine not in ENGINES:
        raise SchemaError("engine", f"must be one of {', '.join(ENGINES)}")
    H = horizons[engine] if horizon is None else horizon
    return loads(f"{HEADER}\nengine: {engine}\nhorizon: {H}\nseed: {seed}\n")
