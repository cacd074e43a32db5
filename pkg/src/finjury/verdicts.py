"""Verdict records shared by every verifier."""
from __future__ import annotations

from dataclasses import dataclass, field

PASS, FAIL, UNDETERMINED = "pass", "fail", "undetermined"


@dataclass(frozen=True)
class Verdict:
    name: str
    status: str
    detail: str = ""
    line: int | None = None  # trace line the verdict rests on

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class VerificationReport:
    engine: str
    verdicts: list[Verdict] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def add(self, name: str, ok: bool | None, detail: str = "", line: int | None = None) -> Verdict:
        status = UNDETERMINED if ok is None else (PASS if ok else FAIL)
        v = Verdict(name, status, detail, line)
        self.verdicts.append(v)
        return v

    def failures(self, strict: bool = False) -> list[Verdict]:
        bad = {FAIL, UNDETERMINED} if strict else {FAIL}
        return [v for v in self.verdicts if v.status in bad]

    def ok(self, strict: bool = False) -> bool:
        return not self.failures(strict)

    def by_name(self, prefix: str) -> list[Verdict]:
        return [v for v in self.verdicts if v.name.startswith(prefix)]
