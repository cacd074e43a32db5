"""Finite tables standing in for oracle Turing functionals.

A table maps an input ``a`` to a list of ``(prefix, value)`` pairs: the
functional converges to ``value`` on any oracle extending ``prefix`` and its
use is ``len(prefix)``.
"""
from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

Oracle = Callable[[int], int]


class InconsistentTable(ValueError):
    pass


class UseViolation(ValueError):
    pass


def _prefix_order(entry: tuple[str, int]) -> tuple[int, str]:
    return len(entry[0]), entry[0]


class FunctionalTable:
    def __init__(self, entries: Mapping[int, Iterable[tuple[str, int]]] | None = None,
                 validate: bool = True):
        self.entries: dict[int, tuple[tuple[str, int], ...]] = {}
        for a, lst in (entries or {}).items():
            self.entries[int(a)] = tuple(sorted(((str(p), int(v)) for p, v in lst), key=_prefix_order))
        if validate:
            self.validate()

    def validate(self) -> None:
        for a, lst in self.entries.items():
            for p, v in lst:
                if p.strip("01"):
                    raise ValueError(f"input {a}: prefix {p!r} is not a bit string")
                if len(p) < a:
                    raise UseViolation(f"input {a}: use {len(p)} below the input")
            for i, (p, v) in enumerate(lst):
                for q, w in lst[i + 1:]:
                    if q.startswith(p) and v != w:
                        raise InconsistentTable(
                            f"input {a}: prefix {p!r} -> {v} but its extension {q!r} -> {w}")

    def inputs(self) -> list[int]:
        return sorted(self.entries)

    def apply(self, a: int, oracle: Oracle, limit: int | None = None) -> tuple[int, int] | None:
        """``(value, use)`` of the least matching prefix of length ``<= limit``, or None.

        Prefixes are ordered by length, then lexicographically.
        """
        for p, v in self.entries.get(a, ()):
            if limit is not None and len(p) > limit:
                break
            if all(oracle(j) == int(b) for j, b in enumerate(p)):
                return v, len(p)
        return None

    def apply_bits(self, a: int, bits: str, limit: int | None = None) -> tuple[int, int] | None:
        """Same as :meth:`apply` with the oracle given as a ``'0'/'1'`` string.

        Positions past the end of ``bits`` read as 0.
        """
        for p, v in self.entries.get(a, ()):
            if limit is not None and len(p) > limit:
                break
            if len(p) > len(bits):
                if p.startswith(bits) and not p[len(bits):].strip("0"):
                    return v, len(p)
            elif bits.startswith(p):
                return v, len(p)
        return None

    def to_text(self) -> str:
        lines = ["functional"]
        for a in self.inputs():
            for p, v in self.entries[a]:
                lines.append(f"{a} {p or '-'} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FunctionalTable":
        entries: dict[int, list[tuple[str, int]]] = {}
        for i, ln in enumerate(text.splitlines(), start=1):
            ln = ln.strip()
            if not ln or ln.startswith("#") or ln == "functional":
                continue
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"line {i}: expected 'input prefix value'")
            a, p, v = parts
            entries.setdefault(int(a), []).append(("" if p == "-" else p, int(v)))
        return cls(entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FunctionalTable) and self.entries == other.entries


def bits_oracle(bits: Sequence[int] | str) -> Oracle:
    """Oracle reading a finite bit string; positions past its end read as 0."""
    vals = [int(b) for b in bits]
    return lambda j: vals[j] if j < len(vals) else 0
