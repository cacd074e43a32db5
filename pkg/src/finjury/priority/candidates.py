from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ..limits import Delta2Approx
from ..structures import RangeError


def cantor_pair(e: int, i: int) -> int:
    return (e + i) * (e + i + 1) // 2 + i


class CandidateFamily:
    """Candidate sets ``Z_0 .. Z_{n-1}``: static vertex sets or 0/1 approximations."""

    def __init__(self, horizon: int, candidates: Sequence[Iterable[int] | Delta2Approx]):
        self.horizon = int(horizon)
        self.candidates: list[frozenset | Delta2Approx] = []
        for e, z in enumerate(candidates):
            if isinstance(z, Delta2Approx):
                bad = [v for _, _, v in z.events() if v not in (0, 1)]
                if bad:
                    raise ValueError(f"candidate {e}: membership values must be 0/1")
                self.candidates.append(z)
            else:
                zs = frozenset(int(a) for a in z)
                if zs and (min(zs) < 0 or max(zs) >= self.horizon):
                    raise RangeError(f"candidate {e} not inside [0, {self.horizon})")
                self.candidates.append(zs)

    def __len__(self) -> int:
        return len(self.candidates)

    def is_static(self, e: int) -> bool:
        return not isinstance(self.candidates[e], Delta2Approx)

    def member(self, e: int, a: int, s: int) -> bool:
        z = self.candidates[e]
        if isinstance(z, Delta2Approx):
            return z.value_at(a, min(s, z.horizon - 1)) == 1
        return a in z

    def initial_membership(self) -> np.ndarray:
        """``(n, H)`` 0/1 array of membership before any stage-indexed event."""
        m = np.zeros((len(self), self.horizon), dtype=bool)
        for e, z in enumerate(self.candidates):
            if not isinstance(z, Delta2Approx) and z:
                m[e, sorted(z)] = True
        return m

    def events_by_stage(self) -> dict[int, list[tuple[int, int, bool]]]:
        """``stage -> [(e, point, member), ...]`` for every approximation event."""
        out: dict[int, list[tuple[int, int, bool]]] = {}
        for e, z in enumerate(self.candidates):
            if isinstance(z, Delta2Approx):
                for a, s, v in z.events():
                    if a < self.horizon:
                        out.setdefault(s, []).append((e, a, v == 1))
        for s in out:
            out[s].sort()
        return out

    def membership_at(self, s: int) -> np.ndarray:
        """Membership of every point ``< H`` in every candidate as of stage ``s``."""
        m = self.initial_membership()
        for e, z in enumerate(self.candidates):
            if isinstance(z, Delta2Approx):
                for a in z.points:
                    if a < self.horizon:
                        m[e, a] = z.value_at(a, min(s, z.horizon - 1)) == 1
        return m

    def final_membership(self) -> np.ndarray:
        return self.membership_at(self.horizon - 1)
