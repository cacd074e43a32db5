"""Conditions ``(sigma, F, X)`` for building a set transitive in many tournaments.

For tournament ``T_nu`` only the part of ``F`` above ``sigma[nu]`` counts: the
pair ``(F \\ [0, sigma[nu]], X)`` must be an EM condition, i.e. every reservoir
point extends that core transitively and the whole reservoir lies in one
minimal interval of it.  Extensions move reservoir points into ``F`` and keep
the largest block of the reservoir on which every registered tournament
behaves the same way against the new points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .structures import (BaseTournament, CapExceeded, Tournament, chain_order, find_3cycle,
                         greedy_common_transitive, is_transitive, max_common_transitive)

EXACT_CAP = 20


class ReservoirExhausted(ValueError):
    pass


class WalkReplayError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"walk line {line_no}: {message}")
        self.line_no = line_no


class EMCondition:
    """``sigma``: one offset per registered tournament; ``F`` below every point of ``X``."""

    def __init__(self, sigma: Iterable[int], F: Iterable[int], X: Iterable[int] | np.ndarray):
        self.sigma = tuple(int(v) for v in sigma)
        self.F = tuple(sorted(set(int(v) for v in F)))
        X = np.unique(np.asarray(X if isinstance(X, np.ndarray) else list(X), dtype=np.int64))
        X.setflags(write=False)
        self.X = X
        if self.F and X.size and X[0] <= self.F[-1]:
            raise ValueError(f"reservoir not above F: min X = {X[0]} <= max F = {self.F[-1]}")

    @classmethod
    def fresh(cls, n: int) -> "EMCondition":
        return cls((), (), np.arange(n, dtype=np.int64))

    def core(self, nu: int) -> tuple[int, ...]:
        """``F \\ [0, sigma[nu]]``."""
        return tuple(f for f in self.F if f > self.sigma[nu])

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, EMCondition) and self.sigma == other.sigma
                and self.F == other.F and np.array_equal(self.X, other.X))

    def __repr__(self) -> str:
        return f"EMCondition(sigma={list(self.sigma)}, F={list(self.F)}, |X|={self.X.size})"


@dataclass(frozen=True)
class ConditionCheck:
    ok: bool
    nu: int | None = None
    kind: str = ""  # "core-cycle", "cycle" or "interval"
    witness: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _behaviour(T: BaseTournament, chain: Sequence[int], X: np.ndarray) -> np.ndarray:
    """``M[i, j] = T(chain[i], X[j])``."""
    if not chain:
        return np.zeros((0, X.size), dtype=bool)
    return np.stack([T.beats_many(c, X) for c in chain])


def check_condition(c: EMCondition, Ts: Sequence[BaseTournament]) -> ConditionCheck:
    """Check the EM-condition invariants for every registered tournament.

    With the core ordered from its top, ``x`` extends it transitively iff
    ``x`` is beaten by a prefix of the chain and beats the rest; the prefix
    length is the minimal interval holding ``x``.
    """
    if len(c.sigma) > len(Ts):
        raise ValueError(f"{len(c.sigma)} offsets but only {len(Ts)} tournaments")
    for nu in range(len(c.sigma)):
        T = Ts[nu]
        core = c.core(nu)
        cyc = find_3cycle(T, core) if len(core) >= 3 else None
        if cyc is not None:
            return ConditionCheck(False, nu, "core-cycle", cyc)
        if not c.X.size or not core:
            continue
        chain = chain_order(T, core)
        M = _behaviour(T, chain, c.X)
        p = M.sum(axis=0)
        expect = np.arange(len(chain))[:, None] < p[None, :]
        bad = np.flatnonzero((M != expect).any(axis=0))
        if bad.size:
            j = int(bad[0])
            col = M[:, j]
            i = int(np.flatnonzero(~col)[0])
            k = i + 1 + int(np.flatnonzero(col[i + 1:])[0])
            # chain[i] -> chain[k] -> x -> chain[i]
            return ConditionCheck(False, nu, "cycle", (chain[i], chain[k], int(c.X[j])))
        split = np.flatnonzero(p != p[0])
        if split.size:
            return ConditionCheck(False, nu, "interval", (int(c.X[0]), int(c.X[split[0]])))
    return ConditionCheck(True)


def verify_beats(c: EMCondition, Ts: Sequence[BaseTournament]) -> bool:
    """Every core point beats the whole reservoir or is beaten by all of it."""
    chk = check_condition(c, Ts)
    if not chk:
        raise ValueError(f"invalid condition: {chk}")
    for nu in range(len(c.sigma)):
        for x in c.core(nu):
            row = Ts[nu].beats_many(x, c.X)
            if row.size and not (row.all() or not row.any()):
                return False
    return True


def register_tournament(c: EMCondition, Ts: Sequence[BaseTournament] | None = None) -> EMCondition:
    """Append an offset ``min X``: the new tournament sees an empty core."""
    if not c.X.size:
        raise ReservoirExhausted("cannot register a tournament on an empty reservoir")
    if Ts is not None and len(c.sigma) >= len(Ts):
        raise ValueError("no tournament left to register")
    return EMCondition(c.sigma + (int(c.X[0]),), c.F, c.X)


def _codes(bits: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic rank keys for a boolean matrix (one row per point)."""
    if bits.shape[1] == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    packed = np.packbits(bits, axis=1, bitorder="big")
    _, inv = np.unique(packed, axis=0, return_inverse=True)
    return inv.reshape(-1)


def _largest_class(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mask of the largest class of equal rows (lex-least row on ties) and that row."""
    codes = _codes(bits)
    counts = np.bincount(codes)
    best = int(np.argmax(counts))
    mask = codes == best
    row = bits[int(np.flatnonzero(mask)[0])] if mask.any() else np.zeros(bits.shape[1], dtype=bool)
    return mask, row


def one_point_split(c: EMCondition, Ts: Sequence[BaseTournament], min_keep: int = 1
                    ) -> tuple[EMCondition, tuple[int, ...]]:
    """``x = min X`` joins ``F``; the reservoir keeps the largest class of ``rho``.

    ``rho[nu] = 1`` iff ``T_nu(x, s)``.  Returns the extension and the chosen ``rho``.
    """
    if c.X.size <= 1:
        raise ValueError("one-point extension needs |X| > 1")
    x = int(c.X[0])
    rest = c.X[1:]
    k = len(c.sigma)
    bits = np.stack([Ts[nu].beats_many(x, rest) for nu in range(k)], axis=1) if k \
        else np.zeros((rest.size, 0), dtype=bool)
    mask, rho = _largest_class(bits)
    Y = rest[mask]
    if Y.size < max(min_keep, 1):
        raise ReservoirExhausted(f"largest class has {Y.size} < {max(min_keep, 1)} points")
    return EMCondition(c.sigma, c.F + (x,), Y), tuple(int(b) for b in rho)


def one_point_extend(c: EMCondition, Ts: Sequence[BaseTournament], min_keep: int = 1) -> EMCondition:
    return one_point_split(c, Ts, min_keep)[0]


def _common_transitive(Ts: Sequence[BaseTournament], vertices: Sequence[int], cap: int) -> tuple[int, ...]:
    if len(vertices) <= cap:
        try:
            return max_common_transitive(Ts, vertices, cap)
        except CapExceeded:
            pass
    return greedy_common_transitive(Ts, vertices)


@dataclass
class BlockSplit:
    """Partition of a block ``E`` against the reservoir kept after it.

    ``classes[rho]`` is ``E_rho``: for ``rho[nu] = 0`` it beats every point of
    ``Y`` in ``T_nu``, for ``rho[nu] = 1`` every point of ``Y`` beats it.
    """

    condition: EMCondition
    Ts: Sequence[BaseTournament] = field(repr=False)
    E: tuple[int, ...]
    classes: dict[tuple[int, ...], tuple[int, ...]]
    Y: np.ndarray = field(repr=False)

    def extend(self, F1: Iterable[int]) -> EMCondition:
        F1 = tuple(sorted(set(int(v) for v in F1)))
        if F1:
            home = [rho for rho, part in self.classes.items() if set(F1) <= set(part)]
            if not home:
                raise ValueError(f"{F1} is not inside one class of the partition")
            k = len(self.condition.sigma)
            for nu in range(k):
                if not is_transitive(self.Ts[nu], F1):
                    raise ValueError(f"{F1} is not transitive in tournament {nu}")
        c = self.condition
        return EMCondition(c.sigma, c.F + F1, self.Y)

    def best_extension(self, cap: int = EXACT_CAP) -> tuple[tuple[int, ...], tuple[int, ...], EMCondition]:
        """``(rho, F1, extension)`` with the largest common transitive ``F1`` over all classes.

        Exact search for classes of at most ``cap`` points, greedy above; ties
        go to the lexicographically least ``rho``.
        """
        Ts = self.Ts[:len(self.condition.sigma)]
        best_rho: tuple[int, ...] = ()
        best_F1: tuple[int, ...] = ()
        for rho in sorted(self.classes):
            F1 = _common_transitive(Ts, self.classes[rho], cap)
            if len(F1) > len(best_F1):
                best_rho, best_F1 = rho, F1
        return best_rho, best_F1, self.extend(best_F1)


def _block_bits(Ts: Sequence[BaseTournament], k: int, E: Sequence[int], Y: np.ndarray) -> np.ndarray:
    """``bits[y, a*k + nu] = T_nu(a, y)`` for every ``a`` in ``E``."""
    cols = [Ts[nu].beats_many(a, Y) for a in E for nu in range(k)]
    return np.stack(cols, axis=1) if cols else np.zeros((Y.size, 0), dtype=bool)


def _split_from_bits(c: EMCondition, Ts, E: tuple[int, ...], Y: np.ndarray, bits: np.ndarray) -> BlockSplit:
    k = len(c.sigma)
    mask, key = _largest_class(bits)
    Ysel = Y[mask]
    if not Ysel.size:
        raise ReservoirExhausted(f"no reservoir left above block ending at {E[-1] if E else '-'}")
    classes: dict[tuple[int, ...], list[int]] = {}
    for i, a in enumerate(E):
        rho = tuple(0 if key[i * k + nu] else 1 for nu in range(k))
        classes.setdefault(rho, []).append(a)
    return BlockSplit(c, Ts, E, {r: tuple(v) for r, v in classes.items()}, Ysel)


def block_extend(c: EMCondition, Ts: Sequence[BaseTournament], E: Iterable[int]) -> BlockSplit:
    """Partition ``E`` by how each reservoir point above it sees it; keep the largest preimage.

    Reservoir points are grouped by the bits ``T_nu(a, y)`` (``a`` in ``E``);
    ties go to the lexicographically least bit vector, the convention of
    :func:`one_point_split`.
    """
    E = tuple(sorted(set(int(v) for v in E)))
    Xs = set(c.X.tolist()) if len(E) else set()
    if any(a not in Xs for a in E):
        raise ValueError("block must lie inside the reservoir")
    Y = c.X[c.X > E[-1]] if E else c.X
    k = len(c.sigma)
    return _split_from_bits(c, Ts, E, Y, _block_bits(Ts, k, E, Y))


# ---------------------------------------------------------------------------
# The walk
# ---------------------------------------------------------------------------


def guaranteed_one_point(n: int, k: int) -> int:
    """Points one-point steps alone are sure to add from a reservoir of ``n`` with ``k`` tournaments."""
    total = 0
    while n > 1:
        total += 1
        n = -(-(n - 1) // (1 << k))
    return total + (1 if n == 1 else 0)


@dataclass
class WalkResult:
    G: tuple[int, ...]
    sigma: tuple[int, ...]
    trace: list[str]
    condition: EMCondition
    diagnostic: str = ""

    def lower_bound(self, n: int) -> int:
        return guaranteed_one_point(n, len(self.sigma))


def _fmt_walk(step: int, op: str, c: EMCondition, rho: str) -> str:
    sig = ",".join(str(v) for v in c.sigma) if c.sigma else "[]"
    return f"{step} | {op} | {sig} | {len(c.F)} | {c.X.size} | {rho}"


def em_walk(Ts: Sequence[BaseTournament], arrivals: Sequence[int] | None, H: int,
            target: int | None = None, chunk: int = 64, cap: int = EXACT_CAP) -> WalkResult:
    """Grow ``F`` block by block, registering each tournament at its arrival step.

    Each step tries blocks of ``1, 2, 4, ..., chunk`` reservoir points and
    keeps the one maximising ``|F1| + guaranteed_one_point(|Y|)``, so the walk
    never does worse than single-point steps.  Once one point is left it is
    absorbed into ``F``.
    """
    arrivals = [0] * len(Ts) if arrivals is None else list(arrivals)
    if len(arrivals) != len(Ts):
        raise ValueError("one arrival step per tournament")
    if sorted(arrivals) != arrivals:
        raise ValueError("arrival steps must be nondecreasing")
    for T in Ts:
        if T.n < H:
            raise ValueError(f"tournament on {T.n} vertices, horizon {H}")
    c = EMCondition.fresh(H)
    lines: list[str] = []
    step = 0
    reg = 0
    while True:
        while reg < len(Ts) and arrivals[reg] <= step and c.X.size:
            c = register_tournament(c, Ts)
            reg += 1
            lines.append(_fmt_walk(step, "register", c, "-"))
        if target is not None and len(c.F) >= target:
            break
        if not c.X.size:
            break
        k = len(c.sigma)
        if c.X.size == 1:
            c = EMCondition(c.sigma, c.F + (int(c.X[0]),), ())
            lines.append(_fmt_walk(step, "absorb", c, "-"))
            step += 1
            continue
        m_max = min(chunk, c.X.size - 1)
        head = c.X[:m_max]
        Xtail = c.X[1:]
        full = np.stack([Ts[nu].beats_many(int(a), Xtail) for a in head for nu in range(k)], axis=1) \
            if k else np.zeros((Xtail.size, 0), dtype=bool)
        best = None
        m = 1
        while m <= m_max:
            E = tuple(int(a) for a in head[:m])
            Y = c.X[m:]
            bits = full[m - 1:, : m * k]
            split = _split_from_bits(c, Ts, E, Y, bits)
            rho, F1, ext = split.best_extension(cap)
            score = len(F1) + guaranteed_one_point(ext.X.size, k)
            if best is None or score > best[0]:
                best = (score, m, rho, ext)
            m *= 2
        _, m, rho, c = best
        lines.append(_fmt_walk(step, f"block{m}", c, "".join(map(str, rho)) or "-"))
        step += 1
    while reg < len(Ts) and arrivals[reg] <= step:
        reg += 1  # arrivals after the reservoir ran dry are never registered
    diag = ""
    if target is not None and len(c.F) < target:
        diag = f"target {target} unreachable: reservoir exhausted at |F| = {len(c.F)}"
    if len(c.sigma) < len(Ts):
        diag = (diag + "; " if diag else "") + f"{len(Ts) - len(c.sigma)} tournaments never registered"
    return WalkResult(c.F, c.sigma, lines, c, diag)


def replay_walk(Ts: Sequence[BaseTournament], H: int, lines: Sequence[str],
                cap: int = EXACT_CAP) -> EMCondition:
    """Rebuild the final condition from walk lines, redoing each recorded step.

    Block steps reuse the recorded block size and class; the counts on every
    line must come out the same.
    """
    c = EMCondition.fresh(H)
    for no, line in enumerate(lines, start=1):
        try:
            c = _replay_step(c, Ts, line, no, cap)
        except WalkReplayError:
            raise
        except ValueError as exc:
            raise WalkReplayError(no, str(exc)) from None
    return c


def _replay_step(c: EMCondition, Ts: Sequence[BaseTournament], line: str, no: int, cap: int) -> EMCondition:
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 6:
        raise WalkReplayError(no, "expected 6 '|'-separated fields")
    op, rho = parts[1], parts[5]
    if op == "register":
        c = register_tournament(c, Ts)
    elif op == "absorb":
        if c.X.size != 1:
            raise WalkReplayError(no, f"absorb with {c.X.size} reservoir points")
        c = EMCondition(c.sigma, c.F + (int(c.X[0]),), ())
    elif op.startswith("block"):
        m = int(op[5:])
        split = block_extend(c, Ts, c.X[:m])
        key = () if rho == "-" else tuple(int(b) for b in rho)
        if key not in split.classes:
            raise WalkReplayError(no, f"class {rho} does not occur")
        c = split.extend(_common_transitive(Ts[:len(c.sigma)], split.classes[key], cap))
    else:
        raise WalkReplayError(no, f"unknown op {op!r}")
    if _fmt_walk(int(parts[0]), op, c, rho) != line.strip():
        raise WalkReplayError(no, f"replay gives {_fmt_walk(int(parts[0]), op, c, rho)!r}")
    return c


def check_walk(result: WalkResult, Ts: Sequence[BaseTournament]) -> list[tuple[int, bool]]:
    """``(nu, G minus [0, sigma[nu]] is T_nu-transitive)`` for every registered tournament."""
    out = []
    for nu, off in enumerate(result.sigma):
        part = [g for g in result.G if g > off]
        out.append((nu, is_transitive(Ts[nu], part)))
    return out


# ---------------------------------------------------------------------------
# Set-encoding tournaments
# ---------------------------------------------------------------------------


def encode_set_tournament(X: Iterable[int], N: int) -> Tournament:
    """For ``a < b``: ``a -> b`` iff ``a`` and ``b`` are on the same side of ``X``."""
    side = np.zeros(N, dtype=bool)
    xs = [int(v) for v in X]
    if xs and (min(xs) < 0 or max(xs) >= N):
        raise ValueError(f"set not inside [0, {N})")
    side[xs] = True
    same = side[:, None] == side[None, :]
    m = np.triu(same, 1) | np.tril(~same, -1)
    return Tournament.from_matrix(m)


def find_alternation(S: Iterable[int], X: Iterable[int]) -> tuple[int, int, int, int] | None:
    """``a < b < c < d`` in ``S`` with ``a, c`` on one side of ``X`` and ``b, d`` on the other."""
    Xs = set(int(v) for v in X)
    runs: list[int] = []
    last = None
    for v in sorted(set(int(v) for v in S)):
        side = v in Xs
        if side != last:
            runs.append(v)
            last = side
        if len(runs) == 4:
            return tuple(runs)  # type: ignore[return-value]
    return None


def log_bound(n: int, k: int) -> int:
    """``floor(log_{2^k} n)``, the pigeonhole guarantee quoted for one-point steps."""
    if n < 1:
        return 0
    if k == 0:
        return n
    return int(math.floor(math.log(n, 2 ** k) + 1e-12))
