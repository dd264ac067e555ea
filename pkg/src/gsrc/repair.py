"""Single systematic-node repair with symbol-level access accounting.

Symbols are identified as ``(node, row)`` with nodes 1..k systematic and
k+1..n parity (parity array ``l`` lives on node ``k + l``).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Mapping

import numpy as np

from .codec import GeneralizedCode
from .errors import BoundViolation, MissingSymbol, SingularMatrix, UnsolvableSchedule, UnsupportedOperation
from .layout import CodeParams

Symbol = tuple[int, int]


@dataclass(frozen=True)
class ScheduledSolve:
    row: int  # unknown a[row, failed]
    array: int  # parity array l
    eq_row: int  # row x of P_l whose equation is used
    level: int  # 1 for step-2 solves, 2+ for later back-substitution


@dataclass(frozen=True)
class RepairPlan:
    params: CodeParams
    failed: int
    designated: tuple[int, ...]
    step1: tuple[Symbol, ...]
    step3: tuple[Symbol, ...]
    step4: tuple[Symbol, ...]
    schedule: tuple[ScheduledSolve, ...]

    @property
    def reads(self) -> tuple[Symbol, ...]:
        return self.step1 + self.step3 + self.step4

    def per_node(self) -> dict[int, int]:
        return dict(sorted(Counter(node for node, _ in self.reads).items()))


@dataclass(frozen=True)
class RepairTrace:
    accessed: int
    transferred: int
    gamma: Fraction
    per_node: dict[int, int]
    alpha: int

    @property
    def beta(self) -> dict[int, Fraction]:
        """Share of each helper node's contents sent, in node units."""
        return {node: Fraction(c, self.alpha) for node, c in self.per_node.items()}


def bounds(params: CodeParams) -> tuple[Fraction, Fraction]:
    """Lower and upper limits on per-node repair bandwidth, in node units."""
    n, k, r, alpha = params.n, params.k, params.r, params.alpha
    p = ceil(alpha / r)
    lower = Fraction((n - 1) * p, alpha)
    upper = lower + Fraction((r - 1) * p * ceil(k / r), alpha)
    return lower, upper


def _equation_symbols(code: GeneralizedCode, l: int, x: int) -> list[Symbol]:
    return [(j, i) for (i, j) in code.pattern.row_pairs(l, x)]


def plan_repair(code: GeneralizedCode, failed: int) -> RepairPlan:
    """Read plan and solve schedule for systematic node ``failed``."""
    p = code.params
    if p.k < failed <= p.n:
        raise UnsupportedOperation(f"node {failed} is a parity node; only systematic repair is supported")
    if not 1 <= failed <= p.k:
        raise ValueError(f"node {failed} outside 1..{p.n}")
    d = code.layout.designated(failed)
    dset = set(d)
    step1 = tuple((j, i) for j in range(1, p.k + 1) if j != failed for i in d) + tuple((p.k + 1, i) for i in d)
    step3 = tuple((p.k + l, i) for l in range(2, p.r + 1) for i in d)

    level = {i: 1 for i in d}
    pending = set(range(1, p.alpha + 1)) - dset
    schedule: list[ScheduledSolve] = []
    used_eq: set[tuple[int, int]] = set()
    progress = True
    while pending and progress:
        progress = False
        for l in range(2, p.r + 1):
            for x in d:
                if (l, x) in used_eq:
                    continue
                own = [i for (j, i) in _equation_symbols(code, l, x) if j == failed]
                unknown = [i for i in own if i not in level]
                if len(unknown) != 1 or unknown[0] not in pending:
                    continue
                u = unknown[0]
                # own always includes the equation's base cell a[x, failed]
                level[u] = 1 + max(level[i] for i in own if i != u)
                schedule.append(ScheduledSolve(u, l, x, level[u]))
                used_eq.add((l, x))
                pending.discard(u)
                progress = True
    if pending:
        raise UnsolvableSchedule(f"node {failed}: rows {sorted(pending)} appear in no single-unknown equation")

    have = set(step1) | set(step3)
    step4: list[Symbol] = []
    for s in schedule:
        for sym in _equation_symbols(code, s.array, s.eq_row):
            if sym[0] != failed and sym not in have:
                have.add(sym)
                step4.append(sym)
    schedule.sort(key=lambda s: (s.level, s.array, s.eq_row))
    return RepairPlan(p, failed, d, step1, step3, tuple(sorted(step4)), tuple(schedule))


def dependency_depth(plan: RepairPlan) -> int:
    """Longest chain of dependent solves; step-2 solves sit at depth 1."""
    levels = [1] * len(plan.designated) + [s.level for s in plan.schedule]
    return max(levels, default=0)


def bandwidth(plan: RepairPlan, check: bool = True) -> RepairTrace:
    reads = plan.reads
    if len(set(reads)) != len(reads):
        dup = [s for s, c in Counter(reads).items() if c > 1]
        raise BoundViolation(f"symbols read twice: {dup[:5]}")
    transferred = len(reads)
    gamma = Fraction(transferred, plan.params.alpha)
    if check:
        lo, hi = bounds(plan.params)
        if not lo <= gamma <= hi:
            raise BoundViolation(f"gamma {gamma} outside [{lo}, {hi}] for node {plan.failed}")
    return RepairTrace(len(set(reads)), transferred, gamma, plan.per_node(), plan.params.alpha)


def average_repair_bandwidth(code: GeneralizedCode) -> Fraction:
    """Total symbols moved to repair each systematic node once, over the file size."""
    p = code.params
    total = sum(bandwidth(plan_repair(code, l)).transferred for l in range(1, p.k + 1))
    return Fraction(total, p.file_size)


def msr_point(n: int, k: int, m) -> tuple[Fraction, Fraction]:
    """Storage per node and repair bandwidth at the minimum-storage point."""
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got n={n} k={k}")
    alpha = Fraction(m) / k
    return alpha, alpha * Fraction(n - 1, n - k)


def execute_repair(code: GeneralizedCode, plan: RepairPlan, shards: Mapping[int, np.ndarray]) -> np.ndarray:
    """Rebuild the failed node's alpha symbols (plus any trailing stripe axes).

    Only symbols listed in the plan are touched; anything else is never read.
    """
    p = code.params
    gf = code.gf
    buffer: dict[Symbol, np.ndarray] = {}
    for node, row in plan.reads:
        data = shards.get(node)
        if data is None:
            raise MissingSymbol(f"node {node} not supplied (needed for row {row})")
        data = np.asarray(data)
        if data.shape[0] < p.alpha:
            raise MissingSymbol(f"node {node} has {data.shape[0]} rows, expected {p.alpha}")
        buffer[(node, row)] = np.asarray(data[row - 1], dtype=np.int64)

    def fetch(sym: Symbol) -> np.ndarray:
        try:
            return buffer[sym]
        except KeyError:
            raise MissingSymbol(f"symbol {sym} is not in the repair plan") from None

    trail = next(iter(buffer.values())).shape if buffer else ()
    out = np.zeros((p.alpha,) + trail, dtype=np.int64)
    known: dict[int, np.ndarray] = {}
    f = plan.failed

    def solve(l: int, x: int, row: int) -> np.ndarray:
        acc = fetch((p.k + l, x)).copy()
        target = None
        for (si, sj), c in code.equation(l, x):
            if sj == f and si == row:
                target = c
                continue
            val = known[si] if sj == f else fetch((sj, si))
            acc ^= gf.mul(c, val)
        if target is None:
            raise SingularMatrix(f"equation ({l},{x}) does not involve a[{row},{f}]")
        return gf.mul(gf.inv(target), acc)

    for i in plan.designated:
        known[i] = solve(1, i, i)
    for s in plan.schedule:
        known[s.row] = solve(s.array, s.eq_row, s.row)
    for i, v in known.items():
        out[i - 1] = v
    return out
