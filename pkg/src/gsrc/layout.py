"""Index-array construction for general sub-packetized access-optimal codes.

Systematic node ``j`` (1-based) stores symbols ``a[1..alpha, j]``. Parity node
``l`` stores ``p[i, l]``, a combination of the symbols listed in row ``i`` of
index array ``P_l``. ``P_1`` is the plain row layout; ``P_2..P_r`` carry
``ceil(k/r)`` extra columns, one per node group, into which each node's
non-designated symbols are scheduled at rows of its designated subset.

All row, node, array and column numbers in this module are 1-based, and
``(0, 0)`` marks an unassigned cell.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil

from .errors import InvalidParams, NoValidPartition, PreconditionViolated

log = logging.getLogger(__name__)

EMPTY = (0, 0)

Pair = tuple[int, int]
Cell = tuple[int, int, int, int]


@dataclass(frozen=True)
class CodeParams:
    n: int
    k: int
    alpha: int
    w: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n", "k", "alpha", "w", "seed"):
            if not isinstance(getattr(self, name), int):
                raise InvalidParams(f"{name} must be an integer")
        if not 2 <= self.k < self.n:
            raise InvalidParams(f"need 2 <= k < n, got n={self.n} k={self.k}")
        if not 1 <= self.alpha <= self.alpha_max:
            raise InvalidParams(
                f"alpha={self.alpha} outside 1..{self.alpha_max} (r^ceil(k/r) for n={self.n} k={self.k})"
            )

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def d(self) -> int:
        return self.n - 1

    @property
    def num_groups(self) -> int:
        return ceil(self.k / self.r)

    @property
    def alpha_max(self) -> int:
        r = self.n - self.k
        return r ** ceil(self.k / r)

    @property
    def portion(self) -> int:
        return ceil(self.alpha / self.r)

    @property
    def file_size(self) -> int:
        return self.k * self.alpha

    def group_of(self, node: int) -> int:
        return ceil(node / self.r)

    def run(self, nu: int) -> int:
        # ceil(alpha / r^nu) without floats
        return -(-self.alpha // self.r**nu)

    def step(self, nu: int) -> int:
        return self.portion - self.run(nu)


def partition_nodes(params: CodeParams) -> list[tuple[int, ...]]:
    """Natural-order node groups J_1..J_ceil(k/r)."""
    r = params.r
    return [tuple(range(s, min(s + r, params.k + 1))) for s in range(1, params.k + 1, r)]


@dataclass(frozen=True)
class Partitioning:
    """Split of {1..alpha} for one node; ``subsets[rho]`` is designated.

    Non-designated subset ``t`` holds the symbols scheduled into one parity
    array; ``cells`` lists each placement as ``(array, row, col, symbol_row)``.
    """

    node: int
    subsets: tuple[tuple[int, ...], ...]
    rho: int
    cells: tuple[Cell, ...] = ()

    @property
    def designated(self) -> tuple[int, ...]:
        return self.subsets[self.rho]

    def family(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(s) for s in self.subsets if s)


@dataclass
class ParityPattern:
    """The r index arrays. ``arrays[l - 1][i - 1][c - 1]`` is cell (i, c) of P_l."""

    k: int
    alpha: int
    r: int
    arrays: list[list[list[Pair]]]

    @classmethod
    def empty(cls, params: CodeParams) -> "ParityPattern":
        k, alpha, r = params.k, params.alpha, params.r
        extra = ceil(k / r)
        arrays = []
        for l in range(1, r + 1):
            width = k + (extra if l > 1 else 0)
            arrays.append([[(i, j) for j in range(1, k + 1)] + [EMPTY] * (width - k) for i in range(1, alpha + 1)])
        return cls(k, alpha, r, arrays)

    @property
    def num_extra(self) -> int:
        return ceil(self.k / self.r)

    def get(self, l: int, row: int, col: int) -> Pair:
        return self.arrays[l - 1][row - 1][col - 1]

    def set(self, l: int, row: int, col: int, pair: Pair) -> None:
        self.arrays[l - 1][row - 1][col - 1] = pair

    def row_pairs(self, l: int, row: int) -> list[Pair]:
        return [p for p in self.arrays[l - 1][row - 1] if p != EMPTY]

    def extra_cells(self, l: int):
        """Yield ``(row, col, pair)`` for occupied extra-column cells of P_l."""
        if l == 1:
            return
        for i, cells in enumerate(self.arrays[l - 1], 1):
            for c in range(self.k + 1, len(cells) + 1):
                if cells[c - 1] != EMPTY:
                    yield i, c, cells[c - 1]

    def column(self, l: int, col: int) -> list[Pair]:
        return [cells[col - 1] for cells in self.arrays[l - 1]]

    def copy(self) -> "ParityPattern":
        return ParityPattern(self.k, self.alpha, self.r, [[list(row) for row in a] for a in self.arrays])

    def to_lists(self) -> list[list[list[list[int]]]]:
        return [[[list(p) for p in row] for row in a] for a in self.arrays]

    @classmethod
    def from_lists(cls, k: int, alpha: int, r: int, data) -> "ParityPattern":
        arrays = [[[tuple(p) for p in row] for row in a] for a in data]
        return cls(k, alpha, r, arrays)

    def validate(self) -> None:
        """Check the structural invariants of a finished pattern."""
        if len(self.arrays) != self.r:
            raise ValueError(f"expected {self.r} arrays, got {len(self.arrays)}")
        for l, a in enumerate(self.arrays, 1):
            width = self.k + (self.num_extra if l > 1 else 0)
            if len(a) != self.alpha or any(len(row) != width for row in a):
                raise ValueError(f"P_{l} has wrong shape")
            seen = set()
            for i, row in enumerate(a, 1):
                for c, pair in enumerate(row, 1):
                    if c <= self.k and pair != (i, c):
                        raise ValueError(f"P_{l} base cell ({i},{c}) holds {pair}")
                    if pair == EMPTY:
                        continue
                    ri, rj = pair
                    if not (1 <= ri <= self.alpha and 1 <= rj <= self.k):
                        raise ValueError(f"P_{l} cell ({i},{c}) holds out-of-range {pair}")
                    if c > self.k:
                        if ri == i:
                            raise ValueError(f"P_{l} schedules {pair} into its own row")
                        if pair in seen:
                            raise ValueError(f"symbol {pair} scheduled twice in P_{l}")
                        seen.add(pair)


# -- Condition 1 ---------------------------------------------------------


def run_pattern(alpha: int, portion: int, run: int, gap: int, start: int) -> tuple[int, ...] | None:
    """``portion`` indexes in runs of ``run`` consecutive rows, ``gap`` rows apart.

    Runs never wrap past alpha; run starts advance cyclically. Returns None
    when the runs collide before ``portion`` distinct indexes are collected.
    """
    out: list[int] = []
    b = start
    while len(out) < portion:
        length = min(run, portion - len(out))
        if b + length - 1 > alpha:
            return None
        out.extend(range(b, b + length))
        b = (b - 1 + run + gap) % alpha + 1
    if len(set(out)) != portion:
        return None
    return tuple(sorted(out))


def check_condition1(subset, run: int, step: int, alpha: int) -> bool:
    """True iff ``subset`` is runs of ``run`` consecutive indexes separated by ``step``."""
    target = tuple(sorted(subset))
    if not target or run < 1:
        return False
    return any(run_pattern(alpha, len(target), run, step, s) == target for s in range(1, alpha + 1))


# -- Condition 2 ---------------------------------------------------------


def check_condition2(parts: list[Partitioning], groups: list[tuple[int, ...]], r: int | None = None) -> bool:
    """Equal families inside each group, distinct designated subsets overall.

    Family equality is only demanded when r divides alpha. When the portion
    divides alpha and the group is full, the group's designated subsets must
    tile {1..alpha}.
    """
    by_node = {p.node: p for p in parts}
    if not by_node:
        return True
    alpha = sum(len(s) for s in next(iter(by_node.values())).subsets)
    if r is None:
        r = len(next(iter(by_node.values())).subsets)
    portion = ceil(alpha / r)
    designated = [frozenset(p.designated) for p in parts]
    if len(set(designated)) != len(designated):
        return False
    for group in groups:
        members = [by_node[j] for j in group if j in by_node]
        if not members:
            continue
        if alpha % r == 0 and len({m.family() for m in members}) > 1:
            return False
        if alpha % portion == 0 and len(group) * portion == alpha:
            ds = [set(m.designated) for m in members]
            if sum(len(d) for d in ds) != alpha or set().union(*ds) != set(range(1, alpha + 1)):
                return False
    return True


# -- construction --------------------------------------------------------


@dataclass
class LayoutState:
    """Construction state threaded through the node loop."""

    params: CodeParams
    pattern: ParityPattern
    parts: list[Partitioning] = field(default_factory=list)
    # free[(l, col)]: rows whose extra cell is empty; load[(l, row)]: occupied extra cells
    free: dict[tuple[int, int], set[int]] = field(default_factory=dict)
    load: dict[tuple[int, int], int] = field(default_factory=dict)
    dsets: dict[int, frozenset[int]] = field(default_factory=dict)
    # eq_rows[(l, x)]: (symbol row, node) of every extra cell in row x of P_l
    eq_rows: dict[tuple[int, int], list[tuple[int, int]]] = field(default_factory=dict)

    @classmethod
    def start(cls, params: CodeParams) -> "LayoutState":
        state = cls(params, ParityPattern.empty(params))
        extra = range(params.k + 1, params.k + params.num_groups + 1)
        for l in range(2, params.r + 1):
            for c in extra:
                state.free[(l, c)] = set(range(1, params.alpha + 1))
            for x in range(1, params.alpha + 1):
                state.load[(l, x)] = 0
        return state

    def designated_sets(self) -> dict[int, frozenset[int]]:
        return self.dsets


def _balanced_sizes(total: int, slots: int) -> list[int]:
    if slots == 0:
        return []
    base, extra = divmod(total, slots)
    return [base + 1] * extra + [base] * (slots - extra)


@lru_cache(maxsize=65536)
def _split_rest(alpha: int, r: int, designated: tuple[int, ...], shift: int) -> tuple[tuple[int, ...], ...]:
    """Non-designated subsets: cyclic translates of the designated subset where possible."""
    dset = set(designated)
    rest = [i for i in range(1, alpha + 1) if i not in dset]
    sizes = _balanced_sizes(len(rest), r - 1)
    used: set[int] = set()
    subsets: list[list[int]] = []
    for t, size in enumerate(sizes, 1):
        pick = []
        for x in designated:
            y = (x - 1 + t * shift) % alpha + 1
            if len(pick) < size and y not in dset and y not in used:
                pick.append(y)
                used.add(y)
        subsets.append(pick)
    leftover = [i for i in rest if i not in used]
    for pick, size in zip(subsets, sizes):
        while len(pick) < size:
            pick.append(leftover.pop(0))
    return tuple(tuple(sorted(s)) for s in subsets)


def _load(state: LayoutState, l: int, rows) -> int:
    """Occupied extra cells of P_l over ``rows``."""
    return sum(state.load[(l, x)] for x in rows)


def _place(state: LayoutState, node: int, designated: tuple[int, ...], rest: list[tuple[int, ...]]):
    """Give each non-designated subset its own parity array in the group's column.

    Subsets go in order of smallest element to the least loaded array (lowest
    index on ties) with enough free designated rows; the t-th smallest symbol lands on the t-th smallest
    free row. Returns cells ``(array, row, col, symbol_row)`` or None.
    """
    params = state.params
    col = params.k + params.group_of(node)
    cells: list[Cell] = []
    taken: set[int] = set()
    order = sorted(range(2, params.r + 1), key=lambda l: (_load(state, l, designated), l))
    for sub in sorted((s for s in rest if s), key=lambda s: s[0]):
        for l in order:
            if l in taken:
                continue
            free = state.free[(l, col)]
            rows = [x for x in designated if x in free][: len(sub)]
            if len(rows) == len(sub):
                taken.add(l)
                cells.extend((l, x, col, i) for x, i in zip(rows, sub))
                break
        else:
            return None
    return cells


def _place_loose(state: LayoutState, node: int, designated: tuple[int, ...], rest: list[tuple[int, ...]]):
    """Symbol-by-symbol placement used when :func:`_place` fails everywhere.

    Each symbol takes the first unused (array, designated row) pair that has a
    free extra column, the node's own column first. Distinct pairs keep every
    repair equation down to one unknown.
    """
    params = state.params
    own = params.k + params.group_of(node)
    columns = [own] + [c for c in range(params.k + 1, params.k + params.num_groups + 1) if c != own]
    used: set[tuple[int, int]] = set()
    cells: list[Cell] = []
    pairs = sorted(
        itertools.product(range(2, params.r + 1), designated),
        key=lambda lx: (state.load[lx], lx[0]),
    )
    # one shared scan: a slot rejected once stays rejected, since ``used`` only grows
    free = (
        (l, x, c)
        for c in columns
        for l, x in pairs
        if (l, x) not in used and x in state.free[(l, c)]
    )
    for i in itertools.chain.from_iterable(rest):
        slot = next(free, None)
        if slot is None:
            return None
        used.add(slot[:2])
        cells.append((*slot, i))
    return cells


def _extra_reads(state: LayoutState, node: int, designated: tuple[int, ...], cells) -> int:
    """Extra systematic reads this choice adds to the repair of ``node`` and of placed nodes.

    A repair reads the symbols of the parity equations that solve its
    unknowns; any of those outside the failed node's designated rows is extra.
    """
    # cells occupy distinct (array, row) pairs and no symbol is scheduled twice,
    # so plain counting gives the number of distinct extra symbols
    dset = set(designated)
    sets = state.dsets
    cost = 0
    for l, x, _, i in cells:
        for row, other in state.eq_rows.get((l, x), ()):
            if other != node:
                cost += row not in dset
                cost += i not in sets[other]
    return cost


def _make_partitioning(node: int, designated, cells, r: int) -> Partitioning:
    by_array = {l: sorted(i for (a, _, _, i) in cells if a == l) for l in range(2, r + 1)}
    subsets = [tuple(designated)] + [tuple(v) for v in by_array.values()]
    order = sorted(range(len(subsets)), key=lambda t: (not subsets[t], subsets[t][:1]))
    return Partitioning(node, tuple(subsets[t] for t in order), order.index(0), tuple(sorted(cells)))


@lru_cache(maxsize=64)
def _general_candidates(alpha: int, portion: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Every run/gap pattern of the right size, lexicographic, with its run length."""
    seen: dict[tuple[int, ...], int] = {}
    for run in range(1, portion + 1):
        for gap in range(0, alpha - portion + 1):
            if run == portion and gap:
                continue
            for s in range(1, alpha + 1):
                pat = run_pattern(alpha, portion, run, gap, s)
                if pat is not None and pat not in seen:
                    seen[pat] = run
    return tuple(sorted(seen.items()))


def valid_partitioning(state: LayoutState, node: int, run: int, step: int) -> Partitioning:
    """Choose and return the partitioning for ``node`` (does not schedule it).

    With ``run > 0`` the designated subset must satisfy Condition 1; the first
    pattern in top-down order whose cells are free and whose designated subset
    is new wins. Otherwise (or if no such pattern exists) every run/gap pattern
    is scored by the extra repair reads it causes and the cheapest new one wins,
    ties going to the lexicographically smallest. Relaxations, in order, when
    nothing fits: place symbol by symbol, spilling into another group's extra
    column if needed; then accept a designated subset already held by another
    node (unavoidable once there are fewer portion-sized subsets than nodes).
    """
    params = state.params
    alpha, r, portion = params.alpha, params.r, params.portion
    used = {frozenset(p.designated) for p in state.parts}

    if run > 0:
        for s in range(1, alpha + 1):
            d = run_pattern(alpha, portion, run, step, s)
            if d is None or frozenset(d) in used:
                continue
            rest = _split_rest(alpha, r, d, run)
            cells = _place(state, node, d, rest)
            if cells is not None:
                return _make_partitioning(node, d, cells, r)
        log.debug("node %d: no Condition-1 pattern (run=%d step=%d); falling back", node, run, step)

    candidates = _general_candidates(alpha, portion)
    for place, allow_dup in ((_place, False), (_place_loose, False), (_place, True), (_place_loose, True)):
        best = None
        for d, shift in candidates:
            if not allow_dup and frozenset(d) in used:
                continue
            rest = _split_rest(alpha, r, d, shift)
            cells = place(state, node, d, rest)
            if cells is None:
                continue
            cost = _extra_reads(state, node, d, cells)
            if best is None or cost < best[0]:
                best = (cost, d, cells)
                if cost == 0:
                    break
        if best is not None:
            if allow_dup or place is _place_loose:
                log.debug("node %d: relaxed placement (duplicate=%s loose=%s)", node, allow_dup, place is _place_loose)
            return _make_partitioning(node, best[1], best[2], r)
    raise NoValidPartition(f"no placeable partitioning for node {node} (n={params.n} k={params.k} alpha={alpha})")


def schedule(state: LayoutState, part: Partitioning) -> None:
    """Write ``part``'s non-designated symbols into their extra-column cells."""
    for l, x, col, i in part.cells:
        if state.pattern.get(l, x, col) != EMPTY:
            raise NoValidPartition(f"cell ({x},{col}) of P_{l} already occupied")
        state.pattern.set(l, x, col, (i, part.node))
        state.free[(l, col)].discard(x)
        state.load[(l, x)] += 1
        state.eq_rows.setdefault((l, x), []).append((i, part.node))
    state.parts.append(part)
    state.dsets[part.node] = frozenset(part.designated)


@dataclass(frozen=True)
class Layout:
    params: CodeParams
    groups: list[tuple[int, ...]]
    parts: list[Partitioning]
    pattern: ParityPattern

    def partition(self, node: int) -> Partitioning:
        return self.parts[node - 1]

    def designated(self, node: int) -> tuple[int, ...]:
        return self.parts[node - 1].designated


def build_index_arrays(params: CodeParams) -> Layout:
    """Generate P_1..P_r with their per-node partitionings.

    Phase 1 covers every group whose granulation ``ceil(alpha / r^nu)``
    exceeds 1 (Conditions 1 and 2); the remaining groups form Phase 2
    (Condition 2 only).
    """
    state = LayoutState.start(params)
    groups = partition_nodes(params)
    for nu, group in enumerate(groups, 1):
        run = params.run(nu)
        phase1 = run > 1
        for j in group:
            part = valid_partitioning(state, j, run if phase1 else 0, params.step(nu) if phase1 else 0)
            schedule(state, part)
    state.pattern.validate()
    return Layout(params, groups, list(state.parts), state.pattern)


def check_proposition2(pattern: ParityPattern, parts: list[Partitioning], groups: list[tuple[int, ...]]) -> bool:
    """Every non-designated symbol of a group sits in that group's extra column exactly once."""
    if pattern.alpha % pattern.r:
        raise PreconditionViolated(f"r={pattern.r} does not divide alpha={pattern.alpha}")
    by_node = {p.node: p for p in parts}
    for nu, group in enumerate(groups, 1):
        col = pattern.k + nu
        column_pairs = list(
            itertools.chain.from_iterable(pattern.column(l, col) for l in range(2, pattern.r + 1))
        )
        for j in group:
            d = set(by_node[j].designated)
            for i in range(1, pattern.alpha + 1):
                if i in d:
                    continue
                if column_pairs.count((i, j)) != 1:
                    return False
                for l in range(2, pattern.r + 1):
                    for c in range(pattern.k + 1, pattern.k + pattern.num_extra + 1):
                        if c != col and (i, j) in pattern.column(l, c):
                            return False
    return True
