"""Coefficient assignment, encoding, any-k reconstruction and MDS checks.

Message data is node-major: ``message[j - 1, i - 1]`` is symbol ``a[i, j]``.
Arrays may carry trailing axes (typically one per stripe); every operation
maps over them unchanged.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Mapping

import numpy as np

from .errors import MdsSearchExhausted, PreconditionViolated, SingularMatrix, WrongNodeCount
from .galois import FieldDesc, GaloisField
from .galois import field as get_field
from .layout import CodeParams, Layout, build_index_arrays

log = logging.getLogger(__name__)

MAX_DRAWS = 64
EXHAUSTIVE_BUDGET = 10**10
DEFAULT_SAMPLES = 200


class FieldSizeWarning(UserWarning):
    """The field is smaller than the size that guarantees an MDS draw exists."""


@dataclass(frozen=True)
class Verification:
    """How hard to check the MDS property: ``exhaustive`` or ``sampled`` with N subsets."""

    mode: str = "exhaustive"
    samples: int = DEFAULT_SAMPLES

    def __post_init__(self) -> None:
        if self.mode not in ("exhaustive", "sampled"):
            raise ValueError(f"unknown verification mode {self.mode!r}")
        if self.samples < 0:
            raise ValueError("sample count must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "Verification":
        """Parse ``exhaustive``, ``sampled`` or ``sampled:N``."""
        mode, _, n = text.partition(":")
        if mode == "sampled":
            return cls("sampled", int(n) if n else DEFAULT_SAMPLES)
        if n:
            raise ValueError(f"bad verification level {text!r}")
        return cls(mode)

    def __str__(self) -> str:
        return self.mode if self.mode == "exhaustive" else f"sampled:{self.samples}"


def verification_cost(params: CodeParams) -> int:
    """Rough field-operation count of an exhaustive check."""
    return comb(params.n, params.k) * (params.r * params.alpha) ** 3


def default_verification(params: CodeParams) -> Verification:
    if verification_cost(params) <= EXHAUSTIVE_BUDGET:
        return Verification("exhaustive")
    return Verification("sampled", DEFAULT_SAMPLES)


def mds_field_bound(params: CodeParams) -> int:
    """Field size above which a good coefficient choice is guaranteed to exist."""
    return comb(params.n, params.k) * params.r * params.alpha


@dataclass(frozen=True)
class CoefficientTable:
    """``rows[l - 1][i - 1]`` holds one coefficient per occupied cell of row i of P_l, in column order."""

    rows: tuple[tuple[tuple[int, ...], ...], ...]

    def to_lists(self) -> list:
        return [[list(c) for c in arr] for arr in self.rows]

    @classmethod
    def from_lists(cls, data) -> "CoefficientTable":
        return cls(tuple(tuple(tuple(int(v) for v in c) for c in arr) for arr in data))


@dataclass
class MdsReport:
    level: Verification
    checked: int = 0
    failures: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class CodedStripe:
    systematic: np.ndarray  # (k, alpha, ...)
    parity: np.ndarray  # (r, alpha, ...)

    def node(self, idx: int) -> np.ndarray:
        """Data of node ``idx`` (1..k systematic, k+1..n parity)."""
        k = self.systematic.shape[0]
        return self.systematic[idx - 1] if idx <= k else self.parity[idx - k - 1]

    def nodes(self, indexes) -> dict[int, np.ndarray]:
        return {i: self.node(i) for i in indexes}


@dataclass
class GeneralizedCode:
    layout: Layout
    field: FieldDesc
    coeffs: CoefficientTable
    report: MdsReport | None = None

    def __post_init__(self) -> None:
        self._gen: np.ndarray | None = None
        self._rows: list[tuple[np.ndarray, np.ndarray]] | None = None

    @property
    def params(self) -> CodeParams:
        return self.layout.params

    @property
    def pattern(self):
        return self.layout.pattern

    @property
    def partitions(self):
        return self.layout.parts

    @property
    def gf(self) -> GaloisField:
        return get_field(self.field)

    def equation(self, l: int, i: int) -> list[tuple[tuple[int, int], int]]:
        """Terms ``((row, node), coefficient)`` of parity symbol ``p[i, l]``."""
        return list(zip(self.pattern.row_pairs(l, i), self.coeffs.rows[l - 1][i - 1]))

    def generator(self) -> np.ndarray:
        """Dense (r*alpha) x (k*alpha) map from message symbols to parity symbols.

        Row ``(l-1)*alpha + (i-1)`` is ``p[i, l]``; column ``(j-1)*alpha + (i-1)`` is ``a[i, j]``.
        """
        if self._gen is None:
            p = self.params
            g = np.zeros((p.r * p.alpha, p.k * p.alpha), dtype=np.int64)
            for l in range(1, p.r + 1):
                for i in range(1, p.alpha + 1):
                    for (si, sj), c in self.equation(l, i):
                        g[(l - 1) * p.alpha + i - 1, (sj - 1) * p.alpha + si - 1] = c
            g.flags.writeable = False
            self._gen = g
        return self._gen

    def _sparse_rows(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if self._rows is None:
            g = self.generator()
            self._rows = [(np.flatnonzero(row), row[np.flatnonzero(row)]) for row in g]
        return self._rows


def _unknown_system(code: GeneralizedCode, nodes) -> tuple[np.ndarray, list[int], list[int]]:
    """Square block of the generator linking supplied parities to missing systematic symbols."""
    p = code.params
    nodes = sorted(set(nodes))
    missing = [j for j in range(1, p.k + 1) if j not in nodes]
    parities = [v - p.k for v in nodes if v > p.k]
    g = code.generator()
    rows = [(l - 1) * p.alpha + i for l in parities for i in range(p.alpha)]
    cols = [(j - 1) * p.alpha + i for j in missing for i in range(p.alpha)]
    return g[np.ix_(rows, cols)], missing, parities


def subset_is_recoverable(code: GeneralizedCode, nodes) -> bool:
    block, missing, parities = _unknown_system(code, nodes)
    if len(missing) != len(parities):
        raise WrongNodeCount(f"expected {code.params.k} nodes, got {len(set(nodes))}")
    if not missing:
        return True
    return code.gf.rank(block) == block.shape[0]


def _subsets(params: CodeParams, level: Verification, rng: np.random.Generator):
    n, k, r = params.n, params.k, params.r
    if level.mode == "exhaustive":
        yield from itertools.combinations(range(1, n + 1), k)
        return
    parity = tuple(range(k + 1, n + 1))
    for keep in itertools.combinations(range(1, k + 1), k - r):
        yield keep + parity
    for _ in range(level.samples):
        yield tuple(sorted(int(v) + 1 for v in rng.choice(n, size=k, replace=False)))


def verify_mds(code: GeneralizedCode, level: Verification | str | None = None, seed: int = 0) -> MdsReport:
    """Check that the listed k-subsets of nodes determine the message.

    ``sampled`` covers every subset holding all r parity nodes plus N
    uniformly random subsets. Exhaustive checks beyond the cost budget are
    refused; ask for ``sampled`` instead.
    """
    if level is None:
        level = default_verification(code.params)
    elif isinstance(level, str):
        level = Verification.parse(level)
    if level.mode == "exhaustive" and verification_cost(code.params) > EXHAUSTIVE_BUDGET:
        raise PreconditionViolated(
            f"exhaustive MDS check of n={code.params.n} k={code.params.k} alpha={code.params.alpha} "
            f"exceeds the budget; use sampled:N"
        )
    report = MdsReport(level)
    rng = np.random.default_rng(seed)
    seen: dict[tuple[int, ...], bool] = {}
    for subset in _subsets(code.params, level, rng):
        ok = seen.get(subset)
        if ok is None:
            ok = seen[subset] = subset_is_recoverable(code, subset)
        report.checked += 1
        if not ok and subset not in report.failures:
            report.failures.append(subset)
    return report


def _draw(code_layout: Layout, gf: GaloisField, rng: np.random.Generator) -> CoefficientTable:
    pattern = code_layout.pattern
    rows = []
    for l in range(1, pattern.r + 1):
        arr = []
        for i in range(1, pattern.alpha + 1):
            count = len(pattern.row_pairs(l, i))
            arr.append(tuple(int(v) for v in gf.random(rng, count, nonzero=True)))
        rows.append(tuple(arr))
    return CoefficientTable(tuple(rows))


def assign_coefficients(
    layout: Layout,
    desc: FieldDesc,
    seed: int = 0,
    level: Verification | str | None = None,
    max_draws: int = MAX_DRAWS,
) -> tuple[CoefficientTable, MdsReport]:
    """Draw nonzero coefficients until the code verifies as MDS at ``level``."""
    params = layout.params
    gf = get_field(desc)
    if desc.order < mds_field_bound(params):
        warnings.warn(
            f"GF(2^{desc.w}) is below the guaranteed size {mds_field_bound(params)} for "
            f"n={params.n} k={params.k} alpha={params.alpha}; relying on verification",
            FieldSizeWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    # GF(2) has a single nonzero element, so every draw is the same draw
    draws = 1 if desc.order == 2 else max_draws
    last = None
    for attempt in range(draws):
        coeffs = _draw(layout, gf, rng)
        code = GeneralizedCode(layout, desc, coeffs)
        report = verify_mds(code, level, seed=seed + attempt)
        if report.passed:
            log.debug("MDS draw accepted after %d attempt(s)", attempt + 1)
            return coeffs, report
        last = report
    raise MdsSearchExhausted(
        f"no MDS coefficients in {draws} draw(s) over GF(2^{desc.w}); "
        f"first failing subset {last.failures[0] if last else None}"
    )


def build_code(
    params: CodeParams,
    desc: FieldDesc | None = None,
    level: Verification | str | None = None,
) -> GeneralizedCode:
    """Layout, coefficients and verification in one go."""
    desc = desc or FieldDesc(params.w)
    layout = build_index_arrays(params)
    coeffs, report = assign_coefficients(layout, desc, params.seed, level)
    return GeneralizedCode(layout, desc, coeffs, report)


def _combine(gf: GaloisField, idx: np.ndarray, coef: np.ndarray, flat: np.ndarray) -> np.ndarray:
    if idx.size == 0:
        return np.zeros(flat.shape[1:], dtype=np.int64)
    terms = gf.mul(coef.reshape((-1,) + (1,) * (flat.ndim - 1)), flat[idx])
    return np.bitwise_xor.reduce(terms, axis=0)


def encode(code: GeneralizedCode, message: np.ndarray) -> CodedStripe:
    """Systematic copy of ``message`` plus its r parity nodes."""
    p = code.params
    message = np.asarray(message, dtype=np.int64)
    if message.shape[:2] != (p.k, p.alpha):
        raise ValueError(f"message shape {message.shape[:2]} != ({p.k}, {p.alpha})")
    if not code.gf.contains(message):
        raise ValueError(f"message has symbols outside GF(2^{code.field.w})")
    flat = message.reshape((p.k * p.alpha,) + message.shape[2:])
    parity = np.stack([_combine(code.gf, idx, coef, flat) for idx, coef in code._sparse_rows()])
    return CodedStripe(message.copy(), parity.reshape((p.r, p.alpha) + message.shape[2:]))


def reconstruct(code: GeneralizedCode, available: Mapping[int, np.ndarray]) -> np.ndarray:
    """Recover the message from exactly k nodes (1..k systematic, k+1..n parity)."""
    p = code.params
    nodes = sorted(available)
    if len(nodes) != p.k or len(set(nodes)) != p.k or not all(1 <= v <= p.n for v in nodes):
        raise WrongNodeCount(f"need exactly {p.k} distinct nodes out of 1..{p.n}, got {nodes}")
    gf = code.gf
    sample = np.asarray(available[nodes[0]])
    trail = sample.shape[1:]
    message = np.zeros((p.k, p.alpha) + trail, dtype=np.int64)
    for j in nodes:
        if j <= p.k:
            message[j - 1] = available[j]
    block, missing, parities = _unknown_system(code, nodes)
    if not missing:
        return message
    known = [j for j in range(1, p.k + 1) if j not in missing]
    g = code.generator()
    width = int(np.prod(trail, dtype=np.int64))
    flat = message.reshape((p.k * p.alpha, width))
    rhs = []
    for l in parities:
        rows = g[(l - 1) * p.alpha : l * p.alpha]
        cols = [(j - 1) * p.alpha + i for j in known for i in range(p.alpha)]
        contrib = gf.matmul(rows[:, cols], flat[cols]) if cols else 0
        rhs.append(np.asarray(available[l + p.k], dtype=np.int64).reshape(p.alpha, width) ^ contrib)
    try:
        x = gf.solve(block, np.vstack(rhs))
    except SingularMatrix as exc:
        raise SingularMatrix(f"nodes {nodes} do not determine the message") from exc
    for t, j in enumerate(missing):
        message[j - 1] = x[t * p.alpha : (t + 1) * p.alpha].reshape((p.alpha,) + trail)
    return message
