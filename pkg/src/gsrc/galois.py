"""Arithmetic in GF(2^w) and dense linear algebra over it.

Elements are plain integers in ``[0, 2^w)``. Every operation accepts Python
ints or numpy integer arrays; array inputs broadcast like numpy ufuncs.
Multiplication goes through log/antilog tables, which for w <= 16 stay small
enough (at most 2^17 entries) to build eagerly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivisionByZero, InvalidField, SingularMatrix

# Low bits of the modulus; the x^w term is implicit.
DEFAULT_POLYS = {
    4: 0b1001,  # x^4 + x^3 + 1
    8: 0x1D,  # x^8 + x^4 + x^3 + x^2 + 1
    16: 0x100B,  # x^16 + x^12 + x^3 + x + 1
}

MAX_W = 16


def _clmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _polymod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def is_irreducible(full_poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2 over GF(2)."""
    deg = full_poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for f in range(1 << d, 1 << (d + 1)):
            if _polymod(full_poly, f) == 0:
                return False
    return True


@dataclass(frozen=True)
class FieldDesc:
    """Field width and reduction polynomial (implicit leading ``x^w``).

    ``poly`` may also be given with the leading bit set; it is normalized away.
    """

    w: int
    poly: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.w <= MAX_W:
            raise InvalidField(f"field width w={self.w} outside 1..{MAX_W}")
        poly = self.poly
        if poly is None:
            if self.w not in DEFAULT_POLYS:
                raise InvalidField(f"no default polynomial for w={self.w}")
            poly = DEFAULT_POLYS[self.w]
        if poly >> self.w == 1:
            poly &= (1 << self.w) - 1
        if poly < 0 or poly >> self.w:
            raise InvalidField(f"polynomial {poly:#x} does not fit w={self.w}")
        object.__setattr__(self, "poly", poly)
        if not is_irreducible(self.full_poly):
            raise InvalidField(f"polynomial {self.full_poly:#x} is reducible over GF(2)")

    @property
    def full_poly(self) -> int:
        return (1 << self.w) | self.poly

    @property
    def order(self) -> int:
        return 1 << self.w


class GaloisField:
    """GF(2^w) with table-driven multiplication.

    Use :func:`field` to get a cached instance; tables are never mutated.
    """

    def __init__(self, desc: FieldDesc):
        self.desc = desc
        self.w = desc.w
        self.order = desc.order
        q1 = self.order - 1
        self.generator = self._find_generator()
        exp = np.zeros(2 * q1 + 1, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(q1):
            exp[i] = x
            log[x] = i
            x = _polymod(_clmul(x, self.generator), desc.full_poly)
        exp[q1 : 2 * q1] = exp[:q1]
        self.exp = exp
        self.log = log
        self.exp.flags.writeable = False
        self.log.flags.writeable = False
        self.dtype = np.uint8 if self.w <= 8 else np.uint16

    def _find_generator(self) -> int:
        q1 = self.order - 1
        if q1 == 1:
            return 1
        for g in range(2, self.order):
            x, n = g, 1
            while x != 1:
                x = _polymod(_clmul(x, g), self.desc.full_poly)
                n += 1
            if n == q1:
                return g
        raise InvalidField(f"no primitive element for {self.desc}")  # pragma: no cover

    def __repr__(self) -> str:
        return f"GaloisField(w={self.w}, poly={self.desc.full_poly:#x})"

    # -- element ops -----------------------------------------------------

    def add(self, a, b):
        return np.bitwise_xor(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else a ^ b

    def mul(self, a, b):
        if not isinstance(a, np.ndarray) and not isinstance(b, np.ndarray):
            if a == 0 or b == 0:
                return 0
            return int(self.exp[self.log[a] + self.log[b]])
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.exp[self.log[a] + self.log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        if not isinstance(a, np.ndarray):
            if a == 0:
                raise DivisionByZero("inverse of zero")
            return int(self.exp[(self.order - 1 - self.log[a]) % (self.order - 1)])
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DivisionByZero("inverse of zero")
        return self.exp[(self.order - 1 - self.log[a]) % (self.order - 1)]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def contains(self, a) -> bool:
        a = np.asarray(a)
        return bool(np.all((a >= 0) & (a < self.order)))

    def random(self, rng: np.random.Generator, size, nonzero: bool = False) -> np.ndarray:
        low = 1 if nonzero else 0
        return rng.integers(low, self.order, size=size, dtype=np.int64)

    # -- matrices --------------------------------------------------------

    def _outer(self, col: np.ndarray, row: np.ndarray) -> np.ndarray:
        out = self.exp[self.log[col][:, None] + self.log[row][None, :]]
        out[col == 0, :] = 0
        out[:, row == 0] = 0
        return out

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        for j in range(a.shape[1]):
            if a[:, j].any():
                out ^= self._outer(a[:, j], b[j])
        return out

    def _eliminate(self, m: np.ndarray, ncols: int, reduced: bool = True) -> tuple[np.ndarray, list[int]]:
        """Row echelon form on the first ``ncols`` columns (reduced by default).

        Pivot is the first nonzero entry at or below the current row. Entries
        left of the pivot column are already zero in the pivot row, so updates
        touch only columns from the pivot on.
        """
        m = m.copy()
        rows = m.shape[0]
        pivots: list[int] = []
        r = 0
        for c in range(ncols):
            if r == rows:
                break
            nz = np.flatnonzero(m[r:, c])
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                m[[r, p]] = m[[p, r]]
            m[r, c:] = self.mul(m[r, c:], self.inv(int(m[r, c])))
            targets = np.flatnonzero(m[:, c] if reduced else m[r + 1 :, c]) + (0 if reduced else r + 1)
            targets = targets[targets != r]
            if targets.size:
                m[targets, c:] ^= self._outer(m[targets, c], m[r, c:])
            pivots.append(c)
            r += 1
        return m, pivots

    def rank(self, m: np.ndarray) -> int:
        m = np.atleast_2d(np.asarray(m, dtype=np.int64))
        if m.size == 0:
            return 0
        return len(self._eliminate(m, m.shape[1], reduced=False)[1])

    def solve(self, m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Return x with ``m @ x == rhs``; ``rhs`` may be a vector or a matrix."""
        m = np.asarray(m, dtype=np.int64)
        rhs = np.asarray(rhs, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        vec = rhs.ndim == 1
        b = rhs[:, None] if vec else rhs
        if b.shape[0] != m.shape[0]:
            raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {m.shape[0]}")
        n = m.shape[0]
        red, pivots = self._eliminate(np.hstack([m, b]), n)
        if len(pivots) < n:
            raise SingularMatrix(f"rank {len(pivots)} < {n}")
        x = red[:, n:]
        return x[:, 0] if vec else x

    def inverse(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.int64)
        return self.solve(m, np.eye(m.shape[0], dtype=np.int64))


@lru_cache(maxsize=None)
def field(desc: FieldDesc) -> GaloisField:
    return GaloisField(desc)


def gf(w: int, poly: int | None = None) -> GaloisField:
    return field(FieldDesc(w, poly))
