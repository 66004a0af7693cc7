"""Dense matrices of canonical rational expressions."""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import DimensionError, SingularMatrixError
from .rational import ONE, ZERO, RationalExpr


class SymMatrix:
    """Immutable rows x cols matrix with RationalExpr entries (row-major)."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable):
        ent = tuple(RationalExpr.coerce(e) for e in entries)
        if rows < 0 or cols < 0 or len(ent) != rows * cols:
            raise DimensionError(f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(ent)}")
        self.rows = rows
        self.cols = cols
        self.entries = ent

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "SymMatrix":
        rows = [list(r) for r in rows]
        if not rows:
            return cls(0, 0, ())
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise DimensionError("ragged rows")
        return cls(len(rows), width, [e for r in rows for e in r])

    @classmethod
    def column(cls, items: Sequence) -> "SymMatrix":
        return cls(len(items), 1, items)

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(n, n, [ONE if i == j else ZERO for i in range(n) for j in range(n)])

    @classmethod
    def zeros(cls, r: int, c: int) -> "SymMatrix":
        return cls(r, c, [ZERO] * (r * c))

    # -- access ------------------------------------------------------------
    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def col(self, j: int) -> list:
        return [self.entries[i * self.cols + j] for i in range(self.rows)]

    def tolist(self) -> list:
        return [self.row(i) for i in range(self.rows)]

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def T(self) -> "SymMatrix":
        return SymMatrix(self.cols, self.rows, [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "SymMatrix":
        return SymMatrix(len(rows), len(cols), [self[i, j] for i in rows for j in cols])

    def hstack(self, other: "SymMatrix") -> "SymMatrix":
        if self.rows != other.rows:
            raise DimensionError("hstack needs equal row counts")
        return SymMatrix.from_rows([self.row(i) + other.row(i) for i in range(self.rows)])

    def vstack(self, other: "SymMatrix") -> "SymMatrix":
        if self.cols != other.cols:
            raise DimensionError("vstack needs equal column counts")
        return SymMatrix(self.rows + other.rows, self.cols, self.entries + other.entries)

    # -- arithmetic ---------------------------------------------------------
    def map(self, fn) -> "SymMatrix":
        return SymMatrix(self.rows, self.cols, [fn(e) for e in self.entries])

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return SymMatrix(self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot subtract {self.shape} and {other.shape}")
        return SymMatrix(self.rows, self.cols, [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def scale(self, c) -> "SymMatrix":
        c = RationalExpr.coerce(c)
        return self.map(lambda e: e * c)

    def __matmul__(self, other: "SymMatrix") -> "SymMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(self.rows):
            r = self.row(i)
            for j in range(other.cols):
                acc = ZERO
                for k in range(self.cols):
                    a = r[k]
                    if a.is_zero:
                        continue
                    b = other[k, j]
                    if not b.is_zero:
                        acc = acc + a * b
                out.append(acc)
        return SymMatrix(self.rows, other.cols, out)

    def apply(self, vec: Sequence) -> list:
        """Matrix times a plain list of expressions."""
        return (self @ SymMatrix.column(list(vec))).col(0)

    def subs(self, bindings: Mapping[str, object]) -> "SymMatrix":
        return self.map(lambda e: e.subs(bindings))

    def diff(self, name: str, aux=None) -> "SymMatrix":
        return self.map(lambda e: e.diff(name, aux))

    def evaluate(self, point: Mapping[str, object]) -> np.ndarray:
        vals = [float(e.evaluate(point)) for e in self.entries]
        return np.array(vals, dtype=float).reshape(self.rows, self.cols)

    def variables(self) -> frozenset:
        out = frozenset()
        for e in self.entries:
            out |= e.variables()
        return out

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for e in self.entries)

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __str__(self):
        return "[" + ",\n ".join("[" + ", ".join(str(e) for e in self.row(i)) + "]" for i in range(self.rows)) + "]"

    def __repr__(self):
        return f"SymMatrix({self.rows}x{self.cols})"

    # -- linear algebra -------------------------------------------------------
    def det(self) -> RationalExpr:
        """Determinant by fraction-free (Bareiss) elimination."""
        if self.rows != self.cols:
            raise DimensionError(f"determinant of a non-square {self.shape} matrix")
        n = self.rows
        if n == 0:
            return ONE
        a = [self.row(i) for i in range(n)]
        sign = 1
        prev = ONE
        for k in range(n - 1):
            if a[k][k].is_zero:
                swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero), None)
                if swap is None:
                    return ZERO
                a[k], a[swap] = a[swap], a[k]
                sign = -sign
            piv = a[k][k]
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (piv * a[i][j] - a[i][k] * a[k][j]) / prev
                a[i][k] = ZERO
            prev = piv
        d = a[n - 1][n - 1]
        return -d if sign < 0 else d

    def _eliminate(self, rhs: "SymMatrix | None" = None):
        """Gauss-Jordan reduction; returns (rref rows, pivot columns, rhs rows)."""
        a = [self.row(i) for i in range(self.rows)]
        b = [rhs.row(i) for i in range(rhs.rows)] if rhs is not None else None
        pivots = []
        r = 0
        for c in range(self.cols):
            if r >= self.rows:
                break
            # prefer the simplest nonzero pivot to limit expression swell
            cands = [i for i in range(r, self.rows) if not a[i][c].is_zero]
            if not cands:
                continue
            p = min(cands, key=lambda i: (len(a[i][c].num) + len(a[i][c].den), i))
            a[r], a[p] = a[p], a[r]
            if b is not None:
                b[r], b[p] = b[p], b[r]
            inv = a[r][c].inverse()
            a[r] = [e * inv for e in a[r]]
            if b is not None:
                b[r] = [e * inv for e in b[r]]
            for i in range(self.rows):
                if i != r and not a[i][c].is_zero:
                    f = a[i][c]
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                    if b is not None:
                        b[i] = [x - f * y for x, y in zip(b[i], b[r])]
            pivots.append(c)
            r += 1
        return a, pivots, b

    def rank(self) -> int:
        return len(self._eliminate()[1])

    def inverse(self) -> "SymMatrix":
        if self.rows != self.cols:
            raise DimensionError(f"cannot invert a non-square {self.shape} matrix")
        n = self.rows
        if n == 1:
            if self.entries[0].is_zero:
                raise SingularMatrixError("matrix is identically singular")
            return SymMatrix(1, 1, [self.entries[0].inverse()])
        _, pivots, b = self._eliminate(SymMatrix.identity(n))
        if len(pivots) < n:
            raise SingularMatrixError("matrix is identically singular")
        return SymMatrix.from_rows(b)

    def solve(self, rhs: "SymMatrix") -> "SymMatrix":
        """Solve self @ X = rhs for square nonsingular self."""
        if self.rows != self.cols or rhs.rows != self.rows:
            raise DimensionError("solve needs a square system with matching right-hand side")
        _, pivots, b = self._eliminate(rhs)
        if len(pivots) < self.rows:
            raise SingularMatrixError("matrix is identically singular")
        return SymMatrix.from_rows(b)

    def nullspace(self) -> list:
        """Basis of the right kernel as column matrices."""
        a, pivots, _ = self._eliminate()
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for f in free:
            v = [ZERO] * self.cols
            v[f] = ONE
            for r, pc in enumerate(pivots):
                v[pc] = -a[r][f]
            basis.append(SymMatrix.column(v))
        return basis

    def nonzero_maximal_minor(self):
        """Index sets (rows, cols) of a nonvanishing maximal minor, or None."""
        k = min(self.rows, self.cols)
        for rs in combinations(range(self.rows), k):
            for cs in combinations(range(self.cols), k):
                d = self.submatrix(rs, cs).det()
                if not d.is_zero:
                    return rs, cs, d
        return None


def jacobian(f: Sequence, vars_: Sequence[str], aux=None) -> SymMatrix:
    """Matrix of partial derivatives d f_i / d vars_j (chain rule through aux atoms)."""
    f = [RationalExpr.coerce(e) for e in f]
    return SymMatrix(len(f), len(vars_), [fi.diff(v, aux) for fi in f for v in vars_])


def det(m: SymMatrix) -> RationalExpr:
    return m.det()


def invert(m: SymMatrix) -> SymMatrix:
    return m.inverse()
