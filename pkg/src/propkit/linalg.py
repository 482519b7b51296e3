"""Small dense linear algebra over F_p (vectors are tuples of ints)."""

from __future__ import annotations

from typing import Sequence

Vector = tuple[int, ...]


def rref(rows: Sequence[Sequence[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form of ``rows`` mod p; returns (nonzero rows, pivot columns)."""
    m = [[x % p for x in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        m[r] = [x * inv % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(vectors: Sequence[Sequence[int]], p: int) -> int:
    return len(rref(vectors, p)[1])


def reduce_mod_span(v: Sequence[int], basis_rref: Sequence[Sequence[int]], pivots: Sequence[int], p: int) -> Vector:
    """Canonical representative of ``v`` modulo the span of an RREF basis (zero in pivot columns)."""
    out = [x % p for x in v]
    for row, c in zip(basis_rref, pivots):
        f = out[c]
        if f:
            out = [(x - f * y) % p for x, y in zip(out, row)]
    return tuple(out)


class LinearSolver:
    """Solve ``sum_j c_j * columns[j] = target`` over F_p.

    The elimination is done once; each :meth:`solve` is a matrix-vector
    product plus a consistency check.  ``solve`` returns ``None`` when the
    target is outside the column span.  When the columns are dependent the
    returned solution is one particular solution (free coefficients 0).
    """

    def __init__(self, columns: Sequence[Sequence[int]], p: int, dim: int | None = None):
        self.p = p
        self.ncols = len(columns)
        self.dim = dim if dim is not None else (len(columns[0]) if columns else 0)
        D = self.dim
        # augmented [M | I] with M the D x ncols matrix whose columns are given
        aug = [[columns[j][i] % p for j in range(self.ncols)] + [int(i == k) for k in range(D)]
               for i in range(D)]
        pivots: list[int] = []
        r = 0
        for c in range(self.ncols):
            piv = next((i for i in range(r, D) if aug[i][c]), None)
            if piv is None:
                continue
            aug[r], aug[piv] = aug[piv], aug[r]
            inv = pow(aug[r][c], -1, p)
            aug[r] = [x * inv % p for x in aug[r]]
            for i in range(D):
                if i != r and aug[i][c]:
                    f = aug[i][c]
                    aug[i] = [(x - f * y) % p for x, y in zip(aug[i], aug[r])]
            pivots.append(c)
            r += 1
        self.rank = r
        self.pivots = pivots
        self._transform = [row[self.ncols:] for row in aug]

    @property
    def full_rank(self) -> bool:
        return self.rank == self.ncols

    def solve(self, target: Sequence[int]) -> Vector | None:
        p = self.p
        y = [sum(a * b for a, b in zip(row, target)) % p for row in self._transform]
        if any(y[self.rank:]):
            return None
        c = [0] * self.ncols
        for i, col in enumerate(self.pivots):
            c[col] = y[i]
        return tuple(c)
