"""Exact rational linear programming.

A dense two-phase tableau simplex over :class:`fractions.Fraction` using
Bland's rule, so it terminates on degenerate problems and never rounds.
Problems here are small (tens to a few hundred columns); density is fine.

:class:`LinearProgram` is a thin builder on top of :func:`solve` that lets
callers name variables with arbitrary hashable keys and write constraints as
coefficient mappings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    x: tuple[Fraction, ...] = ()
    objective: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


def _pivot(rows, rhs, basis, cost, zval, r, col):
    piv = rows[r][col]
    row = rows[r]
    if piv != 1:
        inv = 1 / piv
        for j, v in enumerate(row):
            if v:
                row[j] = v * inv
        rhs[r] *= inv
    nz = [j for j, v in enumerate(row) if v]
    for i, other in enumerate(rows):
        if i == r:
            continue
        f = other[col]
        if f:
            for j in nz:
                other[j] -= f * row[j]
            rhs[i] -= f * rhs[r]
    f = cost[col]
    if f:
        for j in nz:
            cost[j] -= f * row[j]
        zval[0] -= f * rhs[r]
    basis[r] = col


def _simplex(rows, rhs, basis, cost, zval, ncols) -> bool:
    """Run Bland-rule pivots until optimal. Returns False if unbounded."""
    while True:
        col = next((j for j in range(ncols) if cost[j] < 0), None)
        if col is None:
            return True
        best = None
        for i, row in enumerate(rows):
            a = row[col]
            if a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False
        _pivot(rows, rhs, basis, cost, zval, best[1], col)


def solve(c: Sequence, a_eq: Sequence[Sequence], b_eq: Sequence) -> LPResult:
    """Minimise ``c @ x`` subject to ``a_eq @ x == b_eq`` and ``x >= 0``."""
    n = len(c)
    m = len(a_eq)
    rows = [[Fraction(v) for v in row] for row in a_eq]
    rhs = [Fraction(v) for v in b_eq]
    for i in range(m):
        if len(rows[i]) != n:
            raise ValueError("constraint row has wrong length")
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
        rows[i].extend(Fraction(int(k == i)) for k in range(m))
    basis = [n + i for i in range(m)]

    # phase 1: minimise the sum of artificials
    cost = [-sum((rows[i][j] for i in range(m)), Fraction(0)) for j in range(n)] + [Fraction(0)] * m
    zval = [-sum(rhs, Fraction(0))]
    _simplex(rows, rhs, basis, cost, zval, n + m)
    if zval[0] != 0:
        return LPResult(INFEASIBLE)

    # drive zero-level artificials out of the basis, dropping redundant rows
    r = 0
    while r < len(rows):
        if basis[r] >= n:
            col = next((j for j in range(n) if rows[r][j] != 0), None)
            if col is None:
                del rows[r], rhs[r], basis[r]
                continue
            _pivot(rows, rhs, basis, [Fraction(0)] * (n + m), [Fraction(0)], r, col)
        r += 1
    for row in rows:
        del row[n:]

    cvec = [Fraction(v) for v in c]
    cost = list(cvec)
    zval = [Fraction(0)]
    for i, b in enumerate(basis):
        cb = cvec[b]
        if cb:
            for j in range(n):
                cost[j] -= cb * rows[i][j]
            zval[0] -= cb * rhs[i]
    if not _simplex(rows, rhs, basis, cost, zval, n):
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        x[b] = rhs[i]
    return LPResult(OPTIMAL, tuple(x), -zval[0])


@dataclass(frozen=True)
class LPSolution:
    status: str
    values: Mapping[Hashable, Fraction] = field(default_factory=dict)
    objective: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE

    def __getitem__(self, key) -> Fraction:
        return self.values.get(key, Fraction(0))


class LinearProgram:
    """Builder for LPs over nonnegative (or free) named variables.

    >>> lp = LinearProgram()
    >>> lp.add_eq({"x": 1, "y": 1}, 1)
    >>> lp.solve({"x": 1}).objective
    Fraction(0, 1)
    """

    def __init__(self) -> None:
        self._index: dict[Hashable, int] = {}
        self._free: dict[Hashable, tuple[int, int]] = {}
        self._ncols = 0
        self._eqs: list[tuple[dict[int, Fraction], Fraction]] = []

    def _col(self) -> int:
        self._ncols += 1
        return self._ncols - 1

    def var(self, key: Hashable, free: bool = False) -> Hashable:
        if key in self._index or key in self._free:
            return key
        if free:
            self._free[key] = (self._col(), self._col())
        else:
            self._index[key] = self._col()
        return key

    def __contains__(self, key) -> bool:
        return key in self._index or key in self._free

    def _expand(self, coeffs: Mapping[Hashable, object]) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for key, v in coeffs.items():
            v = Fraction(v)
            if not v:
                continue
            if key in self._free:
                pos, neg = self._free[key]
                out[pos] = out.get(pos, 0) + v
                out[neg] = out.get(neg, 0) - v
            else:
                col = self._index.get(key)
                if col is None:
                    col = self._index[self.var(key)]
                out[col] = out.get(col, 0) + v
        return out

    def add_eq(self, coeffs: Mapping[Hashable, object], rhs=0) -> None:
        self._eqs.append((self._expand(coeffs), Fraction(rhs)))

    def add_le(self, coeffs: Mapping[Hashable, object], rhs=0) -> None:
        row = self._expand(coeffs)
        row[self._col()] = Fraction(1)
        self._eqs.append((row, Fraction(rhs)))

    def add_ge(self, coeffs: Mapping[Hashable, object], rhs=0) -> None:
        self.add_le({k: -Fraction(v) for k, v in coeffs.items()}, -Fraction(rhs))

    def solve(self, objective: Mapping[Hashable, object] | None = None, maximize: bool = False) -> LPSolution:
        n = self._ncols
        c = [Fraction(0)] * n
        if objective:
            for col, v in self._expand(objective).items():
                c[col] = -v if maximize else v
        a_eq = []
        b_eq = []
        for row, b in self._eqs:
            dense = [Fraction(0)] * n
            for col, v in row.items():
                dense[col] = v
            a_eq.append(dense)
            b_eq.append(b)
        res = solve(c, a_eq, b_eq)
        if res.status != OPTIMAL:
            return LPSolution(res.status)
        values = {k: res.x[col] for k, col in self._index.items() if res.x[col]}
        for k, (pos, neg) in self._free.items():
            v = res.x[pos] - res.x[neg]
            if v:
                values[k] = v
        obj = res.objective
        if obj is not None and maximize:
            obj = -obj
        return LPSolution(OPTIMAL, values, obj if objective else None)


def feasible(constraints: Iterable[tuple[Mapping[Hashable, object], object]]) -> LPSolution:
    """Solve a pure feasibility problem given ``(coeffs, rhs)`` equalities."""
    lp = LinearProgram()
    for coeffs, rhs in constraints:
        lp.add_eq(coeffs, rhs)
    return lp.solve()


def solve_linear(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction]:
    """Solve a square nonsingular system exactly by Gauss-Jordan elimination."""
    n = len(matrix)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        a[col], a[piv] = a[piv], a[col]
        prow = a[col]
        inv = 1 / prow[col]
        for j in range(col, n + 1):
            prow[j] *= inv
        for r in range(n):
            if r != col:
                f = a[r][col]
                if f:
                    row = a[r]
                    for j in range(col, n + 1):
                        if prow[j]:
                            row[j] -= f * prow[j]
    return [a[r][n] for r in range(n)]
