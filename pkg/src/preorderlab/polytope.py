"""Outcome vectors and finitely generated outcome polytopes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import lp

Vector = tuple[Fraction, ...]

UP = 1
DOWN = -1


def fmt_vector(omega: Sequence[str], v: Vector) -> str:
    return " ".join(f"{w}:{x}" for w, x in zip(omega, v))


def dot(h: Sequence, v: Sequence) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(h, v)), Fraction(0))


def in_hull(point: Sequence, generators: Sequence[Sequence], cone: int = 0) -> dict | None:
    """Convex weights showing ``point`` in ``hull(generators)``.

    With ``cone=UP`` the hull is extended by the nonnegative orthant
    (point may dominate a hull point); ``cone=DOWN`` by the nonpositive one.
    Returns ``{index: weight}`` or None.
    """
    if not generators:
        return None
    model = lp.LinearProgram()
    model.add_eq({("l", i): 1 for i in range(len(generators))}, 1)
    for k, x in enumerate(point):
        coeffs = {("l", i): g[k] for i, g in enumerate(generators)}
        if cone:
            coeffs[("s", k)] = cone
        model.add_eq(coeffs, x)
    sol = model.solve()
    if not sol.feasible:
        return None
    return {i: sol[("l", i)] for i in range(len(generators)) if sol[("l", i)]}


def hull_vertices(points: Iterable[Sequence]) -> tuple[Vector, ...]:
    """Vertices of the convex hull, sorted; interior and duplicate points removed."""
    pts = sorted({tuple(Fraction(x) for x in p) for p in points})
    keep = list(pts)
    for p in pts:
        others = [q for q in keep if q != p]
        if others and in_hull(p, others) is not None:
            keep = others
    return tuple(sorted(keep))


@dataclass(frozen=True)
class OutcomePolytope:
    """Convex hull of finitely many outcome vectors indexed by ``omega``."""

    omega: tuple[str, ...]
    vertices: tuple[Vector, ...]

    @classmethod
    def hull(cls, omega: Sequence[str], points: Iterable[Sequence]) -> "OutcomePolytope":
        omega = tuple(omega)
        pts = [tuple(Fraction(x) for x in p) for p in points]
        for p in pts:
            if len(p) != len(omega):
                raise ValueError("outcome dimension does not match omega")
        return cls(omega, hull_vertices(pts))

    def contains(self, point: Sequence, cone: int = 0) -> bool:
        return in_hull(point, self.vertices, cone) is not None

    def contains_polytope(self, other: "OutcomePolytope", cone: int = 0) -> bool:
        return all(self.contains(v, cone) for v in other.vertices)

    def widen(self, omega: Sequence[str]) -> "OutcomePolytope":
        """Re-index over a larger success set; new coordinates are zero."""
        omega = tuple(omega)
        missing = set(self.omega) - set(omega)
        if missing:
            raise ValueError(f"cannot drop success labels {sorted(missing)}")
        pos = {w: i for i, w in enumerate(self.omega)}
        verts = [tuple(v[pos[w]] if w in pos else Fraction(0) for w in omega) for v in self.vertices]
        return OutcomePolytope.hull(omega, verts)

    def extremum(self, h: Sequence, which: str) -> Fraction:
        values = [dot(h, v) for v in self.vertices]
        if which == "inf":
            return min(values)
        if which == "sup":
            return max(values)
        raise ValueError(which)

    def lines(self) -> list[str]:
        return sorted(fmt_vector(self.omega, v) for v in self.vertices)

    def __str__(self) -> str:
        return "\n".join(self.lines())
