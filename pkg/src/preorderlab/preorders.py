"""May/must and reward testing preorders, decided per test suite.

The universally quantified reward tuple is eliminated geometrically:
``inf h.A <= inf h.B`` for every real h iff ``hull(B)`` is inside
``hull(A)``; for nonnegative h iff ``hull(B)`` is inside ``hull(A)`` plus the
nonnegative orthant.  The sup (may) variants mirror this.  When a
containment fails, a separating reward tuple is recovered from a small LP
and replayed before it is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import lp
from .frontend import SourceModel
from .polytope import DOWN, UP, OutcomePolytope, Vector, dot, fmt_vector

KINDS = ("pmay", "pmust", "nrmay", "nrmust", "rrmay", "rrmust")
REAL = "real"
NONNEGATIVE = "nonnegative"
HOARE = "hoare"
SMYTH = "smyth"


@dataclass(frozen=True)
class RewardTuple:
    omega: tuple[str, ...]
    values: tuple[Fraction, ...]
    mode: str = REAL

    def __post_init__(self):
        if len(self.omega) != len(self.values):
            raise ValueError("reward tuple and omega differ in length")
        lo = -1 if self.mode == REAL else 0
        if any(not (lo <= v <= 1) for v in self.values):
            raise ValueError(f"reward {self.values} outside the {self.mode} range")

    def __str__(self):
        return fmt_vector(self.omega, self.values)


@dataclass(frozen=True)
class Counterexample:
    test: str
    reward: RewardTuple | None = None
    point: Vector | None = None
    left: Fraction | Vector | None = None
    right: Fraction | Vector | None = None

    def describe(self, omega: Sequence[str]) -> str:
        if self.reward is not None:
            return f"test {self.test}: h = [{self.reward}] gives {self.left} vs {self.right}"
        return f"test {self.test}: outcome [{fmt_vector(omega, self.point)}] is unmatched"


@dataclass(frozen=True)
class Verdict:
    holds: bool
    counterexample: Counterexample | None = None
    omega: tuple[str, ...] = ()
    per_test: tuple[tuple[str, bool], ...] = ()
    violations: tuple = field(default=())

    def __bool__(self) -> bool:
        return self.holds


def reward_extremum(h: RewardTuple | Sequence, p: OutcomePolytope, which: str) -> Fraction:
    """inf or sup of ``h . v`` over the polytope (attained at a vertex)."""
    values = h.values if isinstance(h, RewardTuple) else tuple(Fraction(x) for x in h)
    if isinstance(h, RewardTuple) and h.omega != p.omega:
        raise ValueError("reward tuple and polytope are over different success sets")
    return p.extremum(values, which)


def canonical_reward(h: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Scale so the largest magnitude is 1."""
    m = max((abs(x) for x in h), default=Fraction(0))
    if not m:
        return tuple(Fraction(0) for _ in h)
    return tuple(Fraction(x) / m for x in h)


def separating_reward(point: Vector, others: Sequence[Vector], mode: str, sense: str) -> tuple[Fraction, ...] | None:
    """Reward h with ``h.point`` strictly outside the range of h over ``others``.

    ``sense='below'`` finds h with ``h.point < min h.others``;
    ``sense='above'`` finds h with ``h.point > max h.others``.
    """
    model = lp.LinearProgram()
    dim = len(point)
    # h = g - 1 (real) or h = g (nonnegative), with 0 <= g <= bound
    shift = 1 if mode == REAL else 0
    bound = 2 if mode == REAL else 1
    for k in range(dim):
        model.add_le({("g", k): 1}, bound)
    model.var("t", free=True)
    sign = 1 if sense == "below" else -1
    for o in others:
        # sign * h.(o - point) >= t
        diff = [sign * (o[k] - point[k]) for k in range(dim)]
        coeffs = {("g", k): diff[k] for k in range(dim)}
        coeffs["t"] = -1
        model.add_ge(coeffs, shift * sum(diff))
    model.add_le({"t": 1}, 1)
    sol = model.solve({"t": 1}, maximize=True)
    if not sol.feasible or sol.objective is None or sol.objective <= 0:
        return None
    return canonical_reward(tuple(sol[("g", k)] - shift for k in range(dim)))


def hoare_smyth_leq(a: OutcomePolytope, b: OutcomePolytope, mode: str, test: str = "") -> Verdict:
    """Hoare: every point of A lies below some point of B; Smyth: every point of B lies above some point of A."""
    if a.omega != b.omega:
        raise ValueError("outcome sets over different success labels")
    if mode == HOARE:
        for v in a.vertices:
            if not b.contains(v, DOWN):
                return Verdict(False, Counterexample(test, point=v), a.omega)
    elif mode == SMYTH:
        for v in b.vertices:
            if not a.contains(v, UP):
                return Verdict(False, Counterexample(test, point=v), a.omega)
    else:
        raise ValueError(mode)
    return Verdict(True, omega=a.omega)


def compare_polytopes(kind: str, left: OutcomePolytope, right: OutcomePolytope, test: str = "") -> Verdict:
    """Decide one test's contribution to ``left <=_kind right``."""
    if left.omega != right.omega:
        raise ValueError("outcome sets over different success labels")
    if kind == "pmay":
        return hoare_smyth_leq(left, right, HOARE, test)
    if kind == "pmust":
        return hoare_smyth_leq(left, right, SMYTH, test)
    mode = REAL if kind.startswith("rr") else NONNEGATIVE
    if kind.endswith("must"):
        # every point of right must be reachable from left's hull (+ orthant)
        cone = 0 if mode == REAL else UP
        container, checked, sense, which = left, right, "below", "inf"
    elif kind.endswith("may"):
        cone = 0 if mode == REAL else DOWN
        container, checked, sense, which = right, left, "above", "sup"
    else:
        raise ValueError(f"unknown preorder kind {kind!r}")
    for v in checked.vertices:
        if container.contains(v, cone):
            continue
        h = separating_reward(v, container.vertices, mode, sense)
        if h is None:
            raise AssertionError(f"no separating reward for an uncontained point {v}")
        reward = RewardTuple(left.omega, h, mode)
        lv = left.extremum(h, which)
        rv = right.extremum(h, which)
        if not lv > rv:
            raise AssertionError("separating reward failed to replay")
        return Verdict(False, Counterexample(test, reward, v, lv, rv), left.omega)
    return Verdict(True, omega=left.omega)


def suite_omega(suite: Iterable[SourceModel]) -> tuple[str, ...]:
    return tuple(sorted({w for t in suite for w in t.omega}))


Engine = Callable[[SourceModel, SourceModel], OutcomePolytope]


def _default_engine(test: SourceModel, proc: SourceModel) -> OutcomePolytope:
    from .resolution import apply_resolution_based

    return apply_resolution_based(test, proc)


def preorder_on_suite(
    kind: str,
    delta: SourceModel,
    gamma: SourceModel,
    suite: Sequence[SourceModel],
    engine: Engine | None = None,
    stop_at_first: bool = True,
) -> Verdict:
    """Decide ``delta <=_kind gamma`` relative to the supplied tests.

    Reward kinds compare over the union of the suite's success labels
    (recorded in the verdict's ``omega``); pmay/pmust use each test's own.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown preorder kind {kind!r}")
    engine = engine or _default_engine
    union = suite_omega(suite)
    per_test = []
    first = None
    for test in suite:
        a = engine(test, delta)
        b = engine(test, gamma)
        if not kind.startswith("p"):
            a, b = a.widen(union), b.widen(union)
        v = compare_polytopes(kind, a, b, test.name)
        per_test.append((test.name, v.holds))
        if not v.holds and first is None:
            first = v.counterexample
            if stop_at_first:
                break
    omega = union if not kind.startswith("p") else ()
    return Verdict(first is None, first, omega, tuple(per_test))
