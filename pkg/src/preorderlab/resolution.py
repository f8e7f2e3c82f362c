"""Resolution-based outcomes.

A memoryless deterministic scheduler picks one tau-transition per unstable
state.  The deterministic sub-pLTS it induces is a resolution (with the
identity as resolving function); its value is the least fixed point of the
success-probability functional, computed exactly per success label by
zero-set analysis followed by a linear solve.  The outcome set of a test
applied to a process is the convex hull of the scheduler values.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .composition import ComposedPLTS, compose, prune
from .core import PLTS, Label, Subdist, Transition, check_lifted_transition, expected_value, image
from .frontend import SourceModel
from .lp import solve_linear
from .polytope import OutcomePolytope, Vector

DEFAULT_MAX_SCHEDULERS = 2**20


class StateSpaceTooLarge(RuntimeError):
    pass


class MemorylessScheduler(Mapping):
    """Choice of tau-transition index per unstable state; ``None`` means halt."""

    __slots__ = ("_choice",)

    def __init__(self, choice: Mapping[str, int | None]):
        self._choice = dict(choice)

    def __getitem__(self, s):
        return self._choice[s]

    def __iter__(self):
        return iter(self._choice)

    def __len__(self):
        return len(self._choice)

    def __hash__(self):
        return hash(frozenset(self._choice.items()))

    def __eq__(self, other):
        if isinstance(other, MemorylessScheduler):
            return self._choice == other._choice
        return NotImplemented

    def chosen(self, p: PLTS, s: str) -> Transition | None:
        idx = self._choice.get(s)
        if idx is None:
            return None
        return p.tau_moves(s)[idx]

    def __repr__(self):
        return f"MemorylessScheduler({dict(sorted(self._choice.items()))})"


def scheduler_menu(c: ComposedPLTS) -> list[tuple[str, tuple[int | None, ...]]]:
    p = c.plts
    menu = []
    for s in sorted(p.reachable(c.init)):
        n = len(p.tau_moves(s))
        menu.append((s, tuple(range(n)) if n else (None,)))
    return menu


def count_schedulers(c: ComposedPLTS) -> int:
    return math.prod(len(opts) for _, opts in scheduler_menu(c))


def iter_schedulers(c: ComposedPLTS, limit: int = DEFAULT_MAX_SCHEDULERS) -> Iterator[MemorylessScheduler]:
    menu = scheduler_menu(c)
    total = math.prod(len(opts) for _, opts in menu)
    if total > limit:
        raise StateSpaceTooLarge(f"{total} schedulers exceed the bound {limit}")
    states = [s for s, _ in menu]
    for combo in itertools.product(*(opts for _, opts in menu)):
        yield MemorylessScheduler(dict(zip(states, combo)))


def enumerate_schedulers(c: ComposedPLTS, limit: int = DEFAULT_MAX_SCHEDULERS) -> list[MemorylessScheduler]:
    return list(iter_schedulers(c, limit))


@dataclass(frozen=True)
class Resolution:
    plts: PLTS
    init: Subdist
    resolving: Mapping[str, str]
    omega: tuple[str, ...]


def induced_resolution(c: ComposedPLTS, sigma: MemorylessScheduler) -> Resolution:
    """Keep sigma's tau choice and the first transition of every other label."""
    p = c.plts
    kept: list[Transition] = []
    for s in sorted(p.states):
        seen: set[Label] = set()
        for tr in p.outgoing(s):
            if tr.label.is_tau or tr.label in seen:
                continue
            seen.add(tr.label)
            kept.append(tr)
        if s in sigma:
            tr = sigma.chosen(p, s)
            if tr is not None:
                kept.append(tr)
    full = PLTS(p.states, p.alphabet, tuple(kept))
    reach = full.reachable(c.init)
    return Resolution(full.restrict(reach), c.init, {s: s for s in reach}, c.omega)


@dataclass(frozen=True)
class ClauseViolation:
    clause: str
    state: str | None = None
    label: str | None = None

    def __str__(self):
        return f"clause {self.clause} at {self.state} ({self.label})"


def check_resolution(orig: ComposedPLTS, r: Resolution) -> list[ClauseViolation]:
    """Check determinism and the three resolving-function clauses exactly."""
    out = []
    rp, op = r.plts, orig.plts
    seen = set()
    for tr in rp.transitions:
        key = (tr.source, tr.label)
        if key in seen:
            out.append(ClauseViolation("determinism", tr.source, tr.label.name))
        seen.add(key)
    f = r.resolving
    try:
        if image(r.init, f) != orig.init:
            out.append(ClauseViolation("i"))
    except KeyError:
        out.append(ClauseViolation("i"))
    for s in sorted(rp.states):
        if s not in f or f[s] not in op.states:
            out.append(ClauseViolation("f", s))
            continue
        for tr in rp.outgoing(s):
            try:
                img = image(tr.target, f)
            except KeyError:
                out.append(ClauseViolation("ii", s, tr.label.name))
                continue
            if tr.label not in op.enabled(f[s]) or check_lifted_transition(op, Subdist.point(f[s]), tr.label, img) is None:
                out.append(ClauseViolation("ii", s, tr.label.name))
        for label in sorted(op.enabled(f[s]) - rp.enabled(s)):
            out.append(ClauseViolation("iii", s, label.name))
    return out


def _success_states(p: PLTS, w: str) -> set[str]:
    return {s for s in p.states if any(l.is_success and l.name == w for l in p.enabled(s))}


def value_lfp(r: Resolution | PLTS, omega: tuple[str, ...] | None = None) -> dict[str, Vector]:
    """Least fixed point of the value functional on a deterministic pLTS."""
    p = r.plts if isinstance(r, Resolution) else r
    omega = r.omega if omega is None else omega
    states = sorted(p.states)
    tau = {}
    for s in states:
        trs = p.tau_moves(s)
        if len(trs) > 1:
            raise ValueError(f"state {s!r} is not deterministic")
        tau[s] = trs[0].target if trs else None
    columns = []
    for w in omega:
        good = _success_states(p, w)
        # states from which an w-state is reachable via kept tau-moves
        live = set(good)
        changed = True
        while changed:
            changed = False
            for s in states:
                if s not in live and tau[s] is not None and any(u in live for u in tau[s]):
                    live.add(s)
                    changed = True
        unknown = sorted(live - good)
        idx = {s: i for i, s in enumerate(unknown)}
        matrix = []
        rhs = []
        for s in unknown:
            row = [Fraction(0)] * len(unknown)
            row[idx[s]] += 1
            b = Fraction(0)
            for u, pr in tau[s].items():
                if u in good:
                    b += pr
                elif u in idx:
                    row[idx[u]] -= pr
            matrix.append(row)
            rhs.append(b)
        sol = solve_linear(matrix, rhs) if unknown else []
        col = {s: Fraction(0) for s in states}
        col.update({s: Fraction(1) for s in good})
        col.update({s: sol[idx[s]] for s in unknown})
        columns.append(col)
    return {s: tuple(col[s] for col in columns) for s in states}


def iterate_functional(r: Resolution | PLTS, omega: tuple[str, ...] | None = None, steps: int = 60) -> list[dict[str, Vector]]:
    """The Kleene iterates R^1(bot) .. R^steps(bot); a test oracle for value_lfp."""
    p = r.plts if isinstance(r, Resolution) else r
    omega = r.omega if omega is None else omega
    zero = tuple(Fraction(0) for _ in omega)
    cur = {s: zero for s in p.states}
    out = []
    for _ in range(steps):
        nxt = {}
        for s in p.states:
            enabled = p.enabled(s)
            trs = p.tau_moves(s)
            ev = expected_value(trs[0].target, cur, len(omega)) if trs else zero
            nxt[s] = tuple(
                Fraction(1) if any(l.is_success and l.name == w for l in enabled) else ev[i]
                for i, w in enumerate(omega)
            )
        cur = nxt
        out.append(cur)
    return out


def resolution_outcome(r: Resolution) -> Vector:
    return expected_value(r.init, value_lfp(r), len(r.omega))


def outcomes_by_resolution(c: ComposedPLTS, limit: int = DEFAULT_MAX_SCHEDULERS) -> OutcomePolytope:
    points = {resolution_outcome(induced_resolution(c, sigma)) for sigma in iter_schedulers(c, limit)}
    return OutcomePolytope.hull(c.omega, points)


@functools.lru_cache(maxsize=4096)
def apply_resolution_based(
    test: SourceModel,
    proc: SourceModel,
    init_test: str | None = None,
    init_proc: str | None = None,
    limit: int = DEFAULT_MAX_SCHEDULERS,
) -> OutcomePolytope:
    return outcomes_by_resolution(prune(compose(test, proc, init_test, init_proc)), limit)
