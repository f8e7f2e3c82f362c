"""Weak derivations, extreme derivatives and derivation-based outcomes."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping

from . import lp
from .composition import ComposedPLTS, compose, prune
from .core import PLTS, Label, Subdist, combine
from .frontend import SourceModel
from .polytope import OutcomePolytope, Vector
from .resolution import DEFAULT_MAX_SCHEDULERS, MemorylessScheduler, iter_schedulers

DEFAULT_UNROLL_DEPTH = 64


class NotStable(ValueError):
    pass


class DivergentInput(ValueError):
    """An exact LP characterisation was requested on a divergent pLTS."""


def absorb(
    init: Mapping[Hashable, Fraction],
    step: Mapping[Hashable, Mapping[Hashable, Fraction]],
) -> dict[Hashable, Fraction]:
    """Total mass reaching each absorbing node of a finite Markov chain.

    ``step`` gives the successor distribution of every transient node; any
    node without an entry is absorbing.  Mass trapped forever among transient
    nodes is lost, which is exactly the least-fixed-point reading.
    """
    transient = set(step)
    nodes = set(init) | transient
    for succ in step.values():
        nodes |= set(succ)
    # transient nodes that can reach an absorbing node
    live = {n for n in nodes if n not in transient}
    changed = True
    while changed:
        changed = False
        for n in transient:
            if n not in live and any(u in live for u in step[n]):
                live.add(n)
                changed = True
    flowing = sorted((n for n in transient if n in live), key=repr)
    idx = {n: i for i, n in enumerate(flowing)}
    if flowing:
        # x = init + x P  on the live transient part
        size = len(flowing)
        matrix = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
        for n in flowing:
            for u, pr in step[n].items():
                if u in idx:
                    matrix[idx[u]][idx[n]] -= pr
        occ = lp.solve_linear(matrix, [Fraction(init.get(n, 0)) for n in flowing])
    else:
        occ = []
    out: dict[Hashable, Fraction] = {}
    for n, w in init.items():
        if n not in transient and w:
            out[n] = out.get(n, Fraction(0)) + Fraction(w)
    for n in flowing:
        x = occ[idx[n]]
        if not x:
            continue
        for u, pr in step[n].items():
            if u not in transient:
                out[u] = out.get(u, Fraction(0)) + x * pr
    return {n: w for n, w in out.items() if w}


@dataclass(frozen=True)
class ConvergenceResult:
    convergent: bool
    divergent_states: frozenset[str]
    removal_order: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.convergent


def divergent_core(p: PLTS) -> tuple[frozenset[str], tuple[str, ...]]:
    """Greatest set C where every state has a tau-move staying inside C."""
    core = {s for s in p.states if p.tau_moves(s)}
    order = [s for s in sorted(p.states) if s not in core]
    changed = True
    while changed:
        changed = False
        for s in sorted(core):
            if not any(tr.target.support <= core for tr in p.tau_moves(s)):
                core.discard(s)
                order.append(s)
                changed = True
    return frozenset(core), tuple(order)


def is_convergent(p: PLTS, init: Subdist | None = None) -> ConvergenceResult:
    """No reachable state can keep all of its mass moving by tau forever."""
    core, order = divergent_core(p)
    reach = p.reachable(init) if init is not None else p.states
    bad = core & reach
    return ConvergenceResult(not bad, frozenset(bad), order)


@dataclass(frozen=True)
class ExtremeDerivation:
    """Stage splits (possibly truncated) and the limit of an extreme derivation."""

    splits: tuple[tuple[Subdist, Subdist], ...]
    limit: Subdist
    truncated: bool = True


def _sigma_step(p: PLTS, sigma: Mapping[str, int | None]) -> dict[str, dict[str, Fraction]]:
    step = {}
    for s in p.states:
        trs = p.tau_moves(s)
        if not trs:
            continue
        idx = sigma.get(s)
        if idx is None:
            raise ValueError(f"scheduler halts at unstable state {s!r}")
        step[s] = dict(trs[idx].target.items())
    return step


def extreme_derivative(
    c: ComposedPLTS | PLTS,
    init: Subdist,
    sigma: Mapping[str, int | None],
    splits: int = 16,
) -> tuple[Subdist, ExtremeDerivation]:
    """The unique extreme derivative of ``init`` under scheduler sigma."""
    p = c.plts if isinstance(c, ComposedPLTS) else c
    reach = p.reachable(init, lambda l: l.is_tau)
    step = {s: v for s, v in _sigma_step(p.restrict(reach), sigma).items()}
    limit = Subdist(absorb(dict(init.items()), step))
    stages = []
    cur = init
    for _ in range(splits):
        go = Subdist({s: w for s, w in cur.items() if s in step})
        stop = Subdist({s: w for s, w in cur.items() if s not in step})
        stages.append((go, stop))
        if not go:
            break
        cur = combine((w, Subdist(step[s])) for s, w in go.items())
    return limit, ExtremeDerivation(tuple(stages), limit, truncated=bool(stages and stages[-1][0]))


def outcome(d: Subdist, p: PLTS, omega: tuple[str, ...]) -> Vector:
    """Per-success-label mass of a stable subdistribution."""
    for s in d:
        if not p.is_stable(s):
            raise NotStable(f"state {s!r} can perform tau")
    return tuple(
        sum((w for s, w in d.items() if any(l.is_success and l.name == om for l in p.enabled(s))), Fraction(0))
        for om in omega
    )


def outcomes_by_derivation(c: ComposedPLTS, limit: int = DEFAULT_MAX_SCHEDULERS) -> OutcomePolytope:
    points = set()
    for sigma in iter_schedulers(c, limit):
        d, _ = extreme_derivative(c, c.init, sigma, splits=0)
        points.add(outcome(d, c.plts, c.omega))
    return OutcomePolytope.hull(c.omega, points)


@functools.lru_cache(maxsize=4096)
def apply_derivation_based(
    test: SourceModel,
    proc: SourceModel,
    init_test: str | None = None,
    init_proc: str | None = None,
    limit: int = DEFAULT_MAX_SCHEDULERS,
) -> OutcomePolytope:
    return outcomes_by_derivation(prune(compose(test, proc, init_test, init_proc)), limit)


# --- LP characterisation of weak derivations ---------------------------------

LinExpr = dict  # key -> coefficient; key None is the constant term


def _add(acc: LinExpr, expr: Mapping, scale: Fraction = Fraction(1)) -> None:
    for k, v in expr.items():
        acc[k] = acc.get(k, Fraction(0)) + scale * v


def add_derivation(
    model: lp.LinearProgram,
    p: PLTS,
    source: Mapping[str, LinExpr],
    tag: Hashable,
    may_stop: Callable[[str], bool] = lambda s: True,
    extreme: bool = False,
    depth: int | None = None,
) -> dict[str, LinExpr]:
    """Add the occupation system of ``source ==> result`` to ``model``.

    ``source`` maps states to linear expressions; the returned mapping gives
    the derivative's weight at each state as a linear expression.  Without
    ``depth`` the untimed conservation system is used, which is only sound on
    convergent pLTSs (no circulation possible).  With ``depth`` the system is
    unrolled into that many levels, which is sound everywhere but only finds
    derivations that finish within ``depth`` tau-steps.
    """
    reach = sorted(p.reachable(source, lambda l: l.is_tau))
    levels = [None] if depth is None else list(range(depth + 1))
    inflow: dict[tuple, LinExpr] = {}
    for s in reach:
        inflow[(levels[0], s)] = {}
        _add(inflow[(levels[0], s)], source.get(s, {}))
    result: dict[str, LinExpr] = {s: {} for s in reach}
    outflow: dict[tuple, LinExpr] = {}
    for lvl_i, lvl in enumerate(levels):
        nxt = lvl if depth is None else (levels[lvl_i + 1] if lvl_i + 1 < len(levels) else None)
        for s in reach:
            out = outflow[(lvl, s)] = {}
            if may_stop(s) and (p.is_stable(s) or not extreme):
                key = model.var((tag, "stop", lvl, s))
                out[key] = Fraction(1)
                result[s][key] = Fraction(1)
            if depth is None or nxt is not None:
                for i, tr in enumerate(p.tau_moves(s)):
                    key = model.var((tag, "flow", lvl, s, i))
                    out[key] = Fraction(1)
                    for u, pr in tr.target.items():
                        acc = inflow.setdefault((nxt, u), {})
                        acc[key] = acc.get(key, Fraction(0)) + pr
    # conservation: inflow(node) == outflow(node), once every flow variable exists
    for node, out in outflow.items():
        row = dict(inflow.get(node, {}))
        _add(row, out, Fraction(-1))
        const = row.pop(None, Fraction(0))
        row = {k: v for k, v in row.items() if v}
        if row or const:
            model.add_eq(row, -const)
    return result


@dataclass(frozen=True)
class OccupationSolution:
    flow: Mapping[tuple[str, int], Fraction] = field(default_factory=dict)
    stop: Mapping[str, Fraction] = field(default_factory=dict)
    bounded: bool = False

    @property
    def derivative(self) -> Subdist:
        return Subdist(self.stop)


def _extract(sol: lp.LPSolution, tag) -> OccupationSolution:
    flow: dict = {}
    stop: dict = {}
    for key, v in sol.values.items():
        if isinstance(key, tuple) and key and key[0] == tag:
            if key[1] == "flow":
                k = (key[3], key[4])
                flow[k] = flow.get(k, Fraction(0)) + v
            elif key[1] == "stop":
                stop[key[3]] = stop.get(key[3], Fraction(0)) + v
    return OccupationSolution(flow, stop)


def require_convergent(p: PLTS, init, unroll_depth: int | None) -> int | None:
    """Return the unrolling depth to use, or None for the exact system."""
    conv = is_convergent(p, init)
    if conv:
        return None
    if unroll_depth is None:
        raise DivergentInput(f"divergent states {sorted(conv.divergent_states)}")
    return unroll_depth


def const(d: Subdist) -> dict[str, LinExpr]:
    return {s: {None: w} for s, w in d.items()}


def weak_derivative_check(
    p: PLTS,
    src: Subdist,
    tgt: Subdist,
    extreme: bool = False,
    unroll_depth: int | None = None,
) -> OccupationSolution | None:
    """Decide ``src ==> tgt`` (``src ==>> tgt`` when extreme) by exact LP."""
    if extreme and not p.is_stable_dist(tgt):
        return None
    depth = require_convergent(p, src, unroll_depth)
    model = lp.LinearProgram()
    result = add_derivation(model, p, const(src), "d", extreme=extreme, depth=depth)
    if not tgt.support <= set(result):
        return None
    for s, expr in result.items():
        if expr:
            model.add_eq(expr, tgt.get(s))
        elif tgt.get(s):
            return None
    sol = model.solve()
    if not sol.feasible:
        return None
    occ = _extract(sol, "d")
    return OccupationSolution(occ.flow, occ.stop, bounded=depth is not None)
