"""Weak actions, weak refusals and failure simulation on convergent pLTSs.

A candidate relation maps each state of the simulated pLTS to a finite set
of generator subdistributions over the simulating pLTS; the state is related
to every convex combination of its generators.  All checks are exact LPs
built from the occupation system in :mod:`preorderlab.derivation`.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import lp
from .core import PLTS, TAU, Label, Subdist
from .derivation import (
    DivergentInput,
    LinExpr,
    OccupationSolution,
    _add,
    absorb,
    add_derivation,
    divergent_core,
    const,
    is_convergent,
    require_convergent,
)
from .frontend import ModelError, SourceModel
from .preorders import Verdict
from .resolution import StateSpaceTooLarge

DEFAULT_MAX_POLICIES = 2**16


class CandidateInvalid(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("candidate is not a failure simulation: " + "; ".join(map(str, self.violations[:5])))


@dataclass(frozen=True)
class FailureSimCandidate:
    pairs: tuple[tuple[str, tuple[Subdist, ...]], ...]

    @classmethod
    def of(cls, pairs: Mapping[str, Iterable[Subdist]]) -> "FailureSimCandidate":
        return cls(tuple(sorted((s, tuple(sorted(set(g), key=repr))) for s, g in pairs.items())))

    def as_dict(self) -> dict[str, tuple[Subdist, ...]]:
        return dict(self.pairs)

    def generators(self, s: str) -> tuple[Subdist, ...]:
        return self.as_dict().get(s, ())

    def without(self, drop: Iterable[tuple[str, Subdist]]) -> "FailureSimCandidate":
        drop = set(drop)
        return FailureSimCandidate.of({s: [g for g in gens if (s, g) not in drop] for s, gens in self.pairs})

    def size(self) -> int:
        return sum(len(g) for _, g in self.pairs)


_CAND_LINE = re.compile(r"^\s*(\S+)\s+\|-\s*\{(.*)\}\s*$")


def parse_candidate(text: str) -> FailureSimCandidate:
    """Read ``s |- { frac id, ... }`` lines; repeated keys add generators."""
    pairs: dict[str, list[Subdist]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _CAND_LINE.match(line)
        if m is None:
            raise ModelError("expected 's |- { frac id, ... }'", n, 1)
        body = m.group(2).strip()
        entries = []
        if body:
            for part in body.split(","):
                bits = part.split()
                if len(bits) != 2:
                    raise ModelError(f"bad generator entry {part.strip()!r}", n, 1)
                entries.append((bits[1], Fraction(bits[0])))
        pairs.setdefault(m.group(1), []).append(Subdist(entries))
    return FailureSimCandidate.of(pairs)


def serialize_candidate(r: FailureSimCandidate) -> str:
    lines = []
    for s, gens in r.pairs:
        for g in gens:
            lines.append(f"{s} |- {{ " + ", ".join(f"{w} {u}" for u, w in g.sorted_items()) + " }")
    return "\n".join(lines) + "\n"


def actions_of(*ps: PLTS) -> tuple[Label, ...]:
    return tuple(sorted({l for p in ps for l in p.alphabet if not l.is_tau}))


# --- weak actions and refusals -------------------------------------------------


def add_weak_action(
    model: lp.LinearProgram,
    p: PLTS,
    source: Mapping[str, LinExpr],
    label: Label,
    tag,
    depth: int | None = None,
) -> dict[str, LinExpr]:
    """Add ``source ==label==> result`` to the model; returns the result expressions."""
    if label.is_tau:
        return add_derivation(model, p, source, (tag, "pre"), depth=depth)
    pre = add_derivation(model, p, source, (tag, "pre"), may_stop=lambda s: bool(p.moves(s, label)), depth=depth)
    post: dict[str, LinExpr] = {}
    for s, expr in pre.items():
        trs = p.moves(s, label)
        if not expr or not trs:
            continue
        keys = [model.var((tag, "act", s, i)) for i in range(len(trs))]
        row = {k: Fraction(1) for k in keys}
        _add(row, expr, Fraction(-1))
        model.add_eq(row, 0)
        for k, tr in zip(keys, trs):
            for u, pr in tr.target.items():
                acc = post.setdefault(u, {})
                acc[k] = acc.get(k, Fraction(0)) + pr
    if not post:
        return {}
    return add_derivation(model, p, post, (tag, "post"), depth=depth)


def _equate(model: lp.LinearProgram, left: Mapping[str, LinExpr], right: Mapping[str, LinExpr]) -> None:
    for u in sorted(set(left) | set(right)):
        row: LinExpr = {}
        _add(row, left.get(u, {}))
        _add(row, right.get(u, {}), Fraction(-1))
        c = row.pop(None, Fraction(0))
        row = {k: v for k, v in row.items() if v}
        model.add_eq(row, -c)


@dataclass(frozen=True)
class WeakWitness:
    values: Mapping
    bounded: bool = False


def weak_action(p: PLTS, src: Subdist, label: Label, tgt: Subdist, unroll_depth: int | None = None) -> WeakWitness | None:
    """Decide ``src ==label==> tgt``; tau means the reflexive weak derivation."""
    depth = require_convergent(p, src, unroll_depth)
    model = lp.LinearProgram()
    result = add_weak_action(model, p, const(src), label, "w", depth)
    if not tgt.support <= set(result) and tgt:
        return None
    _equate(model, result, const(tgt))
    sol = model.solve()
    if not sol.feasible:
        return None
    return WeakWitness(sol.values, depth is not None)


@dataclass(frozen=True)
class RefusalQuery:
    subject: Subdist
    refused: frozenset[Label]

    def __post_init__(self):
        object.__setattr__(self, "refused", frozenset(self.refused))
        if any(not l.is_visible for l in self.refused):
            raise ValueError("refusal sets contain visible actions only")


def refuses(p: PLTS, s: str, refused: Iterable[Label]) -> bool:
    enabled = p.enabled(s)
    return TAU not in enabled and not (enabled & frozenset(refused))


def weak_refusal(p: PLTS, q: RefusalQuery, unroll_depth: int | None = None) -> OccupationSolution | None:
    """A derivation of ``q.subject`` ending where every state refuses the set."""
    depth = require_convergent(p, q.subject, unroll_depth)
    model = lp.LinearProgram()
    add_derivation(model, p, const(q.subject), "r", may_stop=lambda s: refuses(p, s, q.refused), depth=depth)
    sol = model.solve()
    if not sol.feasible:
        return None
    stop = {}
    for key, v in sol.values.items():
        if isinstance(key, tuple) and key[1] == "stop":
            stop[key[3]] = stop.get(key[3], Fraction(0)) + v
    return OccupationSolution({}, stop, depth is not None)


def maximal_refusals(p: PLTS, src: Subdist, acts: Sequence[Label]) -> list[frozenset[Label]]:
    """Maximal subsets of ``acts`` that ``src`` can weakly refuse."""
    found: list[frozenset[Label]] = []
    for size in range(len(acts), -1, -1):
        for combo in itertools.combinations(acts, size):
            a = frozenset(combo)
            if any(a <= f for f in found):
                continue
            if weak_refusal(p, RefusalQuery(src, a)) is not None:
                found.append(a)
    return found


# --- vertices of weak-derivative sets ------------------------------------------


def derivative_vertices(p: PLTS, src: Subdist, label: Label, limit: int = DEFAULT_MAX_POLICIES) -> set[Subdist]:
    """Derivatives of ``src ==label==>`` under every deterministic memoryless policy.

    Their convex hull is the whole set of weak label-derivatives of ``src``
    on a convergent pLTS.  Policies that strand mass before ``label`` can be
    performed are discarded.
    """
    pre_states = sorted(p.reachable(src, lambda l: l.is_tau))
    menus: list[tuple[tuple, list]] = []
    if label.is_tau:
        for s in pre_states:
            menus.append((("post", s), ["stop"] + [("tau", i) for i in range(len(p.tau_moves(s)))]))
    else:
        post_src = set()
        for s in pre_states:
            opts = [("tau", i) for i in range(len(p.tau_moves(s)))]
            opts += [("act", i) for i in range(len(p.moves(s, label)))]
            for tr in p.moves(s, label):
                post_src |= tr.target.support
            menus.append((("pre", s), opts or ["stuck"]))
        for s in sorted(p.reachable(post_src, lambda l: l.is_tau)):
            menus.append((("post", s), ["stop"] + [("tau", i) for i in range(len(p.tau_moves(s)))]))
    total = math.prod(len(o) for _, o in menus)
    if total > limit:
        raise StateSpaceTooLarge(f"{total} derivation policies exceed the bound {limit}")
    phase0 = "post" if label.is_tau else "pre"
    init = {(phase0, s): w for s, w in src.items()}
    out = set()
    nodes = [n for n, _ in menus]
    for combo in itertools.product(*(o for _, o in menus)):
        step = {}
        for (phase, s), choice in zip(nodes, combo):
            if choice in ("stop", "stuck"):
                continue
            kind, i = choice
            if kind == "tau":
                tr = p.tau_moves(s)[i]
                step[(phase, s)] = {(phase, u): pr for u, pr in tr.target.items()}
            else:
                tr = p.moves(s, label)[i]
                step[(phase, s)] = {("post", u): pr for u, pr in tr.target.items()}
        res = absorb(init, step)
        if any(node[0] == "pre" for node in res):
            continue
        d = Subdist({node[1]: w for node, w in res.items()})
        if d.mass == src.mass:
            out.add(d)
    return out


# --- lifted membership and candidate validation ------------------------------


def add_membership(model: lp.LinearProgram, r: Mapping[str, Sequence[Subdist]], gamma: Subdist, tag) -> dict[str, LinExpr] | None:
    """Expressions for a Delta' with ``gamma`` lifted-related to it, or None."""
    result: dict[str, LinExpr] = {}
    for s, w in gamma.sorted_items():
        gens = r.get(s)
        if not gens:
            return None
        keys = [model.var((tag, "m", s, i)) for i in range(len(gens))]
        model.add_eq({k: 1 for k in keys}, w)
        for k, g in zip(keys, gens):
            for u, pr in g.items():
                acc = result.setdefault(u, {})
                acc[k] = acc.get(k, Fraction(0)) + pr
    return result


def lifted_membership(r: FailureSimCandidate | Mapping, gamma: Subdist, delta: Subdist) -> dict | None:
    """Weights ``w(s, i)`` decomposing gamma and delta through the generators."""
    rel = r.as_dict() if isinstance(r, FailureSimCandidate) else r
    model = lp.LinearProgram()
    member = add_membership(model, rel, gamma, "m")
    if member is None:
        return None
    _equate(model, member, const(delta))
    sol = model.solve()
    if not sol.feasible:
        return None
    return {(k[2], k[3]): v for k, v in sol.values.items() if isinstance(k, tuple) and k[1] == "m"}


def _matchable(right: PLTS, delta: Subdist, label: Label, target: Subdist, rel: Mapping) -> bool:
    model = lp.LinearProgram()
    member = add_membership(model, rel, target, "m")
    if member is None:
        return False
    if not set(member) <= right.states:
        return False
    derived = add_weak_action(model, right, const(delta), label, "a")
    _equate(model, derived, member)
    return model.solve().feasible


@dataclass(frozen=True)
class ClauseI:
    state: str
    generator: Subdist
    label: str
    derivative: Subdist

    def __str__(self):
        return f"(i) {self.state} |- {self.generator!r}: ={self.label}=> {self.derivative!r} unmatched"


@dataclass(frozen=True)
class ClauseII:
    state: str
    generator: Subdist
    refused: tuple[str, ...]

    def __str__(self):
        return f"(ii) {self.state} |- {self.generator!r}: cannot refuse {list(self.refused)}"


def _check_convergent(p: PLTS, states: Iterable[str]) -> None:
    states = set(states)
    if not states:
        return
    core, _ = divergent_core(p)
    bad = core & p.reachable(states)
    if bad:
        raise DivergentInput(f"divergent states {sorted(bad)}")


def validate_candidate(left: PLTS, right: PLTS, r: FailureSimCandidate, limit: int = DEFAULT_MAX_POLICIES) -> list:
    """Violations of the failure-simulation clauses; empty iff ``r`` is one.

    ``r`` maps states of ``left`` (the simulated side) to generator
    subdistributions over ``right`` (the simulating side).
    """
    rel = r.as_dict()
    _check_convergent(left, rel)
    _check_convergent(right, {u for gens in rel.values() for g in gens for u in g})
    acts = actions_of(left, right)
    out = []
    for s, gens in r.pairs:
        point = Subdist.point(s)
        verts = {label: sorted(derivative_vertices(left, point, label, limit), key=repr) for label in (TAU,) + acts}
        refusals = maximal_refusals(left, point, acts)
        for g in gens:
            for label, targets in verts.items():
                for gv in targets:
                    if not _matchable(right, g, label, gv, rel):
                        out.append(ClauseI(s, g, label.name, gv))
            for a in refusals:
                if weak_refusal(right, RefusalQuery(g, a)) is None:
                    out.append(ClauseII(s, g, tuple(sorted(l.name for l in a))))
    return out


_NO_MATCH = "no weak derivative of the left initial distribution is related to the right one"


def fs_leq(
    left: SourceModel,
    right: SourceModel,
    r: FailureSimCandidate,
    init_left: str | None = None,
    init_right: str | None = None,
    validate: bool = True,
) -> Verdict:
    """``left <=FS right`` witnessed by ``r``.

    ``r`` maps states of ``right`` to subdistributions over ``left``: the
    simulating process is the one on the left of the preorder.
    """
    delta = left.distribution(init_left)
    gamma = right.distribution(init_right)
    for m, d in ((left, delta), (right, gamma)):
        conv = is_convergent(m.plts, d)
        if not conv:
            raise DivergentInput(f"{m.name}: divergent states {sorted(conv.divergent_states)}")
    if validate:
        violations = validate_candidate(right.plts, left.plts, r)
        if violations:
            raise CandidateInvalid(violations)
    model = lp.LinearProgram()
    member = add_membership(model, r.as_dict(), gamma, "m")
    if member is None or not set(member) <= left.plts.states:
        return Verdict(False, violations=(_NO_MATCH,))
    derived = add_derivation(model, left.plts, const(delta), "d")
    _equate(model, derived, member)
    if not model.solve().feasible:
        return Verdict(False, violations=(_NO_MATCH,))
    return Verdict(True)


def bounded_candidate_search(
    left: SourceModel,
    right: SourceModel,
    depth: int,
    init_left: str | None = None,
    init_right: str | None = None,
    limit: int = DEFAULT_MAX_POLICIES,
) -> FailureSimCandidate | None:
    """Look for a candidate showing ``left <=FS right``; None means unknown.

    Generators start as every derivative vertex reachable from left's
    initial distribution in at most ``depth`` weak steps, plus every point
    distribution on a reachable left state; failing generators are removed
    until the candidate is stable.
    """
    delta = left.distribution(init_left)
    gamma = right.distribution(init_right)
    for m, d in ((left, delta), (right, gamma)):
        conv = is_convergent(m.plts, d)
        if not conv:
            raise DivergentInput(f"{m.name}: divergent states {sorted(conv.divergent_states)}")
    lp_, rp = left.plts, right.plts
    acts = actions_of(lp_, rp)
    gens = {delta} | {Subdist.point(s) for s in lp_.reachable(delta)}
    frontier = {delta}
    for _ in range(depth):
        new = set()
        for d in frontier:
            for label in (TAU,) + acts:
                new |= derivative_vertices(lp_, d, label, limit)
        frontier = new - gens
        gens |= new
        if not frontier:
            break
    keys = sorted(rp.reachable(gamma))
    cand = FailureSimCandidate.of({s: gens for s in keys})
    while True:
        violations = validate_candidate(rp, lp_, cand, limit)
        if not violations:
            break
        cand = cand.without((v.state, v.generator) for v in violations)
    if fs_leq(left, right, cand, init_left, init_right, validate=False):
        return cand
    return None
