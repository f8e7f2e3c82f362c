"""Applying a test to a process, and pruning to omega-respecting form."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .core import PLTS, TAU, Subdist, Transition
from .frontend import PROCESS, TEST, ModelError, SourceModel


class AlphabetMismatch(ModelError):
    pass


def pair_name(t: str, p: str) -> str:
    return f"{t}|{p}"


def product(theta: Subdist, delta: Subdist) -> dict[tuple[str, str], Fraction]:
    return {(t, p): wt * wp for t, wt in theta.items() for p, wp in delta.items()}


@dataclass(frozen=True)
class ComposedPLTS:
    plts: PLTS
    init: Subdist
    origin: Mapping[str, tuple[str, str]]
    omega: tuple[str, ...]

    def __hash__(self) -> int:
        return hash((self.plts, self.init))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComposedPLTS):
            return NotImplemented
        return (self.plts, self.init, self.omega) == (other.plts, other.init, other.omega)


def compose(test: SourceModel, proc: SourceModel, init_test: str | None = None, init_proc: str | None = None) -> ComposedPLTS:
    """Build the reachable part of ``test || proc`` synchronising on every visible action."""
    if test.kind != TEST or proc.kind != PROCESS:
        raise AlphabetMismatch("compose expects a test and a process")
    clash = set(proc.actions) & set(test.omega)
    if clash:
        raise AlphabetMismatch(f"process actions {sorted(clash)} collide with success labels")
    tp, pp = test.plts, proc.plts
    theta = test.distribution(init_test)
    delta = proc.distribution(init_proc)

    def dist(weights: Mapping[tuple[str, str], Fraction]) -> Subdist:
        return Subdist({pair_name(t, p): w for (t, p), w in weights.items()})

    init_w = product(theta, delta)
    origin = {pair_name(t, p): (t, p) for t, p in init_w}
    queue = deque(sorted(init_w))
    seen = set(init_w)
    transitions = []
    while queue:
        t, p = queue.popleft()
        src = pair_name(t, p)
        moves: list[tuple] = []
        for tr in tp.outgoing(t):
            if not tr.label.is_visible:  # par.l
                moves.append((tr.label, product(tr.target, Subdist.point(p))))
        for tr in pp.outgoing(p):
            if not tr.label.is_visible:  # par.r
                moves.append((tr.label, product(Subdist.point(t), tr.target)))
        for ttr in tp.outgoing(t):
            if ttr.label.is_visible:  # par.i
                for ptr in pp.moves(p, ttr.label):
                    moves.append((TAU, product(ttr.target, ptr.target)))
        for label, weights in moves:
            transitions.append(Transition(src, label, dist(weights)))
            for key in sorted(weights):
                if key not in seen:
                    seen.add(key)
                    origin[pair_name(*key)] = key
                    queue.append(key)
    omega_labels = frozenset(l for l in tp.alphabet if l.is_success)
    plts = PLTS(frozenset(origin), omega_labels, tuple(transitions))
    return ComposedPLTS(plts, dist(init_w), origin, test.omega)


def is_omega_respecting(p: PLTS) -> bool:
    return all(
        p.is_stable(s) for s in p.states if any(l.is_success for l in p.enabled(s))
    )


def prune(c: ComposedPLTS) -> ComposedPLTS:
    """Drop every tau-transition leaving a success state."""
    p = c.plts
    success_states = {s for s in p.states if any(l.is_success for l in p.enabled(s))}
    kept = tuple(tr for tr in p.transitions if not (tr.label.is_tau and tr.source in success_states))
    return ComposedPLTS(PLTS(p.states, p.alphabet, kept), c.init, c.origin, c.omega)


def as_model(c: ComposedPLTS, name: str = "composed") -> SourceModel:
    """View a composition as a (test-kind) SourceModel so it can be serialised."""
    return SourceModel(name, TEST, c.plts, (("init", c.init),))


def as_process_plts(c: ComposedPLTS) -> PLTS:
    """The composition with its success labels turned into ordinary actions.

    Lets the failure-simulation checks, which refuse only visible actions,
    run on compositions.
    """
    from .core import action

    relabel = {l: action(l.name) for l in c.plts.alphabet if l.is_success}
    trs = tuple(Transition(tr.source, relabel.get(tr.label, tr.label), tr.target) for tr in c.plts.transitions)
    return PLTS(c.plts.states, frozenset(relabel.values()), trs)
