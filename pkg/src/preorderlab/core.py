"""Subdistributions, probabilistic labelled transition systems and lifting.

All weights are :class:`fractions.Fraction`; nothing in this package uses
floating point.  State identifiers are plain strings.
"""

from __future__ import annotations

import functools
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from . import lp

StateId = str

VISIBLE = "visible"
INTERNAL = "tau"
SUCCESS = "success"


class MassOverflow(ValueError):
    """A pointwise sum of subdistributions exceeds 1 somewhere."""


class MissingValue(KeyError):
    """A function was not defined on some state of a support."""


@dataclass(frozen=True, order=True)
class Label:
    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in (VISIBLE, INTERNAL, SUCCESS):
            raise ValueError(f"unknown label kind {self.kind!r}")

    @property
    def is_tau(self) -> bool:
        return self.kind == INTERNAL

    @property
    def is_success(self) -> bool:
        return self.kind == SUCCESS

    @property
    def is_visible(self) -> bool:
        return self.kind == VISIBLE

    def __str__(self) -> str:
        return self.name


TAU = Label(INTERNAL, "tau")


def action(name: str) -> Label:
    return Label(VISIBLE, name)


def success(name: str) -> Label:
    return Label(SUCCESS, name)


def _frac(v) -> Fraction:
    if isinstance(v, float):
        raise TypeError("floating point weights are not accepted")
    return Fraction(v)


class Subdist(Mapping):
    """An immutable finite subdistribution: state -> positive rational, mass <= 1.

    Zero weights are dropped on construction, so equality and hashing are
    canonical.  Constructed from a mapping or from ``(state, weight)`` pairs;
    repeated states accumulate.
    """

    __slots__ = ("_w", "_hash")

    def __init__(self, weights=()):
        acc: dict[StateId, Fraction] = {}
        items = weights.items() if isinstance(weights, Mapping) else weights
        for s, w in items:
            w = _frac(w)
            if w < 0:
                raise ValueError(f"negative weight {w} for {s!r}")
            if w:
                acc[s] = acc.get(s, Fraction(0)) + w
        if any(w > 1 for w in acc.values()) or sum(acc.values(), Fraction(0)) > 1:
            raise MassOverflow(f"mass exceeds 1: {acc}")
        self._w = acc
        self._hash = None

    @classmethod
    def point(cls, s: StateId) -> "Subdist":
        return cls({s: 1})

    def __getitem__(self, s) -> Fraction:
        return self._w[s]

    def get(self, s, default=Fraction(0)):
        return self._w.get(s, default)

    def __iter__(self) -> Iterator[StateId]:
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __eq__(self, other) -> bool:
        if isinstance(other, Subdist):
            return self._w == other._w
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._w.items()))
        return self._hash

    @property
    def support(self) -> frozenset[StateId]:
        return frozenset(self._w)

    @property
    def mass(self) -> Fraction:
        return sum(self._w.values(), Fraction(0))

    @property
    def is_full(self) -> bool:
        return self.mass == 1

    def scale(self, p) -> "Subdist":
        p = _frac(p)
        return Subdist({s: p * w for s, w in self._w.items()})

    def __add__(self, other: "Subdist") -> "Subdist":
        return combine([(1, self), (1, other)])

    def __rmul__(self, p) -> "Subdist":
        return self.scale(p)

    def sorted_items(self) -> list[tuple[StateId, Fraction]]:
        return sorted(self._w.items())

    def __repr__(self) -> str:
        if not self._w:
            return "Subdist({})"
        return "Subdist({" + ", ".join(f"{w} {s}" for s, w in self.sorted_items()) + "})"


EPSILON = Subdist()


def mass(d: Subdist) -> Fraction:
    return d.mass


def combine(parts: Iterable[tuple[object, Subdist]]) -> Subdist:
    """Pointwise weighted sum ``sum(p * d)``; raises MassOverflow above 1."""
    acc: dict[StateId, Fraction] = {}
    for p, d in parts:
        p = _frac(p)
        if p < 0:
            raise ValueError("combination weights must be nonnegative")
        for s, w in d.items():
            acc[s] = acc.get(s, Fraction(0)) + p * w
    for s, w in acc.items():
        if w > 1:
            raise MassOverflow(f"state {s!r} receives weight {w}")
    return Subdist(acc)


def expected_value(d: Subdist, f: Mapping[StateId, tuple] | Callable, dim: int | None = None) -> tuple[Fraction, ...]:
    """Componentwise ``sum(d(s) * f(s))`` for tuple-valued f."""
    get = f if callable(f) else None
    total: list[Fraction] | None = None if dim is None else [Fraction(0)] * dim
    for s, w in d.items():
        try:
            v = get(s) if get else f[s]
        except KeyError:
            raise MissingValue(s) from None
        if total is None:
            total = [Fraction(0)] * len(v)
        for i, x in enumerate(v):
            total[i] += w * x
    if total is None:
        if get is None and len(f):
            total = [Fraction(0)] * len(next(iter(f.values())))
        else:
            total = []
    return tuple(total)


def image(d: Subdist, f: Mapping[StateId, StateId] | Callable) -> Subdist:
    """Push ``d`` forward along f."""
    acc: dict[StateId, Fraction] = {}
    for s, w in d.items():
        try:
            t = f(s) if callable(f) else f[s]
        except KeyError:
            raise MissingValue(s) from None
        acc[t] = acc.get(t, Fraction(0)) + w
    return Subdist(acc)


@dataclass(frozen=True)
class Transition:
    source: StateId
    label: Label
    target: Subdist

    def __str__(self) -> str:
        return f"{self.source} -{self.label}-> {self.target!r}"


@dataclass(frozen=True)
class PLTS:
    """A finitary pLTS.

    ``alphabet`` lists the non-internal labels that may occur; tau is always
    permitted.  Transitions are kept in a canonical order: grouped by source
    (sorted), declaration order within a source.  That per-source order is
    what scheduler indices refer to.
    """

    states: frozenset[StateId]
    alphabet: frozenset[Label]
    transitions: tuple[Transition, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        trs = tuple(sorted(self.transitions, key=lambda tr: tr.source))
        object.__setattr__(self, "transitions", trs)
        for tr in trs:
            if tr.source not in self.states:
                raise ValueError(f"undeclared source state {tr.source!r}")
            if not tr.label.is_tau and tr.label not in self.alphabet:
                raise ValueError(f"label {tr.label} not in alphabet")
            if tr.target.mass != 1:
                raise ValueError(f"transition target of {tr.source!r} is not a full distribution")
            missing = tr.target.support - self.states
            if missing:
                raise ValueError(f"undeclared target states {sorted(missing)}")

    @functools.cached_property
    def _out(self) -> dict[StateId, tuple[Transition, ...]]:
        out: dict[StateId, list[Transition]] = {s: [] for s in self.states}
        for tr in self.transitions:
            out[tr.source].append(tr)
        return {s: tuple(v) for s, v in out.items()}

    def outgoing(self, s: StateId) -> tuple[Transition, ...]:
        return self._out[s]

    def moves(self, s: StateId, label: Label) -> tuple[Transition, ...]:
        return tuple(tr for tr in self._out[s] if tr.label == label)

    def tau_moves(self, s: StateId) -> tuple[Transition, ...]:
        return self.moves(s, TAU)

    def enabled(self, s: StateId) -> frozenset[Label]:
        return frozenset(tr.label for tr in self._out[s])

    def is_stable(self, s: StateId) -> bool:
        return not any(tr.label.is_tau for tr in self._out[s])

    def is_stable_dist(self, d: Subdist) -> bool:
        return all(self.is_stable(s) for s in d)

    @property
    def visible_labels(self) -> frozenset[Label]:
        return frozenset(l for l in self.alphabet if not l.is_tau)

    def reachable(self, init: Iterable[StateId], labels: Callable[[Label], bool] | None = None) -> frozenset[StateId]:
        seen = set(init)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for tr in self._out[s]:
                if labels is not None and not labels(tr.label):
                    continue
                for u in tr.target:
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
        return frozenset(seen)

    def restrict(self, keep: Iterable[StateId]) -> "PLTS":
        keep = frozenset(keep)
        return PLTS(keep, self.alphabet, tuple(tr for tr in self.transitions if tr.source in keep))

    def is_deterministic(self) -> bool:
        seen = set()
        for tr in self.transitions:
            key = (tr.source, tr.label)
            if key in seen:
                return False
            seen.add(key)
        return True


@dataclass(frozen=True)
class LiftedWitness:
    """Finite decomposition ``src = sum w <s>`` and ``tgt = sum w * target``."""

    decomposition: tuple[tuple[Fraction, StateId, Subdist], ...]

    @property
    def source(self) -> Subdist:
        return combine((w, Subdist.point(s)) for w, s, _ in self.decomposition)

    @property
    def target(self) -> Subdist:
        return combine((w, t) for w, _, t in self.decomposition)


def check_lifted_transition(p: PLTS, src: Subdist, label: Label, tgt: Subdist) -> LiftedWitness | None:
    """Decide ``src --label--> tgt`` for the lifted transition relation.

    Decided as LP feasibility over per-transition weights; the returned
    witness replays exactly.
    """
    if not label.is_tau and label not in p.alphabet:
        raise ValueError(f"label {label} not in alphabet")
    if src.mass != tgt.mass:
        return None
    model = lp.LinearProgram()
    columns: dict[StateId, list[tuple]] = {}
    for s, w in src.items():
        trs = p.moves(s, label)
        if not trs:
            return None
        keys = [model.var((s, i)) for i in range(len(trs))]
        columns[s] = list(zip(keys, trs))
        model.add_eq({k: 1 for k in keys}, w)
    universe = set(tgt.support)
    for cols in columns.values():
        for _, tr in cols:
            universe |= tr.target.support
    for u in sorted(universe):
        coeffs = {}
        for cols in columns.values():
            for k, tr in cols:
                if u in tr.target:
                    coeffs[k] = tr.target[u]
        if not coeffs:
            if tgt.get(u):
                return None
            continue
        model.add_eq(coeffs, tgt.get(u))
    sol = model.solve()
    if not sol.feasible:
        return None
    decomposition = tuple(
        (sol[k], s, tr.target) for s, cols in sorted(columns.items()) for k, tr in cols if sol[k]
    )
    return LiftedWitness(decomposition)
