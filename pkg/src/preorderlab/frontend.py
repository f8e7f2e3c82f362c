"""Reader and writer for the textual pLTS format.

::

    model process|test <name>
    alphabet a, b              # visible actions
    success w1, w2             # tests only; names start with 'w'
    state <id> { <label> -> { <frac> <id>, ... }; ... }
    init <name> = { <frac> <id>, ... }

Weights are exact fractions (``1``, ``1/2``); decimals are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .core import PLTS, TAU, Label, Subdist, Transition, action, success

PROCESS = "process"
TEST = "test"

KEYWORDS = {"model", "alphabet", "success", "state", "init"}


class ModelError(Exception):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class ModelSyntaxError(ModelError):
    pass


class UndeclaredState(ModelError):
    pass


class WeightSumNotOne(ModelError):
    pass


class IllegalLabel(ModelError):
    pass


class InvalidTest(ModelError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("test violates well-formedness: " + "; ".join(map(str, self.violations)))


@dataclass(frozen=True)
class SourceModel:
    name: str
    kind: str
    plts: PLTS
    distributions: tuple[tuple[str, Subdist], ...]

    @property
    def omega(self) -> tuple[str, ...]:
        return tuple(sorted(l.name for l in self.plts.alphabet if l.is_success))

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(sorted(l.name for l in self.plts.alphabet if l.is_visible))

    def distribution(self, name: str | None = None) -> Subdist:
        """Named initial distribution; ``None`` picks the only one."""
        if name is None:
            if len(self.distributions) != 1:
                names = [n for n, _ in self.distributions]
                raise ModelError(f"model {self.name!r} declares {len(names)} distributions {names}; name one")
            return self.distributions[0][1]
        for n, d in self.distributions:
            if n == name:
                return d
        raise ModelError(f"model {self.name!r} has no distribution {name!r}")


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
    | (?P<arrow>->) | (?P<punct>[{};,=])
    | (?P<number>\d+(?:/\d+)?(?![\w.]))
    | (?P<ident>[A-Za-z_][A-Za-z0-9_.'|]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> Iterator[_Tok]:
    line, start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            yield _Tok(kind, m.group(), line, pos - start + 1)
        pos = m.end()
    yield _Tok("eof", "", line, pos - start + 1)


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_lex(text))
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None) -> ModelSyntaxError:
        tok = tok or self.tok
        return ModelSyntaxError(msg, tok.line, tok.col)

    def next(self) -> _Tok:
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def ident(self, what: str) -> _Tok:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def ident_list(self) -> list[_Tok]:
        out = []
        if self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
            out.append(self.next())
            while self.tok.text == ",":
                self.next()
                out.append(self.ident("identifier"))
        return out

    def dist(self) -> tuple[list[tuple[Fraction, _Tok]], _Tok]:
        open_tok = self.expect("{")
        entries = []
        while True:
            if self.tok.kind != "number":
                raise self.error("expected a fraction")
            num = self.next()
            w = Fraction(num.text)
            if w <= 0:
                raise self.error("weights must be positive", num)
            entries.append((w, self.ident("state name")))
            if self.tok.text == ",":
                self.next()
                continue
            self.expect("}")
            return entries, open_tok


def parse_model(text: str, kind: str | None = None, validate: bool = True) -> SourceModel:
    """Parse a model file; tests are checked for well-formedness unless ``validate`` is off."""
    p = _Parser(text)
    p.expect("model")
    kind_tok = p.next()
    if kind_tok.text not in (PROCESS, TEST):
        raise p.error("model kind must be 'process' or 'test'", kind_tok)
    if kind is not None and kind_tok.text != kind:
        raise ModelError(f"expected a {kind} model, found {kind_tok.text}", kind_tok.line, kind_tok.col)
    kind = kind_tok.text
    name = p.ident("model name").text

    actions: dict[str, Label] = {}
    successes: dict[str, Label] = {}
    state_decl: dict[str, _Tok] = {}
    raw_trans: list[tuple[str, _Tok, list]] = []
    inits: list[tuple[str, list]] = []
    refs: list[_Tok] = []

    def checked_dist() -> list:
        entries, open_tok = p.dist()
        total = sum((w for w, _ in entries), Fraction(0))
        if total != 1:
            raise WeightSumNotOne(f"weights sum to {total}, not 1", open_tok.line, open_tok.col)
        refs.extend(t for _, t in entries)
        return entries

    while p.tok.kind != "eof":
        kw = p.next()
        if kw.text == "alphabet":
            for t in p.ident_list():
                if t.text == "tau":
                    raise IllegalLabel("'tau' cannot be declared as an action", t.line, t.col)
                actions[t.text] = action(t.text)
        elif kw.text == "success":
            if kind != TEST:
                raise IllegalLabel("success labels are only allowed in tests", kw.line, kw.col)
            for t in p.ident_list():
                if not t.text.startswith("w"):
                    raise IllegalLabel(f"success label {t.text!r} must start with 'w'", t.line, t.col)
                successes[t.text] = success(t.text)
        elif kw.text == "state":
            sid = p.ident("state name")
            if sid.text in state_decl:
                raise ModelError(f"state {sid.text!r} declared twice", sid.line, sid.col)
            state_decl[sid.text] = sid
            p.expect("{")
            while p.tok.text != "}":
                lab = p.ident("label")
                p.expect("->")
                raw_trans.append((sid.text, lab, checked_dist()))
                if p.tok.text == ";":
                    p.next()
            p.expect("}")
        elif kw.text == "init":
            dname = p.ident("distribution name").text
            p.expect("=")
            inits.append((dname, checked_dist()))
        else:
            raise p.error(f"unexpected {kw.text!r}", kw)

    overlap = set(actions) & set(successes)
    if overlap:
        raise IllegalLabel(f"labels declared both as action and success: {sorted(overlap)}")
    for t in refs:
        if t.text not in state_decl:
            raise UndeclaredState(f"state {t.text!r} is not declared", t.line, t.col)

    transitions = []
    for src, lab, entries in raw_trans:
        if lab.text == "tau":
            label = TAU
        elif lab.text in actions:
            label = actions[lab.text]
        elif lab.text in successes:
            label = successes[lab.text]
        else:
            raise IllegalLabel(f"label {lab.text!r} is not declared", lab.line, lab.col)
        transitions.append(Transition(src, label, Subdist((t.text, w) for w, t in entries)))

    plts = PLTS(frozenset(state_decl), frozenset(actions.values()) | frozenset(successes.values()), tuple(transitions))
    model = SourceModel(name, kind, plts, tuple((n, Subdist((t.text, w) for w, t in e)) for n, e in inits))
    if kind == TEST and validate:
        violations = validate_test(model)
        if violations:
            raise InvalidTest(violations)
    return model


def load_model(path, kind: str | None = None, validate: bool = True) -> SourceModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), kind, validate)


def _fmt_dist(d: Subdist) -> str:
    return "{ " + ", ".join(f"{w} {s}" for s, w in d.sorted_items()) + " }"


def serialize_model(m: SourceModel) -> str:
    """Canonical text form; parsing it yields an equal SourceModel."""
    lines = [f"model {m.kind} {m.name}"]
    lines.append("alphabet " + ", ".join(m.actions) if m.actions else "alphabet")
    if m.kind == TEST:
        lines.append("success " + ", ".join(m.omega) if m.omega else "success")
    for s in sorted(m.plts.states):
        trs = m.plts.outgoing(s)
        if not trs:
            lines.append(f"state {s} {{ }}")
            continue
        body = "; ".join(f"{tr.label.name} -> {_fmt_dist(tr.target)}" for tr in trs)
        lines.append(f"state {s} {{ {body} }}")
    for name, d in m.distributions:
        lines.append(f"init {name} = {_fmt_dist(d)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ViolationA:
    state: str
    labels: tuple[str, ...]

    def __str__(self) -> str:
        return f"state {self.state} enables several success labels {list(self.labels)}"


@dataclass(frozen=True)
class ViolationB:
    state: str
    successor: str
    label: str

    def __str__(self) -> str:
        return f"state {self.state} enables {self.label} but successor {self.successor} does not"


def validate_test(m: SourceModel) -> list:
    """At most one success label per state, and success labels persist into every successor."""
    p = m.plts
    out = []
    for s in sorted(p.states):
        oks = sorted({tr.label.name for tr in p.outgoing(s) if tr.label.is_success})
        if len(oks) > 1:
            out.append(ViolationA(s, tuple(oks)))
        for w in oks:
            bad = set()
            for tr in p.outgoing(s):
                if tr.label.is_success:
                    continue
                for u in tr.target:
                    if success(w) not in p.enabled(u):
                        bad.add(u)
            out.extend(ViolationB(s, u, w) for u in sorted(bad))
    return out
