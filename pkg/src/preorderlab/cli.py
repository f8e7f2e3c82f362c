"""``preorderlab`` command-line entry point.

Exit status: 0 when the command succeeds or the verdict holds, 1 when a
verdict fails, 2 on unusable input.  ``--report FILE`` writes a JSON run
report whose ``comparable`` section depends only on the inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Callable

from . import corpus
from .composition import as_model, compose, prune
from .core import TAU, Subdist, action
from .derivation import (
    DivergentInput,
    NotStable,
    apply_derivation_based,
    extreme_derivative,
    is_convergent,
    outcome,
    weak_derivative_check,
)
from .failsim import (
    CandidateInvalid,
    bounded_candidate_search,
    fs_leq,
    parse_candidate,
    serialize_candidate,
    validate_candidate,
    weak_action,
)
from .frontend import ModelError, SourceModel, _Parser, load_model, serialize_model
from .polytope import fmt_vector
from .preorders import KINDS, preorder_on_suite
from .resolution import (
    DEFAULT_MAX_SCHEDULERS,
    MemorylessScheduler,
    StateSpaceTooLarge,
    apply_resolution_based,
)

OK, FAILS, BAD_INPUT = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: list[str]
    inputs: dict[str, str] = field(default_factory=dict)
    output: list[str] = field(default_factory=list)
    exit_code: int = OK
    seconds: float = 0.0

    def comparable(self) -> dict:
        return {"command": self.command, "inputs": self.inputs, "output": self.output, "exit_code": self.exit_code}

    def to_json(self) -> str:
        try:
            version = metadata.version("artifact")
        except metadata.PackageNotFoundError:
            version = "unknown"
        doc = {
            "comparable": self.comparable(),
            "timing": {"seconds": round(self.seconds, 6)},
            "versions": {"preorderlab": version, "python": sys.version.split()[0]},
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _echo(argv: list[str]) -> list[str]:
    """The command line minus ``--report``, which only says where output goes."""
    out, skip = [], False
    for arg in argv:
        if skip:
            skip = False
        elif arg == "--report":
            skip = True
        elif not arg.startswith("--report="):
            out.append(arg)
    return out


class Session:
    """Collects output lines and input digests for one invocation."""

    def __init__(self, argv: list[str], out):
        self.report = RunReport(_echo(argv))
        self.out = out

    def emit(self, line: str = "") -> None:
        self.report.output.append(line)
        print(line, file=self.out)

    def path(self, name: str) -> Path:
        p = corpus.resolve_path(name)
        if not p.exists():
            raise UsageError(f"no such file: {name}")
        if p.is_file():
            self.report.inputs[str(name)] = hashlib.sha256(p.read_bytes()).hexdigest()
        else:
            for f in sorted(p.rglob("*")):
                if f.is_file():
                    self.report.inputs[str(Path(name) / f.relative_to(p))] = hashlib.sha256(f.read_bytes()).hexdigest()
        return p

    def model(self, name: str, kind: str | None = None) -> SourceModel:
        return load_model(self.path(name), kind)


# --- small input formats ------------------------------------------------------

_SCHED_LINE = re.compile(r"^\s*(\S+)\s*->\s*(\d+|halt)\s*$")


def parse_scheduler(text: str) -> dict[str, int | None]:
    """Lines ``state -> k`` (k-th tau-transition of the state, from 0) or ``state -> halt``."""
    out: dict[str, int | None] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _SCHED_LINE.match(line)
        if m is None:
            raise ModelError("expected 'state -> index'", n, 1)
        out[m.group(1)] = None if m.group(2) == "halt" else int(m.group(2))
    return out


def parse_dist(text: str) -> Subdist:
    """A subdistribution literal such as ``{ 1/2 s, 1/2 t }``; ``{ }`` is empty."""
    if re.fullmatch(r"\s*\{\s*\}\s*", text):
        return Subdist()
    entries, _ = _Parser(text).dist()
    d = Subdist((t.text, w) for w, t in entries)
    if d.mass > 1:
        raise ModelError(f"mass {d.mass} exceeds 1")
    return d


def fmt_dist(d: Subdist) -> str:
    return "{ " + ", ".join(f"{w} {s}" for s, w in d.sorted_items()) + " }" if d else "{ }"


# --- commands -----------------------------------------------------------------


def cmd_parse(s: Session, a) -> int:
    m = s.model(a.file)
    for line in serialize_model(m).rstrip("\n").splitlines():
        s.emit(line)
    return OK


def _composed(s: Session, a, do_prune: bool):
    c = compose(s.model(a.test, "test"), s.model(a.proc, "process"), a.init_test, a.init_proc)
    return prune(c) if do_prune else c


def cmd_compose(s: Session, a, do_prune: bool = False) -> int:
    c = _composed(s, a, do_prune)
    for line in serialize_model(as_model(c, "pruned" if do_prune else "composed")).rstrip("\n").splitlines():
        s.emit(line)
    return OK


def cmd_outcomes(s: Session, a) -> int:
    engine = apply_resolution_based if a.method == "resolution" else apply_derivation_based
    poly = engine(s.model(a.test, "test"), s.model(a.proc, "process"), a.init_test, a.init_proc, a.max_schedulers)
    for line in poly.lines():
        s.emit(line)
    return OK


def cmd_converges(s: Session, a) -> int:
    m = s.model(a.file)
    init = m.distribution(a.init) if m.distributions else None
    res = is_convergent(m.plts, init)
    if res:
        s.emit("convergent")
        return OK
    s.emit("divergent: " + " ".join(sorted(res.divergent_states)))
    return FAILS


def cmd_extreme(s: Session, a) -> int:
    c = _composed(s, a, not a.no_prune)
    sigma = MemorylessScheduler(parse_scheduler(s.path(a.scheduler).read_text()))
    for st in sorted(c.plts.reachable(c.init)):
        if c.plts.tau_moves(st) and sigma.get(st) is None:
            raise UsageError(f"scheduler leaves unstable state {st!r} unresolved")
    d, _ = extreme_derivative(c, c.init, sigma, splits=0)
    s.emit("derivative " + fmt_dist(d))
    s.emit("outcome " + fmt_vector(c.omega, outcome(d, c.plts, c.omega)))
    return OK


def cmd_weak(s: Session, a) -> int:
    m = s.model(a.file)
    src = parse_dist(a.source) if a.source else m.distribution(a.init)
    tgt = parse_dist(a.target)
    if a.label in (None, "tau"):
        wit = weak_derivative_check(m.plts, src, tgt, extreme=a.extreme, unroll_depth=a.unroll_depth)
    else:
        if a.extreme:
            raise UsageError("--extreme applies to tau derivations only")
        wit = weak_action(m.plts, src, action(a.label), tgt, unroll_depth=a.unroll_depth)
    if wit is None:
        s.emit("no derivation")
        return FAILS
    s.emit("derivation found" + (" (bounded search)" if wit.bounded else ""))
    return OK


def cmd_compare(s: Session, a) -> int:
    left_name = a.left or (a.positional[0] if len(a.positional) > 0 else None)
    right_name = a.right or (a.positional[1] if len(a.positional) > 1 else None)
    if not left_name or not right_name or len(a.positional) > 2:
        raise UsageError("compare needs exactly a left and a right process")
    left, right = s.model(left_name, "process"), s.model(right_name, "process")
    tests = corpus.tests_in(s.path(a.tests))
    if not tests:
        raise UsageError(f"no tests under {a.tests}")
    method = apply_resolution_based if a.method == "resolution" else apply_derivation_based
    engine = lambda t, p: method(t, p, None, None, a.max_schedulers)  # noqa: E731
    v = preorder_on_suite(a.kind, left, right, tests, engine, stop_at_first=False)
    if v.omega:
        s.emit("omega " + " ".join(v.omega))
    for name, ok in v.per_test:
        s.emit(f"test {name}: {'holds' if ok else 'fails'}")
    if v.holds:
        s.emit(f"{left.name} {a.kind} {right.name}: holds")
        return OK
    s.emit(f"{left.name} {a.kind} {right.name}: fails")
    s.emit(v.counterexample.describe(v.omega or ()))
    return FAILS


def cmd_failsim(s: Session, a) -> int:
    left, right = s.model(a.left, "process"), s.model(a.right, "process")
    if a.action == "search":
        r = bounded_candidate_search(left, right, a.depth)
        if r is None:
            s.emit("unknown: no candidate found")
            return FAILS
        s.emit(f"{left.name} <=FS {right.name}: holds")
        for line in serialize_candidate(r).rstrip("\n").splitlines():
            s.emit(line)
        return OK
    if a.candidate is None:
        raise UsageError(f"failsim {a.action} needs a candidate file")
    r = parse_candidate(s.path(a.candidate).read_text())
    if a.action == "validate":
        violations = validate_candidate(right.plts, left.plts, r)
        for v in violations:
            s.emit(str(v))
        s.emit("valid" if not violations else f"{len(violations)} violations")
        return FAILS if violations else OK
    v = fs_leq(left, right, r)
    s.emit(f"{left.name} <=FS {right.name}: {'holds' if v else 'fails'}")
    return OK if v else FAILS


def cmd_corpus(s: Session, a) -> int:
    results = corpus.run_corpus()
    for r in results:
        s.emit(f"{'PASS' if r.passed else 'FAIL'} {r.name}" + (f": {r.detail}" if r.detail else ""))
    failed = sum(not r.passed for r in results)
    s.emit(f"{len(results) - failed}/{len(results)} checks passed")
    return OK if not failed else FAILS


# --- argument parsing ---------------------------------------------------------


def _pair_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("test")
    p.add_argument("proc")
    p.add_argument("--init-test")
    p.add_argument("--init-proc")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-schedulers", type=int, default=DEFAULT_MAX_SCHEDULERS)
    common.add_argument("--unroll-depth", type=int, default=None, help="bounded search on divergent inputs")
    common.add_argument("--report", help="write a JSON run report here")

    ap = argparse.ArgumentParser(prog="preorderlab", description="Testing preorders for probabilistic processes.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and print a model canonically")
    p.add_argument("file")
    p.set_defaults(run=cmd_parse)

    p = sub.add_parser("compose", parents=[common], help="apply a test to a process")
    _pair_args(p)
    p.set_defaults(run=cmd_compose)

    p = sub.add_parser("prune", parents=[common], help="compose, then prune to omega-respecting form")
    _pair_args(p)
    p.set_defaults(run=lambda s, a: cmd_compose(s, a, True))

    p = sub.add_parser("outcomes", parents=[common], help="vertices of the outcome set")
    _pair_args(p)
    p.add_argument("--method", choices=("resolution", "derivation"), default="resolution")
    p.set_defaults(run=cmd_outcomes)

    p = sub.add_parser("converges", parents=[common], help="check convergence")
    p.add_argument("file")
    p.add_argument("--init")
    p.set_defaults(run=cmd_converges)

    p = sub.add_parser("extreme", parents=[common], help="extreme derivative under a scheduler")
    _pair_args(p)
    p.add_argument("--scheduler", required=True)
    p.add_argument("--no-prune", action="store_true")
    p.set_defaults(run=cmd_extreme)

    p = sub.add_parser("weak", parents=[common], help="decide a weak derivation or weak action")
    p.add_argument("file")
    p.add_argument("--from", dest="source", help="source subdistribution (default: the model's init)")
    p.add_argument("--init")
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--label", help="visible action; omit for a tau derivation")
    p.add_argument("--extreme", action="store_true")
    p.set_defaults(run=cmd_weak)

    p = sub.add_parser("compare", parents=[common], help="decide a preorder on a test suite")
    p.add_argument("positional", nargs="*", metavar="PROC")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--tests", required=True, help="test file or directory")
    p.add_argument("--method", choices=("resolution", "derivation"), default="resolution")
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("failsim", parents=[common], help="failure simulation")
    p.add_argument("action", choices=("validate", "check", "search"))
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("candidate", nargs="?")
    p.add_argument("--depth", type=int, default=2)
    p.set_defaults(run=cmd_failsim)

    p = sub.add_parser("corpus", parents=[common], help="replay the bundled corpus")
    p.add_argument("action", choices=("run",))
    p.set_defaults(run=cmd_corpus)
    return ap


INPUT_ERRORS = (ModelError, UsageError, OSError, DivergentInput, NotStable, StateSpaceTooLarge, CandidateInvalid, ValueError)


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    session = Session(argv, out)
    start = time.perf_counter()
    run: Callable = args.run
    try:
        code = run(session, args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=err)
        code = BAD_INPUT
    session.report.exit_code = code
    session.report.seconds = time.perf_counter() - start
    if args.report:
        Path(args.report).write_text(session.report.to_json() + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
