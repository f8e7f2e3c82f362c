"""The bundled corpus of fixture models and the checks replayed against it."""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .composition import compose, prune
from .derivation import apply_derivation_based, extreme_derivative, is_convergent, outcome
from .failsim import FailureSimCandidate, fs_leq, parse_candidate, validate_candidate
from .frontend import InvalidTest, SourceModel, load_model
from .polytope import OutcomePolytope
from .preorders import compare_polytopes, preorder_on_suite, reward_extremum
from .resolution import apply_resolution_based, count_schedulers, induced_resolution, iter_schedulers, value_lfp

ENV_VAR = "PREORDERLAB_CORPUS"
BUNDLED = Path(__file__).with_name("corpus")

F = Fraction


def corpus_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    return Path(override) if override else BUNDLED


def resolve_path(path: str | os.PathLike) -> Path:
    """Use ``path`` as given, else relative to the corpus (``corpus/x`` prefixes allowed)."""
    p = Path(path)
    if p.exists():
        return p
    parts = p.parts[1:] if p.parts and p.parts[0] == "corpus" else p.parts
    alt = corpus_dir().joinpath(*parts) if parts else corpus_dir()
    return alt if alt.exists() else p


def load(name: str) -> SourceModel:
    return load_model(resolve_path(name))


def model_files(root: Path | None = None, pattern: str = "*") -> list[Path]:
    root = root or corpus_dir()
    return sorted(p for p in root.rglob(pattern) if "bad-tests" not in p.parts)


def tests_in(root: Path) -> list[SourceModel]:
    root = resolve_path(root)
    if root.is_file():
        return [load_model(root)]
    return [load_model(p) for p in sorted(root.rglob("*.test")) if "bad-tests" not in p.relative_to(root).parts]


def suite() -> list[SourceModel]:
    return tests_in(corpus_dir())


def processes() -> list[SourceModel]:
    return [load_model(p) for p in model_files(pattern="*.proc")]


def candidates() -> list[tuple[str, str, FailureSimCandidate]]:
    """Failure-simulation candidates shipped as ``<left>_<right>.fs``."""
    out = []
    for p in model_files(pattern="*.fs"):
        left, right = p.stem.split("_", 1)
        out.append((left, right, parse_candidate(p.read_text())))
    return out


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _checks() -> list[tuple[str, Callable[[], str | None]]]:
    """Each check returns None on success or a failure description."""

    t1, q1, q2 = load("t1.test"), load("q1.proc"), load("q2.proc")
    tdiv, div_l, div_c = load("tdiv/tdiv.test"), load("divL.proc"), load("divC.proc")
    loop, fix_a, fix_prune = load("loop.proc"), load("a.proc"), load("prune.proc")
    h38 = (F(-1, 2), F(1))  # (-2, 4) scaled by 1/4

    def expect(actual, wanted):
        return None if actual == wanted else f"got {actual}, expected {wanted}"

    def both_engines(test, proc, wanted: OutcomePolytope):
        for engine in (apply_resolution_based, apply_derivation_based):
            got = engine(test, proc)
            if got != wanted:
                return f"{engine.__name__}: got {got.lines()}, expected {wanted.lines()}"
        return None

    def q1_outcomes():
        return both_engines(t1, q1, OutcomePolytope.hull(("w",), [(F(1),)]))

    def q1_single_resolution():
        c = prune(compose(t1, q1))
        if count_schedulers(c) != 1:
            return f"{count_schedulers(c)} schedulers"
        sigma = next(iter_schedulers(c))
        r = induced_resolution(c, sigma)
        if r.plts != c.plts.restrict(r.plts.states) or set(r.plts.states) != set(c.plts.states):
            return "resolution differs from the composition"
        return expect(value_lfp(r)["t|q1"], (F(1),))

    def q1_unpruned_is_pruned():
        c = compose(t1, q1)
        return None if prune(c) == c else "pruning changed the composition"

    def q2_outcomes():
        return both_engines(t1, q2, OutcomePolytope.hull(("w",), [(F(1, 2),), (F(1),)]))

    def q2_interpolation():
        a = apply_resolution_based(t1, q2)
        for k in range(1, 11):
            if not a.contains((1 - F(1, 2**k),)):
                return f"(1 - 1/2^{k}) w missing"
        return None

    def q2_scheduler_values():
        c = prune(compose(t1, q2))
        values = sorted(value_lfp(induced_resolution(c, s))["t|q2"] for s in iter_schedulers(c))
        return expect(values, [(F(1, 2),), (F(1),)])

    def div_extrema():
        a_l = apply_resolution_based(tdiv, div_l)
        a_c = apply_resolution_based(tdiv, div_c)
        got = (
            4 * reward_extremum(h38, a_l, "inf"),
            4 * reward_extremum(h38, a_l, "sup"),
            4 * reward_extremum(h38, a_c, "inf"),
            4 * reward_extremum(h38, a_c, "sup"),
        )
        return expect(got, (0, 1, -1, 1))

    def div_rrmust():
        v = preorder_on_suite("rrmust", div_l, div_c, [tdiv])
        if v.holds:
            return "rrmust unexpectedly holds"
        ce = v.counterexample
        if not ce.left > ce.right:
            return "separating reward does not replay"
        return None

    def div_scaled_reward_replays():
        a_l = apply_resolution_based(tdiv, div_l)
        a_c = apply_resolution_based(tdiv, div_c)
        return None if reward_extremum(h38, a_l, "inf") > reward_extremum(h38, a_c, "inf") else "no strict gap"

    def div_may_must():
        s = suite()
        for kind in ("pmay", "pmust"):
            for a, b in ((div_l, div_c), (div_c, div_l)):
                if not preorder_on_suite(kind, a, b, s, stop_at_first=False):
                    return f"{kind}({a.name}, {b.name}) fails"
        return None

    def prune_effect():
        pruned = apply_derivation_based(t1, fix_prune)
        raw = compose(t1, fix_prune)
        d, _ = extreme_derivative(raw, raw.init, next(iter_schedulers(raw)))
        unpruned = outcome(d, raw.plts, raw.omega)
        return expect((pruned.vertices, unpruned), (((F(1),),), (F(0),)))

    def loop_vs_a():
        h = (F(-1),)
        got = (
            reward_extremum(h, apply_derivation_based(t1, loop), "inf"),
            reward_extremum(h, apply_derivation_based(t1, fix_a), "inf"),
        )
        if got != (0, -1):
            return f"got {got}"
        if preorder_on_suite("rrmust", loop, fix_a, [t1]):
            return "rrmust(loop, a) unexpectedly holds"
        return None

    def loop_divergent():
        conv = is_convergent(loop.plts, loop.distribution())
        return None if not conv and conv.divergent_states == {"d"} else "loop reported convergent"

    def bad_tests_rejected():
        bad = sorted((corpus_dir() / "bad-tests").glob("*.test"))
        for p in bad:
            try:
                load_model(p)
            except InvalidTest:
                continue
            return f"{p.name} accepted"
        return None if bad else "no bad tests found"

    def duality():
        s = suite()
        procs = processes()
        for d in procs:
            for g in procs:
                for t in s:
                    if bool(preorder_on_suite("rrmay", d, g, [t])) != bool(preorder_on_suite("rrmust", g, d, [t])):
                        return f"{d.name}, {g.name}, {t.name}"
        return None

    def failsim_soundness():
        procs = {p.name: p for p in processes()}
        s = suite()
        for left, right, r in candidates():
            lm, rm = procs[left], procs[right]
            if validate_candidate(rm.plts, lm.plts, r):
                return f"candidate {left}_{right} does not validate"
            if not fs_leq(lm, rm, r):
                return f"{left} <=FS {right} fails"
            for t in s:
                if not compare_polytopes("rrmust", apply_derivation_based(t, lm), apply_derivation_based(t, rm)):
                    return f"{left} <=FS {right} but not rrmust on {t.name}"
        return None

    return [
        ("t1-q1: outcome set is {w:1} by both engines", q1_outcomes),
        ("t1-q1: single resolution, value w:1", q1_single_resolution),
        ("t1-q1: composition unaffected by pruning", q1_unpruned_is_pruned),
        ("t1-q2: outcome set is hull{w:1/2, w:1} by both engines", q2_outcomes),
        ("t1-q2: (1 - 1/2^k) w inside for k = 1..10", q2_interpolation),
        ("t1-q2: scheduler values w:1/2 and w:1", q2_scheduler_values),
        ("tdiv: h.A ranges are [0,1] and [-1,1]", div_extrema),
        ("tdiv: h = (-1/2, 1) separates divL from divC", div_scaled_reward_replays),
        ("tdiv: divL rrmust divC fails with a replayed reward", div_rrmust),
        ("corpus suite: divL, divC pmay/pmust equivalent", div_may_must),
        ("t1-prune: outcome 1 with pruning, 0 without", prune_effect),
        ("t1: loop vs a gives 0 vs -1 and rrmust fails", loop_vs_a),
        ("loop: divergent at d", loop_divergent),
        ("bad-tests: every file rejected", bad_tests_rejected),
        ("corpus: rrmay(D, G) iff rrmust(G, D) per test", duality),
        ("corpus: failure simulations imply rrmust", failsim_soundness),
    ]


def run_corpus() -> list[CheckResult]:
    out = []
    for name, check in _checks():
        try:
            msg = check()
        except Exception as exc:  # reported, not raised: one broken check should not hide the rest
            msg = f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, msg is None, msg or ""))
    return out


__all__ = [
    "BUNDLED",
    "CheckResult",
    "ENV_VAR",
    "candidates",
    "corpus_dir",
    "load",
    "processes",
    "resolve_path",
    "run_corpus",
    "suite",
    "tests_in",
]
