import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from preorderlab import corpus
from preorderlab.composition import as_process_plts, compose, pair_name, prune
from preorderlab.core import EPSILON, TAU, Subdist, action, combine
from preorderlab.derivation import DivergentInput, apply_derivation_based
from preorderlab.failsim import (
    CandidateInvalid,
    ClauseI,
    ClauseII,
    FailureSimCandidate,
    RefusalQuery,
    bounded_candidate_search,
    derivative_vertices,
    fs_leq,
    lifted_membership,
    maximal_refusals,
    parse_candidate,
    serialize_candidate,
    validate_candidate,
    weak_action,
    weak_refusal,
)
from preorderlab.frontend import ModelError, parse_model
from preorderlab.preorders import compare_polytopes

from gen import random_convergent_process, random_test

F = Fraction
HALF = F(1, 2)
A = action("a")


def identity(m):
    return FailureSimCandidate.of({s: [Subdist.point(s)] for s in m.plts.states})


def test_weak_action_examples(models):
    a = models["a"].plts
    assert weak_action(a, Subdist.point("g0"), A, Subdist.point("g1")) is not None
    for d in (Subdist.point("g0"), EPSILON):
        assert weak_action(a, d, TAU, d) is not None
    q2 = models["q2"].plts
    assert weak_action(q2, Subdist.point("q2"), A, Subdist.point("nil")) is not None
    assert weak_action(q2, Subdist.point("q2"), A, Subdist.point("q2f")) is None
    with pytest.raises(DivergentInput):
        weak_action(models["loop"].plts, Subdist.point("d"), TAU, Subdist.point("d"))


def test_weak_action_brute_force(models):
    # every a-derivative of q2 is a point on nil: both a-transitions lead there
    q2 = models["q2"].plts
    assert derivative_vertices(q2, Subdist.point("q2"), A) == {Subdist.point("nil")}
    assert weak_action(q2, Subdist.point("q2"), A, Subdist({"nil": HALF, "q2f": HALF})) is None


def test_weak_refusal_examples(models):
    dead = parse_model("model process z alphabet a state z { } init z = { 1 z }").plts
    assert weak_refusal(dead, RefusalQuery(Subdist.point("z"), {A})) is not None
    a = models["a"].plts
    assert weak_refusal(a, RefusalQuery(Subdist.point("g0"), {A})) is None
    assert weak_refusal(a, RefusalQuery(Subdist.point("g1"), {A})) is not None
    with pytest.raises(ValueError):
        RefusalQuery(EPSILON, {TAU})
    assert maximal_refusals(a, Subdist.point("g0"), [A]) == [frozenset()]
    assert maximal_refusals(a, Subdist.point("g1"), [A]) == [frozenset({A})]


def test_lifted_membership_examples():
    theta_s = Subdist({"x": HALF, "y": HALF})
    theta_u = Subdist.point("z")
    r = FailureSimCandidate.of({"s": [theta_s], "u": [theta_u]})
    assert lifted_membership(r, EPSILON, EPSILON) == {}
    assert lifted_membership(r, Subdist.point("s"), theta_s) == {("s", 0): 1}
    blend = combine([(HALF, theta_s), (HALF, theta_u)])
    assert lifted_membership(r, Subdist({"s": HALF, "u": HALF}), blend) is not None
    assert lifted_membership(r, Subdist.point("s"), theta_u) is None


@given(st.lists(st.integers(0, 4), min_size=3, max_size=3), st.integers(0, 4))
def test_lifted_membership_closed_under_blends(ws, k):
    gens = {"s": [Subdist.point("x"), Subdist({"x": HALF, "y": HALF})], "u": [Subdist.point("y"), Subdist.point("z")]}
    r = FailureSimCandidate.of(gens)
    pairs = [
        (Subdist.point("s"), Subdist.point("x")),
        (Subdist.point("u"), Subdist({"y": F(1, 4), "z": F(3, 4)})),
        (Subdist({"s": HALF, "u": HALF}), Subdist({"x": F(1, 4), "y": F(1, 2), "z": F(1, 4)})),
    ]
    for g, d in pairs:
        assert lifted_membership(r, g, d) is not None
    tot = sum(ws) or 1
    q = F(k, 4)
    g = combine([(F(w, tot), p[0]) for w, p in zip(ws, pairs)]) if sum(ws) else EPSILON
    d = combine([(F(w, tot), p[1]) for w, p in zip(ws, pairs)]) if sum(ws) else EPSILON
    assert lifted_membership(r, g, d) is not None
    assert lifted_membership(r, q * g, q * d) is not None


def test_validate_identity_on_deterministic(models):
    a = models["a"]
    assert validate_candidate(a.plts, a.plts, identity(a)) == []


def test_validate_reports_exact_violations(models):
    a = models["a"].plts
    r = FailureSimCandidate.of({"g0": [EPSILON], "g1": [Subdist.point("g1")]})
    assert validate_candidate(a, a, r) == [ClauseI("g0", EPSILON, "a", Subdist.point("g1"))]
    # relating the stable end state to a state that must do a breaks refusal
    r = FailureSimCandidate.of({"g0": [Subdist.point("g0")], "g1": [Subdist.point("g0")]})
    assert ClauseII("g1", Subdist.point("g0"), ("a",)) in validate_candidate(a, a, r)


def test_corpus_candidate(models):
    (left, right, r), = corpus.candidates()
    assert (left, right) == ("q2", "q1")
    assert validate_candidate(models["q1"].plts, models["q2"].plts, r) == []
    assert fs_leq(models["q2"], models["q1"], r)


def test_fs_leq_examples(models):
    for name in ("q1", "q2", "a"):
        m = models[name]
        assert fs_leq(m, m, identity(m))
    with pytest.raises(DivergentInput):
        fs_leq(models["loop"], models["a"], identity(models["a"]))
    bad = FailureSimCandidate.of({"g0": [EPSILON], "g1": [Subdist.point("g1")]})
    with pytest.raises(CandidateInvalid):
        fs_leq(models["a"], models["a"], bad)


def test_search_examples(models):
    a = models["a"]
    r = bounded_candidate_search(a, a, 1)
    assert r is not None and validate_candidate(a.plts, a.plts, r) == []
    r = bounded_candidate_search(models["q2"], models["q1"], 4)
    assert r is not None and fs_leq(models["q2"], models["q1"], r)
    b = parse_model("model process b alphabet b state s { b -> { 1 n } } state n { } init b = { 1 s }")
    assert bounded_candidate_search(a, b, 2) is None
    assert bounded_candidate_search(b, a, 2) is None


def test_candidate_format_round_trip():
    text = "q1 |- { 1 q2 }\nq1 |- { 1/2 q2c, 1/2 nil }\nnil |- { }\n"
    r = parse_candidate(text)
    assert r.generators("q1") == (Subdist.point("q2"), Subdist({"q2c": HALF, "nil": HALF})) or set(r.generators("q1")) == {
        Subdist.point("q2"),
        Subdist({"q2c": HALF, "nil": HALF}),
    }
    assert r.generators("nil") == (EPSILON,)
    assert parse_candidate(serialize_candidate(r)) == r
    with pytest.raises(ModelError):
        parse_candidate("q1 -> { 1 q2 }")


def test_removing_generators_keeps_refusal_failures(models):
    # clause (ii) is checked per generator, so dropping others never repairs it
    a = models["a"].plts
    r = FailureSimCandidate.of({"g0": [Subdist.point("g0")], "g1": [Subdist.point("g0"), Subdist.point("g1")]})
    before = {v for v in validate_candidate(a, a, r) if isinstance(v, ClauseII)}
    after = {v for v in validate_candidate(a, a, r.without([("g1", Subdist.point("g1"))])) if isinstance(v, ClauseII)}
    assert before <= after


def _induced(r: FailureSimCandidate, comp_right) -> FailureSimCandidate:
    """t|s is related to <t> || g for every generator g of s."""
    pairs = {}
    for name, (t, s) in comp_right.origin.items():
        gens = r.generators(s)
        pairs[name] = [Subdist({pair_name(t, u): w for u, w in g.items()}) for g in gens]
    return FailureSimCandidate.of(pairs)


def composition_preserved(left, right, r, test) -> bool:
    cl = prune(compose(test, left))
    cr = prune(compose(test, right))
    return validate_candidate(as_process_plts(cr), as_process_plts(cl), _induced(r, cr)) == []


def test_composition_preservation_on_corpus(models):
    for left, right, r in corpus.candidates():
        for t in corpus.suite():
            assert composition_preserved(models[left], models[right], r, t)


@pytest.mark.parametrize("seed", range(12))
def test_search_results_are_sound_for_outcomes(seed):
    rng = random.Random(seed)
    left = random_convergent_process(rng, 3, tau_bias=0.5, name="l")
    right = random_convergent_process(rng, 3, tau_bias=0.5, name="r")
    for l, r in ((left, right), (right, left), (left, left)):
        cand = bounded_candidate_search(l, r, 2)
        if l is r:
            assert cand is not None  # the identity survives refinement
        if cand is None:
            continue
        assert validate_candidate(r.plts, l.plts, cand) == []
        for _ in range(4):
            t = random_test(rng, 3, tau=0)
            assert compare_polytopes("rrmust", apply_derivation_based(t, l), apply_derivation_based(t, r))
